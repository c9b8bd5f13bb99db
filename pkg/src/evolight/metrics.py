"""Reference-based quality metrics and the per-image report record.

PSNR and SSIM are computed on the 8-bit scale (pixel range 255) from the
float images, so scores match the usual implementations applied to saved
files up to quantization.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate1d

from evolight.enhance import EnhanceParams
from evolight.image import to_grayscale, validate_image

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = (0.01 * 255.0) ** 2
SSIM_C2 = (0.03 * 255.0) ** 2

# value written for psnr when the images are bit-identical (MSE = 0)
PSNR_IDENTICAL = "identical"

CSV_COLUMNS = (
    "image_id",
    "entropy_before",
    "entropy_after",
    "brightness_before",
    "brightness_after",
    "b",
    "c",
    "gamma",
    "psnr",
    "ssim",
    "runtime_ms",
)


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB on the 8-bit scale.

    Returns math.inf for bit-identical inputs; reports render that as
    "identical" rather than a number.
    """
    a = validate_image(a)
    b = validate_image(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    diff = (a - b) * 255.0
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / mse)


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    x = np.arange(size) - half
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _valid_filter(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Separable correlation keeping only fully-covered (valid) windows."""
    r = (kernel.size - 1) // 2
    out = correlate1d(img, kernel, axis=0, mode="constant")
    out = correlate1d(out, kernel, axis=1, mode="constant")
    return out[r:img.shape[0] - r, r:img.shape[1] - r]


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean structural similarity over valid 11x11 Gaussian windows.

    Grayscale (BT.601) on the 8-bit scale, sigma 1.5, the standard
    stabilizers C1 = (0.01 * 255)^2 and C2 = (0.03 * 255)^2. Identical
    inputs score exactly 1.0. Requires both dims >= 11.
    """
    a = validate_image(a)
    b = validate_image(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    x = to_grayscale(a) * 255.0
    y = to_grayscale(b) * 255.0
    if min(x.shape) < SSIM_WINDOW:
        raise ValueError(
            f"image smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window")

    k = _gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA)
    mu_x = _valid_filter(x, k)
    mu_y = _valid_filter(y, k)
    var_x = _valid_filter(x * x, k) - mu_x * mu_x
    var_y = _valid_filter(y * y, k) - mu_y * mu_y
    cov = _valid_filter(x * y, k) - mu_x * mu_y

    num = (2.0 * mu_x * mu_y + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_x * mu_x + mu_y * mu_y + SSIM_C1) * (var_x + var_y + SSIM_C2)
    return float(np.mean(num / den))


@dataclass
class MetricsReport:
    """Everything reported about one processed image.

    psnr/ssim stay None when no reference image exists. extra_scores holds
    externally computed named scores (e.g. a no-reference quality model);
    they are carried into the JSON report untouched.
    """

    image_id: str
    entropy_before: float
    entropy_after: float
    brightness_before: float
    brightness_after: float
    params: EnhanceParams
    psnr: float | None = None
    ssim: float | None = None
    runtime_ms: int = 0
    extra_scores: dict = field(default_factory=dict)

    def _render_psnr(self):
        if self.psnr is None:
            return None
        if math.isinf(self.psnr):
            return PSNR_IDENTICAL
        return self.psnr

    def to_row(self) -> list:
        """CSV row in CSV_COLUMNS order; missing metrics render empty."""
        p = self._render_psnr()
        return [
            self.image_id,
            repr(self.entropy_before),
            repr(self.entropy_after),
            repr(self.brightness_before),
            repr(self.brightness_after),
            repr(self.params.brightness),
            repr(self.params.contrast),
            repr(self.params.gamma),
            "" if p is None else (p if isinstance(p, str) else repr(p)),
            "" if self.ssim is None else repr(self.ssim),
            str(self.runtime_ms),
        ]

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "entropy_before": self.entropy_before,
            "entropy_after": self.entropy_after,
            "brightness_before": self.brightness_before,
            "brightness_after": self.brightness_after,
            "params": {
                "b": self.params.brightness,
                "c": self.params.contrast,
                "gamma": self.params.gamma,
            },
            "psnr": self._render_psnr(),
            "ssim": self.ssim,
            "runtime_ms": self.runtime_ms,
            "extra_scores": dict(self.extra_scores),
        }


def write_report_csv(reports, path) -> None:
    """One row per image in the given order, with a fixed header."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for report in reports:
            writer.writerow(report.to_row())


def write_report_json(reports, path, summary: dict | None = None) -> None:
    """JSON object with an "images" list and an optional "summary" block."""
    payload = {"images": [r.to_dict() for r in reports]}
    if summary is not None:
        payload["summary"] = summary
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, allow_nan=False)
        fh.write("\n")
