"""Image I/O, color conversion, histograms, and scalar statistics.

Images are numpy float64 arrays of shape (H, W, 3) in RGB order with
values in [0, 1]. Grayscale images are (H, W) arrays in [0, 1]. All
functions treat arrays as immutable and never write to their inputs.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

# ITU-R BT.601 luma weights, RGB order
GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114])

SUPPORTED_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp")

HISTOGRAM_BINS = 256


def validate_image(img: np.ndarray) -> np.ndarray:
    """Check that img is a (H, W, 3) float array with finite values in [0, 1]."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) array, got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"image has empty spatial dims: {img.shape}")
    if not np.issubdtype(img.dtype, np.floating):
        raise ValueError(f"expected float dtype, got {img.dtype}")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite values")
    if img.min() < 0.0 or img.max() > 1.0:
        raise ValueError("image values outside [0, 1]")
    return img


def load_image(path) -> np.ndarray:
    """Load an 8-bit image file (PNG/JPEG/BMP) as float64 RGB in [0, 1].

    Grayscale and paletted files are expanded to three channels; alpha is
    dropped. Raises OSError for unreadable files and ValueError for
    degenerate (zero-area) images.
    """
    with Image.open(path) as im:
        rgb = im.convert("RGB")
        arr = np.asarray(rgb, dtype=np.float64) / 255.0
    if arr.ndim != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"degenerate image {path}: shape {arr.shape}")
    return arr


def save_image(path, img: np.ndarray) -> None:
    """Write img as an 8-bit RGB file; format follows the path suffix.

    Quantization is round(v * 255) clamped to [0, 255]; exact halfway
    cases follow numpy rint (ties to even).
    """
    img = validate_image(img)
    u8 = np.rint(img * 255.0).astype(np.uint8)
    Image.fromarray(u8, mode="RGB").save(path)


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """BT.601 luma: 0.299 R + 0.587 G + 0.114 B, shape (H, W).

    Summation order (R + B) + G makes a white pixel map to exactly 1.0,
    which left-to-right accumulation does not.
    """
    img = np.asarray(img)
    if img.ndim == 2:
        return img
    return (0.299 * img[..., 0] + 0.114 * img[..., 2]) + 0.587 * img[..., 1]


def histogram256(gray: np.ndarray) -> np.ndarray:
    """256-bin count histogram of a grayscale image in [0, 1].

    Bin index is floor(v * 255 + 0.5) clamped to [0, 255], i.e. the
    nearest 8-bit level. Returns int64 counts summing to the pixel count.
    """
    gray = np.asarray(gray)
    if gray.size == 0:
        raise ValueError("empty image")
    idx = np.floor(gray * 255.0 + 0.5).astype(np.int64)
    np.clip(idx, 0, HISTOGRAM_BINS - 1, out=idx)
    return np.bincount(idx.ravel(), minlength=HISTOGRAM_BINS)


def shannon_entropy(hist: np.ndarray) -> float:
    """Shannon entropy in bits of a count histogram; zero bins contribute 0."""
    hist = np.asarray(hist, dtype=np.float64)
    total = hist.sum()
    if total <= 0:
        raise ValueError("histogram has no mass")
    p = hist[hist > 0] / total
    # + 0.0 keeps a single-bin histogram from returning -0.0
    return float(-(p * np.log2(p)).sum() + 0.0)


def image_entropy(img: np.ndarray) -> float:
    """Entropy in bits of the 256-bin quantized grayscale histogram."""
    return shannon_entropy(histogram256(to_grayscale(img)))


def mean_brightness(img: np.ndarray) -> float:
    """Mean over all pixels and channels, in [0, 1]."""
    return float(np.asarray(img).mean())


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resample to (out_h, out_w) using half-pixel-aligned centers.

    Output pixel (i, j) samples the source at
    ((i + 0.5) * H / out_h - 0.5, (j + 0.5) * W / out_w - 0.5) with edge
    clamping, matching the common align_corners=False convention. Works for
    (H, W) and (H, W, C) arrays.
    """
    img = np.asarray(img, dtype=np.float64)
    if out_h < 1 or out_w < 1:
        raise ValueError("output size must be positive")
    h, w = img.shape[0], img.shape[1]

    def axis_coords(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        lo = np.floor(src).astype(np.int64)
        frac = src - lo
        lo0 = np.clip(lo, 0, n_in - 1)
        lo1 = np.clip(lo + 1, 0, n_in - 1)
        return lo0, lo1, frac

    y0, y1, fy = axis_coords(h, out_h)
    x0, x1, fx = axis_coords(w, out_w)
    fy = fy.reshape(-1, 1) if img.ndim == 2 else fy.reshape(-1, 1, 1)
    fx = fx.reshape(1, -1) if img.ndim == 2 else fx.reshape(1, -1, 1)
    top = img[y0][:, x0] * (1.0 - fx) + img[y0][:, x1] * fx
    bot = img[y1][:, x0] * (1.0 - fx) + img[y1][:, x1] * fx
    return top * (1.0 - fy) + bot * fy
