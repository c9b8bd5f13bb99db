"""Three-parameter pixel enhancement: brightness shift, contrast scale, gamma.

The operator chain is fixed: brightness, then contrast, then gamma, with
clamping to [0, 1] after every stage. Inputs are float RGB images in
[0, 1] (see evolight.image); outputs always stay in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EnhanceParams:
    """One enhancement setting, the genome of the evolutionary search.

    brightness is an additive shift in 8-bit counts (applied as
    brightness / 255 on normalized pixels), contrast is a linear scale
    factor, and gamma remaps intensity as v ** (1 / gamma), so values
    above 1 brighten midtones.
    """

    brightness: float
    contrast: float
    gamma: float

    def __post_init__(self):
        for name in ("brightness", "contrast", "gamma"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.contrast <= 0.0:
            raise ValueError(f"contrast must be positive, got {self.contrast!r}")
        if self.gamma <= 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.brightness, self.contrast, self.gamma])

    @classmethod
    def from_array(cls, genes) -> "EnhanceParams":
        b, c, g = (float(v) for v in genes)
        return cls(b, c, g)


IDENTITY_PARAMS = EnhanceParams(brightness=0.0, contrast=1.0, gamma=1.0)


@dataclass(frozen=True)
class ParamBounds:
    """Closed per-gene intervals; out-of-range genes are clipped back in."""

    brightness: tuple[float, float] = (-10.0, 60.0)
    contrast: tuple[float, float] = (1.0, 2.0)
    gamma: tuple[float, float] = (1.0, 2.0)

    def __post_init__(self):
        for name in ("brightness", "contrast", "gamma"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"{name} bounds must be a finite (lo, hi) with lo < hi")
        if self.contrast[0] <= 0.0:
            raise ValueError("contrast lower bound must be positive")
        if self.gamma[0] <= 0.0:
            raise ValueError("gamma lower bound must be positive")

    @property
    def lows(self) -> np.ndarray:
        return np.array([self.brightness[0], self.contrast[0], self.gamma[0]])

    @property
    def highs(self) -> np.ndarray:
        return np.array([self.brightness[1], self.contrast[1], self.gamma[1]])

    @property
    def ranges(self) -> np.ndarray:
        return self.highs - self.lows

    def contains(self, params: EnhanceParams) -> bool:
        genes = params.as_array()
        return bool(np.all(genes >= self.lows) and np.all(genes <= self.highs))


def clip_params(params: EnhanceParams, bounds: ParamBounds) -> EnhanceParams:
    """Clamp each gene into its bound interval. In-range genes pass untouched."""
    genes = np.clip(params.as_array(), bounds.lows, bounds.highs)
    return EnhanceParams.from_array(genes)


def apply_brightness(img: np.ndarray, shift: float) -> np.ndarray:
    """Add shift / 255 to every channel and clamp to [0, 1]."""
    if not math.isfinite(shift):
        raise ValueError(f"brightness shift must be finite, got {shift!r}")
    if shift == 0.0:
        return img
    return np.clip(img + shift / 255.0, 0.0, 1.0)


def apply_contrast(img: np.ndarray, factor: float) -> np.ndarray:
    """Scale every channel by factor (> 0) and clamp to [0, 1]."""
    if not (math.isfinite(factor) and factor > 0.0):
        raise ValueError(f"contrast factor must be positive, got {factor!r}")
    if factor == 1.0:
        return img
    return np.clip(img * factor, 0.0, 1.0)


def apply_gamma(img: np.ndarray, gamma: float) -> np.ndarray:
    """Raise every channel to 1 / gamma (gamma > 0); [0, 1] maps to itself."""
    if not (math.isfinite(gamma) and gamma > 0.0):
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    if gamma == 1.0:
        return img
    return np.clip(np.asarray(img) ** (1.0 / gamma), 0.0, 1.0)


def enhance(img: np.ndarray, params: EnhanceParams) -> np.ndarray:
    """Apply brightness, then contrast, then gamma.

    Identity parameters (0, 1, 1) return the input array unchanged; treat
    results as read-only.
    """
    out = apply_brightness(img, params.brightness)
    out = apply_contrast(out, params.contrast)
    return apply_gamma(out, params.gamma)
