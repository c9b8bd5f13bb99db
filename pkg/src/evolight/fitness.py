"""The two minimized objectives scoring one enhancement of one image.

f1 is the negated grayscale histogram entropy (lower = more detail
uncovered). f2 is the L2 feature distance to the original plus a weighted
hinge penalty that pushes mean brightness into a target band, so content
is preserved while exposure lands somewhere natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from evolight.enhance import EnhanceParams, enhance
from evolight.features import FeatureVector, feature_distance
from evolight.image import image_entropy, mean_brightness


@dataclass(frozen=True)
class FitnessPair:
    """One point in objective space; both components are minimized."""

    f1: float
    f2: float

    def __post_init__(self):
        if not (math.isfinite(self.f1) and math.isfinite(self.f2)):
            raise ValueError(f"fitness must be finite, got ({self.f1!r}, {self.f2!r})")

    def as_tuple(self) -> tuple[float, float]:
        return (self.f1, self.f2)


def dominates(a: FitnessPair, b: FitnessPair) -> bool:
    """Pareto dominance: a is no worse in both objectives and better in one."""
    return (a.f1 <= b.f1 and a.f2 <= b.f2
            and (a.f1 < b.f1 or a.f2 < b.f2))


@dataclass(frozen=True)
class PenaltyConfig:
    """Mean-brightness band [low, high] and the weight of leaving it."""

    low: float = 0.35
    high: float = 0.7
    weight: float = 30.0

    def __post_init__(self):
        if not (0.0 <= self.low < self.high <= 1.0):
            raise ValueError(
                f"need 0 <= low < high <= 1, got [{self.low!r}, {self.high!r}]")
        if not (math.isfinite(self.weight) and self.weight >= 0.0):
            raise ValueError(f"weight must be >= 0, got {self.weight!r}")


def brightness_penalty(mean: float, cfg: PenaltyConfig) -> float:
    """Two-sided hinge: distance of mean below low plus above high.

    Zero inside the band (endpoints included); grows linearly with slope 1
    outside. The fitness weight is applied by the caller.
    """
    return max(0.0, cfg.low - mean) + max(0.0, mean - cfg.high)


@dataclass(frozen=True)
class Evaluation:
    """Fitness of one parameter setting plus the stats behind it."""

    fitness: FitnessPair
    entropy: float
    mean_brightness: float
    feature_distance: float
    penalty: float


def evaluate(params: EnhanceParams, original: np.ndarray,
             reference_features: FeatureVector, extractor,
             cfg: PenaltyConfig) -> Evaluation:
    """Score params against the original image.

    reference_features must be extractor's output for the original, passed
    in so callers can pay for it once per image.
    """
    enhanced = enhance(original, params)
    ent = image_entropy(enhanced)
    mean = mean_brightness(enhanced)
    dist = feature_distance(reference_features, extractor.extract(enhanced))
    pen = brightness_penalty(mean, cfg)
    pair = FitnessPair(f1=-ent, f2=dist + cfg.weight * pen)
    return Evaluation(fitness=pair, entropy=ent, mean_brightness=mean,
                      feature_distance=dist, penalty=pen)


class FitnessEvaluator:
    """Binds one original image to an extractor and penalty config.

    Extracts the original's features once at construction; each call then
    costs one enhancement pass plus one extraction.
    """

    def __init__(self, original: np.ndarray, extractor, cfg: PenaltyConfig):
        self.original = original
        self.extractor = extractor
        self.cfg = cfg
        self.reference_features = extractor.extract(original)

    def __call__(self, params: EnhanceParams) -> Evaluation:
        return evaluate(params, self.original, self.reference_features,
                        self.extractor, self.cfg)
