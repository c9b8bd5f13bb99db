import numpy as np
import pytest

from evolight.enhance import EnhanceParams, IDENTITY_PARAMS
from evolight.features import FallbackFeatureExtractor, FeatureVector
from evolight.fitness import (
    Evaluation,
    FitnessEvaluator,
    FitnessPair,
    PenaltyConfig,
    brightness_penalty,
    dominates,
    evaluate,
)
from evolight.image import image_entropy, mean_brightness


class CountingExtractor(FallbackFeatureExtractor):
    def __init__(self):
        self.calls = 0

    def extract(self, img):
        self.calls += 1
        return super().extract(img)


def test_fitness_pair_rejects_non_finite():
    with pytest.raises(ValueError):
        FitnessPair(np.inf, 0.0)
    with pytest.raises(ValueError):
        FitnessPair(0.0, np.nan)


def test_dominates_table():
    assert dominates(FitnessPair(-5, 1), FitnessPair(-4, 2))
    assert not dominates(FitnessPair(-5, 2), FitnessPair(-4, 1))  # incomparable
    assert not dominates(FitnessPair(-4, 1), FitnessPair(-5, 2))
    assert not dominates(FitnessPair(-5, 1), FitnessPair(-5, 1))  # no strict part
    assert dominates(FitnessPair(-5, 1), FitnessPair(-5, 2))


def test_dominates_is_strict_partial_order():
    rng = np.random.default_rng(0)
    pairs = [FitnessPair(*rng.uniform(-8, 8, size=2)) for _ in range(60)]
    for a in pairs:
        assert not dominates(a, a)  # irreflexive
    for _ in range(500):
        a, b, c = (pairs[i] for i in rng.integers(0, len(pairs), size=3))
        if dominates(a, b):
            assert not dominates(b, a)  # asymmetric
            if dominates(b, c):
                assert dominates(a, c)  # transitive


def test_penalty_config_validation():
    with pytest.raises(ValueError):
        PenaltyConfig(low=0.8, high=0.7)
    with pytest.raises(ValueError):
        PenaltyConfig(low=-0.1)
    with pytest.raises(ValueError):
        PenaltyConfig(weight=-1.0)
    cfg = PenaltyConfig()
    assert (cfg.low, cfg.high, cfg.weight) == (0.35, 0.7, 30.0)


def test_penalty_band_values():
    cfg = PenaltyConfig()
    assert brightness_penalty(0.5, cfg) == 0.0
    assert brightness_penalty(0.35, cfg) == 0.0  # endpoints included
    assert brightness_penalty(0.7, cfg) == 0.0
    assert brightness_penalty(0.30, cfg) == pytest.approx(0.05, abs=1e-12)
    assert brightness_penalty(0.80, cfg) == pytest.approx(0.10, abs=1e-12)


def test_penalty_linear_slope_one():
    cfg = PenaltyConfig()
    rng = np.random.default_rng(1)
    for _ in range(200):
        m = rng.uniform(0, 1)
        pen = brightness_penalty(m, cfg)
        if cfg.low <= m <= cfg.high:
            assert pen == 0.0
        elif m < cfg.low:
            assert pen == pytest.approx(cfg.low - m, abs=1e-15)
        else:
            assert pen == pytest.approx(m - cfg.high, abs=1e-15)


def test_identity_evaluation_dark_constant():
    # constant 0.1 image: distance 0 exactly, f2 = 30 * (0.35 - 0.1) = 7.5
    img = np.full((8, 8, 3), 0.1)
    ext = FallbackFeatureExtractor()
    cfg = PenaltyConfig()
    ev = evaluate(IDENTITY_PARAMS, img, ext.extract(img), ext, cfg)
    assert ev.feature_distance == 0.0
    assert ev.fitness.f2 == pytest.approx(7.5, abs=1e-12)
    assert ev.entropy == 0.0
    assert ev.fitness.f1 == 0.0


def test_identity_evaluation_in_band_constant():
    img = np.full((8, 8, 3), 0.5)
    ext = FallbackFeatureExtractor()
    ev = evaluate(IDENTITY_PARAMS, img, ext.extract(img), ext, PenaltyConfig())
    assert ev.fitness.f1 == 0.0 and ev.fitness.f2 == 0.0


def test_identity_distance_always_zero():
    rng = np.random.default_rng(2)
    ext = FallbackFeatureExtractor()
    cfg = PenaltyConfig()
    for _ in range(20):
        img = rng.random((12, 10, 3))
        ev = evaluate(IDENTITY_PARAMS, img, ext.extract(img), ext, cfg)
        assert ev.feature_distance == 0.0
        assert ev.entropy == image_entropy(img)
        assert ev.mean_brightness == mean_brightness(img)


def test_evaluate_consistent_with_parts():
    rng = np.random.default_rng(3)
    img = rng.random((16, 16, 3)) * 0.3
    ext = FallbackFeatureExtractor()
    cfg = PenaltyConfig()
    params = EnhanceParams(20.0, 1.4, 1.6)
    ev = evaluate(params, img, ext.extract(img), ext, cfg)
    assert ev.fitness.f1 == -ev.entropy
    assert ev.fitness.f2 == pytest.approx(
        ev.feature_distance + cfg.weight * ev.penalty, abs=1e-12)
    assert isinstance(ev, Evaluation)


def test_evaluator_caches_reference_features():
    img = np.full((8, 8, 3), 0.4)
    ext = CountingExtractor()
    evaluator = FitnessEvaluator(img, ext, PenaltyConfig())
    assert ext.calls == 1  # reference extracted once at construction
    evaluator(IDENTITY_PARAMS)
    evaluator(EnhanceParams(10.0, 1.2, 1.1))
    assert ext.calls == 3  # one per evaluation afterwards
