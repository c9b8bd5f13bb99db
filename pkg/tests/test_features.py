import math

import numpy as np
import pytest

from evolight.features import (
    FALLBACK_DIM,
    FallbackFeatureExtractor,
    FeatureVector,
    ExtractorSpec,
    create_extractor,
    feature_distance,
)
from evolight.image import to_grayscale


def fallback_oracle(img):
    """Brute-force re-implementation: per-cell area overlap via explicit
    loops over pixel/cell interval intersections, then gradient histogram."""
    gray = to_grayscale(img)
    h, w = gray.shape
    grid = np.zeros((16, 16))
    for gy in range(16):
        y0, y1 = gy * h / 16.0, (gy + 1) * h / 16.0
        for gx in range(16):
            x0, x1 = gx * w / 16.0, (gx + 1) * w / 16.0
            acc = 0.0
            for py in range(int(math.floor(y0)), min(int(math.ceil(y1)), h)):
                wy = min(y1, py + 1) - max(y0, py)
                if wy <= 0:
                    continue
                for px in range(int(math.floor(x0)), min(int(math.ceil(x1)), w)):
                    wx = min(x1, px + 1) - max(x0, px)
                    if wx > 0:
                        acc += gray[py, px] * wy * wx
            grid[gy, gx] = acc / ((y1 - y0) * (x1 - x0))

    hist = np.zeros(16)
    for py in range(h):
        for px in range(w):
            gx = gray[py, px + 1] - gray[py, px] if px + 1 < w else 0.0
            gy = gray[py + 1, px] - gray[py, px] if py + 1 < h else 0.0
            mag = math.hypot(gx, gy)
            idx = min(int(mag * 16.0 / math.sqrt(2.0)), 15)
            hist[idx] += 1
    return np.concatenate([grid.ravel(), hist / (h * w)])


def test_fallback_dimension_and_id():
    ext = FallbackFeatureExtractor()
    fv = ext.extract(np.random.default_rng(0).random((20, 30, 3)))
    assert fv.values.shape == (FALLBACK_DIM,) == (272,)
    assert fv.extractor_id == ext.extractor_id
    assert np.all(np.isfinite(fv.values))


def test_fallback_constant_image():
    img = np.full((32, 48, 3), 0.6)
    fv = FallbackFeatureExtractor().extract(img)
    luma = 0.6  # weights sum to 1
    assert np.allclose(fv.values[:256], luma, atol=1e-12)
    assert fv.values[256] == 1.0  # all gradient magnitudes in bin 0
    assert np.array_equal(fv.values[257:], np.zeros(15))


def test_fallback_checkerboard_block_means():
    # 32x32 board of 2x2 blocks: each 16x16 cell covers one block exactly
    tile = np.array([[0.0, 1.0], [1.0, 0.0]])
    board = np.tile(tile, (16, 16))
    img = np.stack([board] * 3, axis=-1)
    fv = FallbackFeatureExtractor().extract(img)
    assert np.allclose(fv.values[:256], 0.5, atol=1e-12)


def test_fallback_matches_bruteforce_oracle():
    rng = np.random.default_rng(1)
    ext = FallbackFeatureExtractor()
    for shape in [(16, 16), (20, 33), (64, 48)]:
        img = rng.random(shape + (3,))
        got = ext.extract(img).values
        want = fallback_oracle(img)
        assert np.max(np.abs(got - want)) < 1e-12


def test_fallback_deterministic():
    rng = np.random.default_rng(2)
    img = rng.random((24, 24, 3))
    ext = FallbackFeatureExtractor()
    assert np.array_equal(ext.extract(img).values, ext.extract(img).values)


def test_feature_vector_validation():
    with pytest.raises(ValueError):
        FeatureVector(np.array([]), "x")
    with pytest.raises(ValueError):
        FeatureVector(np.array([1.0, np.nan]), "x")


def test_distance_values_and_axioms():
    a = FeatureVector(np.array([0.0, 0.0]), "t")
    b = FeatureVector(np.array([3.0, 4.0]), "t")
    assert feature_distance(a, b) == 5.0
    assert feature_distance(a, a) == 0.0

    rng = np.random.default_rng(3)
    for _ in range(100):
        x = FeatureVector(rng.normal(size=8), "t")
        y = FeatureVector(rng.normal(size=8), "t")
        z = FeatureVector(rng.normal(size=8), "t")
        dxy = feature_distance(x, y)
        assert dxy >= 0.0
        assert dxy == feature_distance(y, x)
        assert dxy <= feature_distance(x, z) + feature_distance(z, y) + 1e-12


def test_distance_rejects_mismatches():
    a = FeatureVector(np.array([1.0, 2.0]), "one")
    b = FeatureVector(np.array([1.0, 2.0]), "two")
    with pytest.raises(ValueError):
        feature_distance(a, b)
    c = FeatureVector(np.array([1.0, 2.0, 3.0]), "one")
    with pytest.raises(ValueError):
        feature_distance(a, c)


def test_extractor_spec_validation():
    assert ExtractorSpec().kind == "fallback"
    with pytest.raises(ValueError):
        ExtractorSpec(kind="bogus")
    with pytest.raises(ValueError):
        ExtractorSpec(kind="deep-model")  # needs model_path
    with pytest.raises(ValueError):
        ExtractorSpec(pooling="median")
    with pytest.raises(ValueError):
        ExtractorSpec(pooled_dim=0)


def test_create_extractor_fallback():
    ext = create_extractor(ExtractorSpec())
    assert isinstance(ext, FallbackFeatureExtractor)
