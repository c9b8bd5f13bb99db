"""Feature extraction and the perceptual distance used by the second objective.

Two interchangeable extractors:

* FallbackFeatureExtractor: deterministic, model-free, hand-checkable. Used
  when no model file is given.
* OnnxFeatureExtractor: runs a serialized convolutional trunk (e.g. a VGG16
  feature stack) through the bundled numpy ONNX executor.

Both return flat float64 vectors tagged with an extractor id; distances are
only defined between vectors from the same extractor.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from evolight import onnx_backend
from evolight.image import resize_bilinear, to_grayscale, validate_image

# channel statistics the pretrained trunks expect (RGB order)
IMAGENET_MEAN = np.array([0.485, 0.456, 0.406])
IMAGENET_STD = np.array([0.229, 0.224, 0.225])

FALLBACK_GRID = 16
FALLBACK_GRADIENT_BINS = 16
FALLBACK_DIM = FALLBACK_GRID * FALLBACK_GRID + FALLBACK_GRADIENT_BINS


@dataclass(frozen=True)
class FeatureVector:
    """A flat descriptor plus the id of the extractor that produced it."""

    values: np.ndarray
    extractor_id: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel()
        object.__setattr__(self, "values", v)
        if v.size == 0:
            raise ValueError("empty feature vector")
        if not np.all(np.isfinite(v)):
            raise ValueError("feature vector contains non-finite values")


@dataclass(frozen=True)
class ExtractorSpec:
    """Serializable description of which extractor to build.

    kind is "fallback" or "deep-model"; the remaining fields only matter
    for the deep extractor. pooling picks how a spatial map collapses to
    one value per channel.
    """

    kind: str = "fallback"
    model_path: str | None = None
    input_size: int = 224
    pooled_dim: int = 512
    pooling: str = "avg"

    def __post_init__(self):
        if self.kind not in ("fallback", "deep-model"):
            raise ValueError(f"unknown extractor kind {self.kind!r}")
        if self.kind == "deep-model" and not self.model_path:
            raise ValueError("deep-model extractor needs a model_path")
        if self.input_size < 1:
            raise ValueError("input_size must be positive")
        if self.pooled_dim < 1:
            raise ValueError("pooled_dim must be positive")
        if self.pooling not in ("avg", "max"):
            raise ValueError(f"pooling must be 'avg' or 'max', got {self.pooling!r}")


@lru_cache(maxsize=64)
def _overlap_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Row i holds the fraction of output cell i covered by each input pixel.

    Cells are equal-length intervals over [0, n_in]; weights in each row
    sum to 1, so a constant signal stays constant. Cached per size; treat
    the result as read-only.
    """
    m = np.zeros((n_out, n_in))
    cell = n_in / n_out
    for i in range(n_out):
        lo = i * cell
        hi = (i + 1) * cell
        j0 = int(math.floor(lo))
        j1 = min(int(math.ceil(hi)), n_in)
        for j in range(j0, j1):
            w = min(hi, j + 1) - max(lo, j)
            if w > 0:
                m[i, j] = w
        m[i] /= cell
    return m


class FallbackFeatureExtractor:
    """Deterministic 272-dim descriptor needing no model file.

    Layout: 256 values of the grayscale image area-averaged onto a 16 x 16
    grid (row-major), then a 16-bin normalized histogram of gradient
    magnitudes. Gradients are forward differences, zero on the last row and
    column; magnitudes lie in [0, sqrt(2)] and bin k covers
    [k * sqrt(2) / 16, (k + 1) * sqrt(2) / 16) with the top edge folded
    into bin 15.
    """

    extractor_id = f"fallback:grid{FALLBACK_GRID}+grad{FALLBACK_GRADIENT_BINS}"
    dim = FALLBACK_DIM

    def extract(self, img: np.ndarray) -> FeatureVector:
        gray = to_grayscale(validate_image(img))
        h, w = gray.shape
        grid = _overlap_matrix(h, FALLBACK_GRID) @ gray @ _overlap_matrix(w, FALLBACK_GRID).T

        gx = np.zeros_like(gray)
        gy = np.zeros_like(gray)
        gx[:, :-1] = gray[:, 1:] - gray[:, :-1]
        gy[:-1, :] = gray[1:, :] - gray[:-1, :]
        mag = np.hypot(gx, gy)
        idx = np.minimum(
            (mag * (FALLBACK_GRADIENT_BINS / math.sqrt(2.0))).astype(np.int64),
            FALLBACK_GRADIENT_BINS - 1,
        )
        hist = np.bincount(idx.ravel(), minlength=FALLBACK_GRADIENT_BINS) / mag.size

        return FeatureVector(np.concatenate([grid.ravel(), hist]), self.extractor_id)


class OnnxFeatureExtractor:
    """Deep features from a serialized convolutional trunk.

    Preprocessing: bilinear resize to input_size x input_size, per-channel
    normalization with the ImageNet mean/std, then NCHW float32. The model
    must take one such tensor and emit either (1, pooled_dim) directly or a
    (1, pooled_dim, h, w) map, which is collapsed by the configured pooling.
    """

    def __init__(self, model_path, input_size: int = 224, pooled_dim: int = 512,
                 pooling: str = "avg"):
        if pooling not in ("avg", "max"):
            raise ValueError(f"pooling must be 'avg' or 'max', got {pooling!r}")
        self.model = onnx_backend.load_model(model_path)
        graph = self.model.graph
        feed_names = [name for name, _ in graph.inputs
                      if name not in graph.initializers]
        if len(feed_names) != 1:
            raise ValueError(
                f"model must have exactly one data input, found {feed_names}")
        if len(graph.outputs) != 1:
            raise ValueError("model must have exactly one output")
        self.input_name = feed_names[0]
        self.output_name = graph.outputs[0][0]
        self.input_size = int(input_size)
        self.pooled_dim = int(pooled_dim)
        self.pooling = pooling
        self.extractor_id = (f"onnx:{os.path.basename(str(model_path))}"
                             f":{self.input_size}:{self.pooling}")

    def _preprocess(self, img: np.ndarray) -> np.ndarray:
        x = resize_bilinear(img, self.input_size, self.input_size)
        x = (x - IMAGENET_MEAN) / IMAGENET_STD
        return x.transpose(2, 0, 1)[None].astype(np.float32)

    def extract(self, img: np.ndarray) -> FeatureVector:
        tensor = self._preprocess(validate_image(img))
        out = onnx_backend.run_graph(self.model.graph, {self.input_name: tensor})
        feat = np.asarray(out[self.output_name], dtype=np.float64)
        if feat.ndim == 4:
            feat = feat.max(axis=(2, 3)) if self.pooling == "max" \
                else feat.mean(axis=(2, 3))
        if feat.ndim != 2 or feat.shape[0] != 1:
            raise ValueError(f"unexpected model output shape {feat.shape}")
        if feat.shape[1] != self.pooled_dim:
            raise ValueError(
                f"model emits {feat.shape[1]} channels, expected {self.pooled_dim}")
        return FeatureVector(feat.ravel(), self.extractor_id)


def create_extractor(spec: ExtractorSpec):
    """Build the extractor described by spec."""
    if spec.kind == "fallback":
        return FallbackFeatureExtractor()
    return OnnxFeatureExtractor(spec.model_path, spec.input_size,
                                spec.pooled_dim, spec.pooling)


def feature_distance(a: FeatureVector, b: FeatureVector) -> float:
    """Euclidean (L2) distance between two vectors from the same extractor."""
    if a.extractor_id != b.extractor_id:
        raise ValueError(
            f"cannot compare features from {a.extractor_id!r} and {b.extractor_id!r}")
    if a.values.shape != b.values.shape:
        raise ValueError(
            f"feature length mismatch: {a.values.shape} vs {b.values.shape}")
    return float(np.linalg.norm(a.values - b.values))
