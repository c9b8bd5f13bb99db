"""
The bundled ONNX backend
========================

Deep feature extraction runs on a small self-contained ONNX reader,
writer, and numpy executor; there is no runtime dependency on an ONNX
package. This script builds a toy convolutional trunk in memory, saves
and reloads it, executes it, and plugs it into the feature-extractor
interface next to the hand-crafted fallback.
"""

import tempfile
from pathlib import Path

import numpy as np

from evolight import (
    FallbackFeatureExtractor,
    OnnxFeatureExtractor,
    feature_distance,
)
from evolight.onnx_backend import (
    SUPPORTED_OPS,
    load_model,
    make_graph,
    make_model,
    make_node,
    run_model,
    save_model,
)

#%%
# A conv -> relu -> maxpool trunk with random weights. Shapes use None
# for the spatial dims, so any input size works.

rng = np.random.default_rng(13)
w = rng.normal(0, 0.2, (12, 3, 3, 3)).astype(np.float32)
b = rng.normal(0, 0.1, (12,)).astype(np.float32)
nodes = [
    make_node("Conv", ["input", "w", "b"], ["conv"],
              kernel_shape=[3, 3], pads=[1, 1, 1, 1], strides=[1, 1]),
    make_node("Relu", ["conv"], ["relu"]),
    make_node("MaxPool", ["relu"], ["pool"],
              kernel_shape=[2, 2], strides=[2, 2]),
]
graph = make_graph(nodes, "toy_trunk",
                   inputs=[("input", (1, 3, None, None))],
                   outputs=[("pool", (1, 12, None, None))],
                   initializers={"w": w, "b": b})
model = make_model(graph)
print("executor understands:", ", ".join(sorted(SUPPORTED_OPS)))

#%%
# Round trip through the wire format. The file is a regular .onnx file;
# anything else that speaks ONNX can read it too.

path = Path(tempfile.mkdtemp(prefix="evolight_demo_")) / "toy.onnx"
save_model(model, path)
reloaded = load_model(path)
print(f"saved {path.stat().st_size} bytes, "
      f"{len(reloaded.graph.nodes)} nodes, opset {reloaded.opset_version}")

x = rng.random((1, 3, 32, 32)).astype(np.float32)
out = run_model(reloaded, {"input": x})["pool"]
print("forward pass:", x.shape, "->", out.shape)

#%%
# The same file behind the extractor interface. Images are resized to
# input_size, normalized, run through the trunk, and the feature map is
# pooled to one vector per image. The fallback extractor needs no model
# file at all and is what the engine uses by default.

deep = OnnxFeatureExtractor(path, input_size=32, pooled_dim=12)
fallback = FallbackFeatureExtractor()

img_a = rng.random((48, 64, 3))
img_b = np.clip(img_a * 1.6, 0, 1)

for name, ext in (("deep", deep), ("fallback", fallback)):
    fa, fb = ext.extract(img_a), ext.extract(img_b)
    print(f"{name:>8}: dim {fa.values.size}, "
          f"d(a,a)={feature_distance(fa, ext.extract(img_a)):.3f}, "
          f"d(a, 1.6*a)={feature_distance(fa, fb):.4f}")
