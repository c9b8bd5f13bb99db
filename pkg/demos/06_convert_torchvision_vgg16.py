"""
Exporting a real VGG16 trunk
============================

The engine's deep extractor expects an ONNX file whose graph maps a
1x3xSxS float image to either a (1, C) vector or a (1, C, h, w) feature
map. This script converts the torchvision VGG16 convolutional trunk
(13 convs, outputs 1x512xS/32xS/32) into that format using the bundled
writer, then cross-checks the numpy executor against torch.

Requires torch + torchvision. Pretrained weights are used when they can
be downloaded; otherwise the export falls back to random initialization,
which still exercises the full pipeline.

Usage: python demos/06_convert_torchvision_vgg16.py [OUT.onnx]
"""

import sys
from pathlib import Path

import numpy as np

from evolight.onnx_backend import (
    load_model,
    make_graph,
    make_model,
    make_node,
    run_model,
    save_model,
)

try:
    import torch
    from torchvision.models import vgg16
except ImportError:
    sys.exit("this demo needs torch and torchvision installed")

OUT_PATH = Path(sys.argv[1]) if len(sys.argv) > 1 else (
    Path(__file__).parent / "output" / "vgg16_trunk.onnx")
OUT_PATH.parent.mkdir(parents=True, exist_ok=True)

#%%
# Grab the trunk. VGG16's feature stage is a plain chain of Conv2d,
# ReLU, and MaxPool2d modules, which maps 1:1 onto the executor's
# supported ops.

try:
    from torchvision.models import VGG16_Weights

    net = vgg16(weights=VGG16_Weights.IMAGENET1K_V1).features.eval()
    print("using pretrained ImageNet weights")
except Exception as exc:
    net = vgg16(weights=None).features.eval()
    print(f"pretrained weights unavailable ({type(exc).__name__}); "
          "exporting randomly initialized trunk")


def _pair(v):
    return [v, v] if isinstance(v, int) else list(v)


nodes, initializers = [], {}
current = "input"
for idx, module in enumerate(net):
    kind = type(module).__name__
    out = f"t{idx}"
    if kind == "Conv2d":
        initializers[f"w{idx}"] = module.weight.detach().numpy()
        initializers[f"b{idx}"] = module.bias.detach().numpy()
        ph, pw = _pair(module.padding)
        nodes.append(make_node(
            "Conv", [current, f"w{idx}", f"b{idx}"], [out],
            kernel_shape=_pair(module.kernel_size),
            pads=[ph, pw, ph, pw], strides=_pair(module.stride)))
    elif kind == "ReLU":
        nodes.append(make_node("Relu", [current], [out]))
    elif kind == "MaxPool2d":
        nodes.append(make_node("MaxPool", [current], [out],
                               kernel_shape=_pair(module.kernel_size),
                               strides=_pair(module.stride)))
    else:
        sys.exit(f"unexpected module in trunk: {kind}")
    current = out

graph = make_graph(nodes, "vgg16_trunk",
                   inputs=[("input", (1, 3, None, None))],
                   outputs=[(current, (1, 512, None, None))],
                   initializers=initializers)
save_model(make_model(graph), OUT_PATH)
print(f"wrote {OUT_PATH} ({OUT_PATH.stat().st_size / 1e6:.1f} MB, "
      f"{len(nodes)} nodes)")

#%%
# Cross-check: same random input through torch and through the bundled
# executor, reading the model back from disk so the round trip is part
# of the test. float32 accumulation order differs, so expect ~1e-6.

x = np.random.default_rng(0).random((1, 3, 64, 64)).astype(np.float32)
with torch.no_grad():
    want = net(torch.from_numpy(x)).numpy()
got = run_model(load_model(OUT_PATH), {"input": x})[current]
print(f"torch {want.shape} vs bundled {got.shape}, "
      f"max |err| {np.abs(want - got).max():.2e}")

#%%
# The file is now usable as `enhance --model OUT.onnx ...` or via
# OnnxFeatureExtractor(OUT_PATH). Default preprocessing resizes to
# 224x224 and the 1x512x7x7 output is average-pooled to 512 features.

print("try: enhance --input photos/ --output out/ --model", OUT_PATH)
