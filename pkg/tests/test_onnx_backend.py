import numpy as np
import pytest

from evolight import onnx_backend as ob
from evolight.features import OnnxFeatureExtractor


def conv_oracle(x, w, b, pads, strides, dilations=(1, 1)):
    """Direct quadruple-loop convolution."""
    n, ci, h, wd = x.shape
    co, _, kh, kw = w.shape
    pt, pl, pb, pr = pads
    sh, sw = strides
    dh, dw = dilations
    xp = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)))
    oh = (h + pt + pb - ((kh - 1) * dh + 1)) // sh + 1
    ow = (wd + pl + pr - ((kw - 1) * dw + 1)) // sw + 1
    out = np.zeros((n, co, oh, ow), dtype=np.float64)
    for oc in range(co):
        for i in range(oh):
            for j in range(ow):
                acc = 0.0
                for ic in range(ci):
                    for ki in range(kh):
                        for kj in range(kw):
                            acc += (xp[0, ic, i * sh + ki * dh, j * sw + kj * dw]
                                    * w[oc, ic, ki, kj])
                out[0, oc, i, j] = acc + (b[oc] if b is not None else 0.0)
    return out


def single_node_graph(node, in_shapes, out_name, initializers=None):
    inputs = [(name, shape) for name, shape in in_shapes.items()]
    return ob.make_graph([node], "g", inputs, [(out_name, ())], initializers)


def test_varint_round_trip():
    for v in [0, 1, 127, 128, 300, 2**32, 2**63, 2**64 - 1]:
        buf = ob._varint(v)
        got, pos = ob._read_varint(buf, 0)
        assert got == v and pos == len(buf)
    # negative ints encode as 64-bit two's complement
    buf = ob._varint(-1)
    got, _ = ob._read_varint(buf, 0)
    assert ob._signed64(got) == -1


def test_truncated_buffers_raise():
    with pytest.raises(ValueError):
        ob._read_varint(b"\x80\x80", 0)
    with pytest.raises(ValueError):
        ob.model_from_bytes(bytes([0x3A, 0x50]))  # ld field claiming 80 bytes


def test_model_round_trip():
    rng = np.random.default_rng(0)
    w = rng.normal(size=(4, 3, 3, 3)).astype(np.float32)
    b = rng.normal(size=(4,)).astype(np.float32)
    shape64 = np.array([1, -1], dtype=np.int64)
    nodes = [
        ob.make_node("Conv", ["x", "w", "b"], ["c"], name="conv0",
                     kernel_shape=[3, 3], pads=[1, 1, 1, 1], strides=[1, 1]),
        ob.make_node("Relu", ["c"], ["r"]),
        ob.make_node("Reshape", ["r", "shape"], ["y"]),
    ]
    graph = ob.make_graph(nodes, "round_trip",
                          inputs=[("x", (1, 3, 8, 8))],
                          outputs=[("y", (1, None))],
                          initializers={"w": w, "b": b, "shape": shape64})
    model = ob.make_model(graph, opset_version=13)
    model.producer = "round-trip-test"

    back = ob.model_from_bytes(ob.model_to_bytes(model))
    assert back.producer == "round-trip-test"
    assert back.opset_version == 13
    assert back.graph.name == "round_trip"
    assert [n.op_type for n in back.graph.nodes] == ["Conv", "Relu", "Reshape"]
    assert back.graph.nodes[0].name == "conv0"
    assert back.graph.nodes[0].attrs["pads"] == [1, 1, 1, 1]
    assert np.array_equal(back.graph.initializers["w"], w)
    assert back.graph.initializers["w"].dtype == np.float32
    assert np.array_equal(back.graph.initializers["shape"], shape64)
    assert back.graph.inputs == [("x", (1, 3, 8, 8))]
    assert back.graph.outputs == [("y", (1, None))]

    x = rng.normal(size=(1, 3, 8, 8)).astype(np.float32)
    y0 = ob.run_graph(graph, {"x": x})["y"]
    y1 = ob.run_graph(back.graph, {"x": x})["y"]
    assert np.array_equal(y0, y1)


def test_attribute_kinds_round_trip():
    node = ob.make_node("Constant", [], ["k"],
                        value=np.arange(6, dtype=np.float32).reshape(2, 3))
    node.attrs.update({"f_attr": 2.5, "i_attr": -7, "s_attr": "hello",
                       "ints_attr": [1, 2, 3], "floats_attr": [0.5, 1.5]})
    graph = ob.make_graph([node], "attrs", [], [("k", (2, 3))])
    back = ob.model_from_bytes(ob.model_to_bytes(ob.make_model(graph)))
    attrs = back.graph.nodes[0].attrs
    assert attrs["f_attr"] == 2.5
    assert attrs["i_attr"] == -7
    assert attrs["s_attr"] == "hello"
    assert attrs["ints_attr"] == [1, 2, 3]
    assert attrs["floats_attr"] == [0.5, 1.5]
    assert np.array_equal(attrs["value"],
                          np.arange(6, dtype=np.float32).reshape(2, 3))


def test_unknown_fields_are_skipped():
    graph = ob.make_graph([ob.make_node("Relu", ["x"], ["y"])], "g",
                          [("x", (1, 2))], [("y", (1, 2))])
    blob = ob.model_to_bytes(ob.make_model(graph))
    # append an unknown length-delimited field (number 63) at model level
    blob += ob._ld(63, b"mystery payload")
    back = ob.model_from_bytes(blob)
    assert back.graph.nodes[0].op_type == "Relu"


def test_unpacked_repeated_dims_parse():
    # dims written one varint field at a time instead of packed
    tensor = (ob._vint(1, 2) + ob._vint(1, 3)          # dims 2, 3
              + ob._vint(2, ob.TENSOR_FLOAT)
              + ob._ld(8, b"t")
              + ob._ld(9, np.arange(6, dtype="<f4").tobytes()))
    name, arr = ob._parse_tensor(tensor)
    assert name == "t"
    assert arr.shape == (2, 3)
    assert np.array_equal(arr, np.arange(6, dtype=np.float32).reshape(2, 3))


def test_typed_float_data_fallback():
    # payload in float_data (packed) instead of raw_data
    floats = np.array([1.0, 2.0, 3.0, 4.0], dtype="<f4")
    tensor = (ob._ld(1, ob._varint(2) + ob._varint(2))
              + ob._vint(2, ob.TENSOR_FLOAT)
              + ob._ld(4, floats.tobytes())
              + ob._ld(8, b"fd"))
    name, arr = ob._parse_tensor(tensor)
    assert np.array_equal(arr, floats.reshape(2, 2))


def test_conv_against_oracle():
    rng = np.random.default_rng(1)
    cases = [
        dict(pads=[0, 0, 0, 0], strides=[1, 1], dilations=[1, 1]),
        dict(pads=[1, 1, 1, 1], strides=[1, 1], dilations=[1, 1]),
        dict(pads=[1, 2, 1, 2], strides=[2, 2], dilations=[1, 1]),
        dict(pads=[2, 2, 2, 2], strides=[1, 1], dilations=[2, 2]),
    ]
    for case in cases:
        x = rng.normal(size=(1, 3, 9, 10))
        w = rng.normal(size=(5, 3, 3, 3))
        b = rng.normal(size=(5,))
        node = ob.make_node("Conv", ["x", "w", "b"], ["y"],
                            kernel_shape=[3, 3], **case)
        graph = single_node_graph(node, {"x": (1, 3, 9, 10)}, "y",
                                  {"w": w, "b": b})
        got = ob.run_graph(graph, {"x": x})["y"]
        want = conv_oracle(x, w, b, case["pads"], case["strides"],
                           case["dilations"])
        assert got.shape == want.shape
        assert np.max(np.abs(got - want)) < 1e-10


def test_pool_ops_against_oracle():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(1, 2, 6, 8))

    node = ob.make_node("MaxPool", ["x"], ["y"], kernel_shape=[2, 2],
                        strides=[2, 2])
    got = ob.run_graph(single_node_graph(node, {"x": x.shape}, "y"),
                       {"x": x})["y"]
    want = np.zeros((1, 2, 3, 4))
    for c in range(2):
        for i in range(3):
            for j in range(4):
                want[0, c, i, j] = x[0, c, 2*i:2*i+2, 2*j:2*j+2].max()
    assert np.array_equal(got, want)

    node = ob.make_node("AveragePool", ["x"], ["y"], kernel_shape=[3, 3],
                        strides=[1, 1])
    got = ob.run_graph(single_node_graph(node, {"x": x.shape}, "y"),
                       {"x": x})["y"]
    assert got.shape == (1, 2, 4, 6)
    for c in range(2):
        for i in range(4):
            for j in range(6):
                assert got[0, c, i, j] == pytest.approx(
                    x[0, c, i:i+3, j:j+3].mean(), abs=1e-12)

    node = ob.make_node("GlobalAveragePool", ["x"], ["y"])
    got = ob.run_graph(single_node_graph(node, {"x": x.shape}, "y"),
                       {"x": x})["y"]
    assert got.shape == (1, 2, 1, 1)
    assert np.allclose(got[0, :, 0, 0], x.mean(axis=(2, 3))[0], atol=1e-12)

    node = ob.make_node("GlobalMaxPool", ["x"], ["y"])
    got = ob.run_graph(single_node_graph(node, {"x": x.shape}, "y"),
                       {"x": x})["y"]
    assert np.array_equal(got[0, :, 0, 0], x.max(axis=(2, 3))[0])


def test_maxpool_padding_uses_neg_inf():
    x = -np.ones((1, 1, 2, 2))
    node = ob.make_node("MaxPool", ["x"], ["y"], kernel_shape=[2, 2],
                        strides=[2, 2], pads=[1, 1, 1, 1])
    got = ob.run_graph(single_node_graph(node, {"x": x.shape}, "y"),
                       {"x": x})["y"]
    # padded corners must pick the real -1 values, not padding zeros
    assert np.array_equal(got, -np.ones((1, 1, 2, 2)))


def test_gemm_matmul_add_flatten():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(2, 4))
    b = rng.normal(size=(3, 4))
    c = rng.normal(size=(3,))
    node = ob.make_node("Gemm", ["a", "b", "c"], ["y"], alpha=0.5, beta=2.0,
                        transB=1)
    got = ob.run_graph(single_node_graph(node, {"a": a.shape}, "y",
                                         {"b": b, "c": c}), {"a": a})["y"]
    assert np.allclose(got, 0.5 * (a @ b.T) + 2.0 * c, atol=1e-12)

    node = ob.make_node("MatMul", ["a", "b"], ["y"])
    got = ob.run_graph(single_node_graph(node, {"a": a.shape}, "y",
                                         {"b": b.T}), {"a": a})["y"]
    assert np.allclose(got, a @ b.T, atol=1e-12)

    x = rng.normal(size=(2, 3, 4))
    node = ob.make_node("Flatten", ["x"], ["y"], axis=1)
    got = ob.run_graph(single_node_graph(node, {"x": x.shape}, "y"),
                       {"x": x})["y"]
    assert np.array_equal(got, x.reshape(2, 12))

    node = ob.make_node("Add", ["a", "a"], ["y"])
    got = ob.run_graph(single_node_graph(node, {"a": a.shape}, "y"),
                       {"a": a})["y"]
    assert np.array_equal(got, a + a)


def test_reshape_zero_and_minus_one():
    x = np.arange(24.0).reshape(2, 3, 4)
    node = ob.make_node("Reshape", ["x", "s"], ["y"])
    graph = single_node_graph(node, {"x": x.shape}, "y",
                              {"s": np.array([0, -1], dtype=np.int64)})
    got = ob.run_graph(graph, {"x": x})["y"]
    assert got.shape == (2, 12)


def test_run_graph_errors():
    node = ob.make_node("Relu", ["missing"], ["y"])
    graph = ob.make_graph([node], "g", [], [("y", ())])
    with pytest.raises(ValueError):
        ob.run_graph(graph, {})

    node = ob.make_node("Softmax", ["x"], ["y"])
    graph = ob.make_graph([node], "g", [("x", (1,))], [("y", (1,))])
    with pytest.raises(NotImplementedError):
        ob.run_graph(graph, {"x": np.ones(1)})


def test_load_model_errors(tmp_path):
    with pytest.raises(OSError):
        ob.load_model(tmp_path / "missing.onnx")
    bad = tmp_path / "bad.onnx"
    bad.write_bytes(b"\xff\xff\xff\xff not a model")
    with pytest.raises(ValueError):
        ob.load_model(bad)


def make_tiny_trunk(path, channels=8, seed=0):
    """conv(3->channels, pad 1) -> relu -> maxpool2 -> global avg pool."""
    rng = np.random.default_rng(seed)
    w = rng.normal(0, 0.2, (channels, 3, 3, 3)).astype(np.float32)
    b = rng.normal(0, 0.1, (channels,)).astype(np.float32)
    nodes = [
        ob.make_node("Conv", ["input", "w", "b"], ["c"], kernel_shape=[3, 3],
                     pads=[1, 1, 1, 1], strides=[1, 1]),
        ob.make_node("Relu", ["c"], ["r"]),
        ob.make_node("MaxPool", ["r"], ["p"], kernel_shape=[2, 2],
                     strides=[2, 2]),
    ]
    graph = ob.make_graph(nodes, "tiny",
                          inputs=[("input", (1, 3, None, None))],
                          outputs=[("p", (1, channels, None, None))],
                          initializers={"w": w, "b": b})
    ob.save_model(ob.make_model(graph), path)
    return path


def test_onnx_feature_extractor_end_to_end(tmp_path):
    path = make_tiny_trunk(tmp_path / "tiny.onnx")
    ext = OnnxFeatureExtractor(path, input_size=32, pooled_dim=8)
    rng = np.random.default_rng(4)
    img = rng.random((40, 56, 3))
    fv = ext.extract(img)
    assert fv.values.shape == (8,)
    assert np.all(np.isfinite(fv.values))
    assert np.array_equal(fv.values, ext.extract(img).values)

    ext_max = OnnxFeatureExtractor(path, input_size=32, pooled_dim=8,
                                   pooling="max")
    assert not np.array_equal(fv.values, ext_max.extract(img).values)


def test_onnx_feature_extractor_dim_mismatch(tmp_path):
    path = make_tiny_trunk(tmp_path / "tiny.onnx")
    ext = OnnxFeatureExtractor(path, input_size=32, pooled_dim=16)
    with pytest.raises(ValueError):
        ext.extract(np.full((16, 16, 3), 0.5))
