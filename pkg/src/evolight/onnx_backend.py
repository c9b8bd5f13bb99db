"""Self-contained ONNX subset: wire-format reader/writer and numpy executor.

Implements just enough of the ONNX protobuf schema to load, save, and run
feedforward convolutional trunks (the kind used for image features):
float32/int32/int64/float64 tensors, single-static-assignment graphs, and
the ops Conv, Relu, MaxPool, AveragePool, GlobalAveragePool, GlobalMaxPool,
Gemm, MatMul, Add, Flatten, Reshape, Identity, Constant. Tensor payloads
are accepted from raw_data or the typed repeated fields; repeated numerics
parse both packed and unpacked. Unknown fields are skipped on read, so
models produced by standard exporters load as long as they stick to the
ops above.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Any, Iterator

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

# TensorProto.DataType values
TENSOR_FLOAT = 1
TENSOR_INT32 = 6
TENSOR_INT64 = 7
TENSOR_DOUBLE = 11

_DTYPE_OF = {
    TENSOR_FLOAT: np.dtype("<f4"),
    TENSOR_INT32: np.dtype("<i4"),
    TENSOR_INT64: np.dtype("<i8"),
    TENSOR_DOUBLE: np.dtype("<f8"),
}
_CODE_OF = {
    np.dtype(np.float32): TENSOR_FLOAT,
    np.dtype(np.int32): TENSOR_INT32,
    np.dtype(np.int64): TENSOR_INT64,
    np.dtype(np.float64): TENSOR_DOUBLE,
}

# AttributeProto.AttributeType values
_ATTR_FLOAT = 1
_ATTR_INT = 2
_ATTR_STRING = 3
_ATTR_TENSOR = 4
_ATTR_FLOATS = 6
_ATTR_INTS = 7

DEFAULT_OPSET = 13
DEFAULT_IR_VERSION = 8


@dataclass
class NodeDef:
    op_type: str
    inputs: list[str]
    outputs: list[str]
    name: str = ""
    attrs: dict[str, Any] = field(default_factory=dict)


@dataclass
class GraphDef:
    name: str
    nodes: list[NodeDef]
    initializers: dict[str, np.ndarray]
    # (tensor name, shape with None for symbolic dims)
    inputs: list[tuple[str, tuple]]
    outputs: list[tuple[str, tuple]]


@dataclass
class ModelDef:
    graph: GraphDef
    ir_version: int = DEFAULT_IR_VERSION
    opset_version: int = DEFAULT_OPSET
    producer: str = "evolight"


# ---------------------------------------------------------------------------
# wire-format primitives


def _read_varint(buf: bytes, pos: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        if pos >= len(buf):
            raise ValueError("truncated varint")
        b = buf[pos]
        pos += 1
        result |= (b & 0x7F) << shift
        if not (b & 0x80):
            return result, pos
        shift += 7
        if shift > 70:
            raise ValueError("varint too long")


def _signed64(v: int) -> int:
    return v - (1 << 64) if v >= (1 << 63) else v


def _fields(buf: bytes) -> Iterator[tuple[int, int, Any]]:
    """Yield (field_number, wire_type, value); value is int for varints,
    bytes for everything else."""
    pos = 0
    n = len(buf)
    while pos < n:
        tag, pos = _read_varint(buf, pos)
        fnum, wt = tag >> 3, tag & 7
        if fnum == 0:
            raise ValueError("field number 0")
        if wt == 0:
            val, pos = _read_varint(buf, pos)
        elif wt == 1:
            if pos + 8 > n:
                raise ValueError("truncated fixed64")
            val = buf[pos:pos + 8]
            pos += 8
        elif wt == 2:
            ln, pos = _read_varint(buf, pos)
            if pos + ln > n:
                raise ValueError("truncated length-delimited field")
            val = buf[pos:pos + ln]
            pos += ln
        elif wt == 5:
            if pos + 4 > n:
                raise ValueError("truncated fixed32")
            val = buf[pos:pos + 4]
            pos += 4
        else:
            raise ValueError(f"unsupported wire type {wt}")
        yield fnum, wt, val


def _packed_varints(buf: bytes) -> list[int]:
    out = []
    pos = 0
    while pos < len(buf):
        v, pos = _read_varint(buf, pos)
        out.append(v)
    return out


def _varint(v: int) -> bytes:
    if v < 0:
        v &= (1 << 64) - 1
    out = bytearray()
    while True:
        b = v & 0x7F
        v >>= 7
        if v:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


def _tag(fnum: int, wt: int) -> bytes:
    return _varint((fnum << 3) | wt)


def _ld(fnum: int, payload: bytes) -> bytes:
    return _tag(fnum, 2) + _varint(len(payload)) + payload


def _vint(fnum: int, v: int) -> bytes:
    return _tag(fnum, 0) + _varint(v)


def _f32(fnum: int, v: float) -> bytes:
    return _tag(fnum, 5) + struct.pack("<f", v)


# ---------------------------------------------------------------------------
# parsing


def _parse_tensor(buf: bytes) -> tuple[str, np.ndarray]:
    name = ""
    dims: list[int] = []
    data_type = None
    raw = None
    floats: list[float] = []
    int32s: list[int] = []
    int64s: list[int] = []
    doubles: list[float] = []
    for fnum, wt, val in _fields(buf):
        if fnum == 1:  # dims
            if wt == 0:
                dims.append(_signed64(val))
            else:
                dims.extend(_signed64(v) for v in _packed_varints(val))
        elif fnum == 2 and wt == 0:  # data_type
            data_type = val
        elif fnum == 4:  # float_data
            if wt == 5:
                floats.append(struct.unpack("<f", val)[0])
            else:
                floats.extend(np.frombuffer(val, dtype="<f4").tolist())
        elif fnum == 5:  # int32_data
            if wt == 0:
                int32s.append(_signed64(val))
            else:
                int32s.extend(_signed64(v) for v in _packed_varints(val))
        elif fnum == 7:  # int64_data
            if wt == 0:
                int64s.append(_signed64(val))
            else:
                int64s.extend(_signed64(v) for v in _packed_varints(val))
        elif fnum == 8 and wt == 2:  # name
            name = val.decode("utf-8")
        elif fnum == 9 and wt == 2:  # raw_data
            raw = val
        elif fnum == 10:  # double_data
            if wt == 1:
                doubles.append(struct.unpack("<d", val)[0])
            else:
                doubles.extend(np.frombuffer(val, dtype="<f8").tolist())
        # anything else (segment, external data, string_data) is skipped
    if data_type is None:
        raise ValueError(f"tensor {name!r} missing data_type")
    dtype = _DTYPE_OF.get(data_type)
    if dtype is None:
        raise ValueError(f"tensor {name!r} has unsupported data_type {data_type}")
    if raw is not None:
        arr = np.frombuffer(raw, dtype=dtype).copy()
    elif data_type == TENSOR_FLOAT:
        arr = np.array(floats, dtype=np.float32)
    elif data_type == TENSOR_INT32:
        arr = np.array(int32s, dtype=np.int32)
    elif data_type == TENSOR_INT64:
        arr = np.array(int64s, dtype=np.int64)
    else:
        arr = np.array(doubles, dtype=np.float64)
    count = int(np.prod(dims)) if dims else arr.size
    if arr.size != count:
        raise ValueError(
            f"tensor {name!r}: payload has {arr.size} elements, dims {dims} need {count}"
        )
    return name, arr.reshape(dims)


def _parse_attribute(buf: bytes) -> tuple[str, Any]:
    name = ""
    value: Any = None
    ints: list[int] = []
    floats: list[float] = []
    seen = False
    for fnum, wt, val in _fields(buf):
        if fnum == 1 and wt == 2:
            name = val.decode("utf-8")
        elif fnum == 2 and wt == 5:  # f
            value, seen = struct.unpack("<f", val)[0], True
        elif fnum == 3 and wt == 0:  # i
            value, seen = _signed64(val), True
        elif fnum == 4 and wt == 2:  # s
            value, seen = val.decode("utf-8"), True
        elif fnum == 5 and wt == 2:  # t
            value, seen = _parse_tensor(val)[1], True
        elif fnum == 7:  # floats
            if wt == 5:
                floats.append(struct.unpack("<f", val)[0])
            else:
                floats.extend(np.frombuffer(val, dtype="<f4").tolist())
        elif fnum == 8:  # ints
            if wt == 0:
                ints.append(_signed64(val))
            else:
                ints.extend(_signed64(v) for v in _packed_varints(val))
        # field 20 (type) is advisory; the populated slot already tells us
    if not seen:
        value = ints if ints or not floats else floats
    return name, value


def _parse_node(buf: bytes) -> NodeDef:
    node = NodeDef(op_type="", inputs=[], outputs=[])
    for fnum, wt, val in _fields(buf):
        if fnum == 1 and wt == 2:
            node.inputs.append(val.decode("utf-8"))
        elif fnum == 2 and wt == 2:
            node.outputs.append(val.decode("utf-8"))
        elif fnum == 3 and wt == 2:
            node.name = val.decode("utf-8")
        elif fnum == 4 and wt == 2:
            node.op_type = val.decode("utf-8")
        elif fnum == 5 and wt == 2:
            k, v = _parse_attribute(val)
            node.attrs[k] = v
        elif fnum == 7 and wt == 2:
            domain = val.decode("utf-8")
            if domain not in ("", "ai.onnx"):
                raise ValueError(f"unsupported op domain {domain!r}")
    if not node.op_type:
        raise ValueError("node missing op_type")
    return node


def _parse_shape(buf: bytes) -> tuple:
    dims: list = []
    for fnum, wt, val in _fields(buf):
        if fnum == 1 and wt == 2:  # dim
            dim_value = None
            for df, dwt, dval in _fields(val):
                if df == 1 and dwt == 0:
                    dim_value = _signed64(dval)
                # dim_param (2) stays None: symbolic
            dims.append(dim_value)
    return tuple(dims)


def _parse_value_info(buf: bytes) -> tuple[str, tuple]:
    name = ""
    shape: tuple = ()
    for fnum, wt, val in _fields(buf):
        if fnum == 1 and wt == 2:
            name = val.decode("utf-8")
        elif fnum == 2 and wt == 2:  # TypeProto
            for tf, twt, tval in _fields(val):
                if tf == 1 and twt == 2:  # tensor_type
                    for sf, swt, sval in _fields(tval):
                        if sf == 2 and swt == 2:  # shape
                            shape = _parse_shape(sval)
    return name, shape


def _parse_graph(buf: bytes) -> GraphDef:
    graph = GraphDef(name="", nodes=[], initializers={}, inputs=[], outputs=[])
    for fnum, wt, val in _fields(buf):
        if fnum == 1 and wt == 2:
            graph.nodes.append(_parse_node(val))
        elif fnum == 2 and wt == 2:
            graph.name = val.decode("utf-8")
        elif fnum == 5 and wt == 2:
            name, arr = _parse_tensor(val)
            if not name:
                raise ValueError("initializer without a name")
            graph.initializers[name] = arr
        elif fnum == 11 and wt == 2:
            graph.inputs.append(_parse_value_info(val))
        elif fnum == 12 and wt == 2:
            graph.outputs.append(_parse_value_info(val))
        # value_info (13) and docs are skipped
    if not graph.outputs:
        raise ValueError("graph has no outputs")
    return graph


def model_from_bytes(buf: bytes) -> ModelDef:
    graph = None
    ir_version = DEFAULT_IR_VERSION
    opset = 0
    producer = ""
    try:
        for fnum, wt, val in _fields(buf):
            if fnum == 1 and wt == 0:
                ir_version = _signed64(val)
            elif fnum == 2 and wt == 2:
                producer = val.decode("utf-8")
            elif fnum == 7 and wt == 2:
                graph = _parse_graph(val)
            elif fnum == 8 and wt == 2:  # opset_import
                domain = ""
                version = 0
                for of, owt, oval in _fields(val):
                    if of == 1 and owt == 2:
                        domain = oval.decode("utf-8")
                    elif of == 2 and owt == 0:
                        version = _signed64(oval)
                if domain in ("", "ai.onnx"):
                    opset = max(opset, version)
    except ValueError as exc:
        raise ValueError(f"not a readable ONNX model: {exc}") from exc
    if graph is None:
        raise ValueError("not a readable ONNX model: no graph")
    return ModelDef(
        graph=graph,
        ir_version=ir_version,
        opset_version=opset or DEFAULT_OPSET,
        producer=producer,
    )


def load_model(path) -> ModelDef:
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read())


# ---------------------------------------------------------------------------
# serialization


def _tensor_bytes(name: str, arr: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(arr)
    code = _CODE_OF.get(arr.dtype)
    if code is None:
        raise ValueError(f"unsupported tensor dtype {arr.dtype}")
    out = bytearray()
    if arr.ndim:
        out += _ld(1, b"".join(_varint(d) for d in arr.shape))
    out += _vint(2, code)
    if name:
        out += _ld(8, name.encode("utf-8"))
    out += _ld(9, arr.astype(arr.dtype.newbyteorder("<")).tobytes())
    return bytes(out)


def _attr_bytes(name: str, value: Any) -> bytes:
    out = bytearray(_ld(1, name.encode("utf-8")))
    if isinstance(value, bool):
        raise ValueError("boolean attributes are not part of the schema")
    if isinstance(value, float):
        out += _f32(2, value) + _vint(20, _ATTR_FLOAT)
    elif isinstance(value, int):
        out += _vint(3, value) + _vint(20, _ATTR_INT)
    elif isinstance(value, str):
        out += _ld(4, value.encode("utf-8")) + _vint(20, _ATTR_STRING)
    elif isinstance(value, np.ndarray):
        out += _ld(5, _tensor_bytes("", value)) + _vint(20, _ATTR_TENSOR)
    elif isinstance(value, (list, tuple)):
        if value and all(isinstance(v, float) for v in value):
            out += _ld(7, struct.pack(f"<{len(value)}f", *value))
            out += _vint(20, _ATTR_FLOATS)
        else:
            out += _ld(8, b"".join(_varint(int(v)) for v in value))
            out += _vint(20, _ATTR_INTS)
    else:
        raise ValueError(f"unsupported attribute value {value!r}")
    return bytes(out)


def _value_info_bytes(name: str, shape: tuple) -> bytes:
    dims = bytearray()
    for i, d in enumerate(shape):
        if d is None:
            dim = _ld(2, f"d{i}".encode("utf-8"))
        else:
            dim = _vint(1, int(d))
        dims += _ld(1, dim)
    tensor_type = _vint(1, TENSOR_FLOAT) + _ld(2, bytes(dims))
    type_proto = _ld(1, tensor_type)
    return _ld(1, name.encode("utf-8")) + _ld(2, type_proto)


def _node_bytes(node: NodeDef) -> bytes:
    out = bytearray()
    for s in node.inputs:
        out += _ld(1, s.encode("utf-8"))
    for s in node.outputs:
        out += _ld(2, s.encode("utf-8"))
    if node.name:
        out += _ld(3, node.name.encode("utf-8"))
    out += _ld(4, node.op_type.encode("utf-8"))
    for k in node.attrs:
        out += _ld(5, _attr_bytes(k, node.attrs[k]))
    return bytes(out)


def _graph_bytes(graph: GraphDef) -> bytes:
    out = bytearray()
    for node in graph.nodes:
        out += _ld(1, _node_bytes(node))
    if graph.name:
        out += _ld(2, graph.name.encode("utf-8"))
    for name, arr in graph.initializers.items():
        out += _ld(5, _tensor_bytes(name, arr))
    for name, shape in graph.inputs:
        out += _ld(11, _value_info_bytes(name, shape))
    for name, shape in graph.outputs:
        out += _ld(12, _value_info_bytes(name, shape))
    return bytes(out)


def model_to_bytes(model: ModelDef) -> bytes:
    out = bytearray()
    out += _vint(1, model.ir_version)
    if model.producer:
        out += _ld(2, model.producer.encode("utf-8"))
    out += _ld(7, _graph_bytes(model.graph))
    out += _ld(8, _ld(1, b"") + _vint(2, model.opset_version))
    return bytes(out)


def save_model(model: ModelDef, path) -> None:
    with open(path, "wb") as fh:
        fh.write(model_to_bytes(model))


def make_node(op_type: str, inputs, outputs, name: str = "", **attrs) -> NodeDef:
    return NodeDef(op_type, list(inputs), list(outputs), name, dict(attrs))


def make_graph(nodes, name, inputs, outputs, initializers=None) -> GraphDef:
    return GraphDef(name, list(nodes), dict(initializers or {}),
                    list(inputs), list(outputs))


def make_model(graph: GraphDef, opset_version: int = DEFAULT_OPSET) -> ModelDef:
    return ModelDef(graph=graph, opset_version=opset_version)


# ---------------------------------------------------------------------------
# execution


def _pair(attrs, key, default):
    v = attrs.get(key, default)
    return [int(x) for x in v]


def _check_auto_pad(attrs, op):
    ap = attrs.get("auto_pad", "NOTSET")
    if ap not in ("NOTSET", "VALID"):
        raise NotImplementedError(f"{op}: auto_pad={ap!r} is not supported")


def _windows(x, kh, kw, sh, sw, dh=1, dw=1):
    span_h = (kh - 1) * dh + 1
    span_w = (kw - 1) * dw + 1
    win = sliding_window_view(x, (span_h, span_w), axis=(2, 3))
    return win[:, :, ::sh, ::sw, ::dh, ::dw]


def _op_conv(args, attrs):
    x, w = args[0], args[1]
    b = args[2] if len(args) > 2 else None
    _check_auto_pad(attrs, "Conv")
    if int(attrs.get("group", 1)) != 1:
        raise NotImplementedError("Conv: grouped convolution is not supported")
    sh, sw = _pair(attrs, "strides", (1, 1))
    dh, dw = _pair(attrs, "dilations", (1, 1))
    pt, pl, pb, pr = _pair(attrs, "pads", (0, 0, 0, 0))
    kh, kw = w.shape[2], w.shape[3]
    xp = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)))
    win = _windows(xp, kh, kw, sh, sw, dh, dw)
    y = np.tensordot(win, w, axes=[(1, 4, 5), (1, 2, 3)])
    y = np.moveaxis(y, 3, 1)
    if b is not None:
        y = y + b[None, :, None, None]
    return np.ascontiguousarray(y)


def _op_maxpool(args, attrs):
    (x,) = args
    _check_auto_pad(attrs, "MaxPool")
    if int(attrs.get("ceil_mode", 0)) != 0:
        raise NotImplementedError("MaxPool: ceil_mode is not supported")
    kh, kw = _pair(attrs, "kernel_shape", None)
    sh, sw = _pair(attrs, "strides", (kh, kw))
    pt, pl, pb, pr = _pair(attrs, "pads", (0, 0, 0, 0))
    xp = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)),
                constant_values=-np.inf)
    win = _windows(xp, kh, kw, sh, sw)
    return np.ascontiguousarray(win.max(axis=(4, 5)).astype(x.dtype, copy=False))


def _op_averagepool(args, attrs):
    (x,) = args
    _check_auto_pad(attrs, "AveragePool")
    if int(attrs.get("ceil_mode", 0)) != 0:
        raise NotImplementedError("AveragePool: ceil_mode is not supported")
    pads = _pair(attrs, "pads", (0, 0, 0, 0))
    if any(pads):
        raise NotImplementedError("AveragePool: nonzero pads are not supported")
    kh, kw = _pair(attrs, "kernel_shape", None)
    sh, sw = _pair(attrs, "strides", (kh, kw))
    win = _windows(x, kh, kw, sh, sw)
    return np.ascontiguousarray(win.mean(axis=(4, 5)).astype(x.dtype, copy=False))


def _op_global_average_pool(args, attrs):
    (x,) = args
    return x.mean(axis=(2, 3), keepdims=True).astype(x.dtype, copy=False)


def _op_global_max_pool(args, attrs):
    (x,) = args
    return x.max(axis=(2, 3), keepdims=True).astype(x.dtype, copy=False)


def _op_relu(args, attrs):
    return np.maximum(args[0], 0)


def _op_add(args, attrs):
    return args[0] + args[1]


def _op_identity(args, attrs):
    return args[0]


def _op_flatten(args, attrs):
    (x,) = args
    axis = int(attrs.get("axis", 1))
    if axis < 0:
        axis += x.ndim
    lead = int(np.prod(x.shape[:axis])) if axis else 1
    return x.reshape(lead, -1)


def _op_reshape(args, attrs):
    x, shape = args
    target = [int(v) for v in np.asarray(shape).ravel()]
    for i, d in enumerate(target):
        if d == 0:
            target[i] = x.shape[i]
    return x.reshape(target)


def _op_gemm(args, attrs):
    a, b = args[0], args[1]
    c = args[2] if len(args) > 2 else None
    alpha = float(attrs.get("alpha", 1.0))
    beta = float(attrs.get("beta", 1.0))
    if int(attrs.get("transA", 0)):
        a = a.T
    if int(attrs.get("transB", 0)):
        b = b.T
    y = alpha * (a @ b)
    if c is not None and beta != 0.0:
        y = y + beta * c
    return y.astype(args[0].dtype, copy=False)


def _op_matmul(args, attrs):
    return args[0] @ args[1]


def _op_constant(args, attrs):
    if "value" in attrs:
        return attrs["value"]
    raise NotImplementedError("Constant: only the tensor `value` form is supported")


_OP_TABLE = {
    "Conv": _op_conv,
    "Relu": _op_relu,
    "MaxPool": _op_maxpool,
    "AveragePool": _op_averagepool,
    "GlobalAveragePool": _op_global_average_pool,
    "GlobalMaxPool": _op_global_max_pool,
    "Gemm": _op_gemm,
    "MatMul": _op_matmul,
    "Add": _op_add,
    "Flatten": _op_flatten,
    "Reshape": _op_reshape,
    "Identity": _op_identity,
    "Constant": _op_constant,
}

SUPPORTED_OPS = frozenset(_OP_TABLE)


def run_graph(graph: GraphDef, feeds: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Execute nodes in file order and return the graph outputs by name."""
    values: dict[str, np.ndarray] = dict(graph.initializers)
    values.update(feeds)
    for node in graph.nodes:
        fn = _OP_TABLE.get(node.op_type)
        if fn is None:
            raise NotImplementedError(f"unsupported op {node.op_type!r}")
        args = []
        for name in node.inputs:
            if not name:
                args.append(None)
            elif name in values:
                args.append(values[name])
            else:
                raise ValueError(f"node {node.name or node.op_type}: "
                                 f"undefined tensor {name!r}")
        result = fn(args, node.attrs)
        outputs = result if isinstance(result, tuple) else (result,)
        for out_name, val in zip(node.outputs, outputs):
            values[out_name] = val
    missing = [name for name, _ in graph.outputs if name not in values]
    if missing:
        raise ValueError(f"graph outputs never produced: {missing}")
    return {name: values[name] for name, _ in graph.outputs}


def run_model(model: ModelDef, feeds: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return run_graph(model.graph, feeds)
