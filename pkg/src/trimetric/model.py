"""Small feedforward networks: evaluation, Jacobians and canonical bytes."""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionMismatch, MalformedArtifact, NonFiniteResult
from .rng import XorShift64Star

ARTIFACT_MAGIC = b"AIMM"
ARTIFACT_VERSION = 1
ACTIVATIONS = ("identity", "relu", "tanh")

_HEAD = struct.Struct("<4sI")
_U32 = struct.Struct("<I")
_LAYER_HEAD = struct.Struct("<IIB")


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class InputSpec:
    """Axis-aligned input box, quantized to ``bits_per_dim`` bits per axis.

    The number of representable inputs is ``2 ** (dims * bits_per_dim)``.
    """

    dims: int
    bits_per_dim: int
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower, upper = _frozen(self.lower).reshape(-1), _frozen(self.upper).reshape(-1)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if self.dims < 1 or self.bits_per_dim < 1:
            raise ValueError("dims and bits_per_dim must be >= 1")
        if lower.shape != (self.dims,) or upper.shape != (self.dims,):
            raise DimensionMismatch(f"bounds must have length {self.dims}")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("bounds must be finite")
        if not np.all(lower < upper):
            raise ValueError("lower must be strictly below upper on every axis")

    @property
    def log2_input_space_size(self):
        return self.dims * self.bits_per_dim

    def __eq__(self, other):
        if not isinstance(other, InputSpec):
            return NotImplemented
        return (self.dims == other.dims and self.bits_per_dim == other.bits_per_dim
                and self.lower.tobytes() == other.lower.tobytes()
                and self.upper.tobytes() == other.upper.tobytes())


@dataclass(frozen=True, eq=False)
class Layer:
    weights: np.ndarray
    bias: np.ndarray
    activation: str = "identity"

    def __post_init__(self):
        w = _frozen(self.weights)
        b = _frozen(self.bias).reshape(-1)
        if w.ndim != 2:
            raise DimensionMismatch("weights must be a 2-D matrix")
        if b.shape != (w.shape[0],):
            raise DimensionMismatch(
                f"bias length {b.shape[0]} does not match {w.shape[0]} outputs")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("weights and biases must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def n_in(self):
        return self.weights.shape[1]

    @property
    def n_out(self):
        return self.weights.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Layer):
            return NotImplemented
        return (self.activation == other.activation
                and self.weights.shape == other.weights.shape
                and self.weights.tobytes() == other.weights.tobytes()
                and self.bias.tobytes() == other.bias.tobytes())


@dataclass(frozen=True, eq=False)
class MlpModel:
    input_spec: InputSpec
    layers: tuple = field(default_factory=tuple)

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("a model needs at least one layer")
        width = self.input_spec.dims
        for k, layer in enumerate(layers):
            if layer.n_in != width:
                raise DimensionMismatch(
                    f"layer {k} expects {layer.n_in} inputs, previous width is {width}")
            width = layer.n_out
        object.__setattr__(self, "layers", layers)

    @property
    def output_dim(self):
        return self.layers[-1].n_out

    def __eq__(self, other):
        if not isinstance(other, MlpModel):
            return NotImplemented
        return self.input_spec == other.input_spec and self.layers == other.layers

    # ----- JSON model files -----

    @classmethod
    def from_dict(cls, doc):
        spec = doc["input_spec"]
        input_spec = InputSpec(
            dims=int(spec["dims"]), bits_per_dim=int(spec["bits_per_dim"]),
            lower=spec["lower"], upper=spec["upper"])
        layers = [Layer(np.asarray(layer["weights"], dtype=np.float64).reshape(
                            len(layer["weights"]), -1),
                        layer["bias"], layer.get("activation", "identity"))
                  for layer in doc["layers"]]
        return cls(input_spec, tuple(layers))

    def to_dict(self):
        s = self.input_spec
        return {
            "input_spec": {"dims": s.dims, "bits_per_dim": s.bits_per_dim,
                           "lower": s.lower.tolist(), "upper": s.upper.tolist()},
            "layers": [{"weights": layer.weights.tolist(), "bias": layer.bias.tolist(),
                        "activation": layer.activation} for layer in self.layers],
        }


def load_model(path):
    """Read a human-authored JSON model file."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        return MlpModel.from_dict(doc)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: invalid model file ({exc})") from exc


@dataclass(frozen=True)
class ModelArtifact:
    bytes: bytes
    source_model_id: str = ""

    def with_attached_data(self, data):
        """Artifact with a raw data blob appended, for complexity estimation."""
        return ModelArtifact(self.bytes + bytes(data), self.source_model_id)


def serialize_canonical(model, source_model_id=""):
    """Canonical little-endian byte layout of a model.

    ``AIMM``, u32 version, u32 dims, u32 bits_per_dim, lower and upper as
    f64, u32 layer count, then per layer u32 out, u32 in, u8 activation tag,
    weights row-major and biases, all f64.
    """
    spec = model.input_spec
    parts = [_HEAD.pack(ARTIFACT_MAGIC, ARTIFACT_VERSION),
             struct.pack("<II", spec.dims, spec.bits_per_dim),
             spec.lower.astype("<f8").tobytes(), spec.upper.astype("<f8").tobytes(),
             _U32.pack(len(model.layers))]
    for layer in model.layers:
        parts.append(_LAYER_HEAD.pack(layer.n_out, layer.n_in,
                                      ACTIVATIONS.index(layer.activation)))
        parts.append(np.ascontiguousarray(layer.weights).astype("<f8").tobytes())
        parts.append(layer.bias.astype("<f8").tobytes())
    return ModelArtifact(b"".join(parts), source_model_id)


class _Reader:
    def __init__(self, raw):
        self.raw = raw
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.raw):
            raise MalformedArtifact("truncated payload")
        chunk = self.raw[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, st):
        return st.unpack(self.take(st.size))

    def floats(self, count):
        values = np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64)
        if not np.all(np.isfinite(values)):
            raise MalformedArtifact("non-finite float in payload")
        return values


def deserialize(artifact, allow_trailing=False):
    """Rebuild the model from :func:`serialize_canonical` bytes.

    Trailing bytes (attached data) are rejected unless ``allow_trailing``.
    """
    raw = artifact.bytes if isinstance(artifact, ModelArtifact) else bytes(artifact)
    r = _Reader(raw)
    magic, version = r.unpack(_HEAD)
    if magic != ARTIFACT_MAGIC:
        raise MalformedArtifact(f"bad magic {magic!r}")
    if version != ARTIFACT_VERSION:
        raise MalformedArtifact(f"unsupported artifact version {version}")
    dims, bits = r.unpack(struct.Struct("<II"))
    if dims < 1 or bits < 1:
        raise MalformedArtifact("degenerate input spec")
    lower, upper = r.floats(dims), r.floats(dims)
    (n_layers,) = r.unpack(_U32)
    if n_layers < 1:
        raise MalformedArtifact("model has no layers")
    layers = []
    width = dims
    for _ in range(n_layers):
        n_out, n_in, tag = r.unpack(_LAYER_HEAD)
        if n_in != width or n_out < 1:
            raise MalformedArtifact("layer dimension mismatch")
        if tag >= len(ACTIVATIONS):
            raise MalformedArtifact(f"unknown activation tag {tag}")
        w = r.floats(n_out * n_in).reshape(n_out, n_in)
        b = r.floats(n_out)
        layers.append(Layer(w, b, ACTIVATIONS[tag]))
        width = n_out
    if r.pos != len(raw) and not allow_trailing:
        raise MalformedArtifact(f"{len(raw) - r.pos} unexpected trailing bytes")
    try:
        spec = InputSpec(dims, bits, lower, upper)
    except ValueError as exc:
        raise MalformedArtifact(str(exc)) from exc
    return MlpModel(spec, tuple(layers))


# ----- evaluation -----

def _check_input(model, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.input_spec.dims,):
        raise DimensionMismatch(
            f"input has shape {x.shape}, model expects ({model.input_spec.dims},)")
    return x


def _activate(name, z):
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    return z


def _activation_slope(name, z, a):
    if name == "relu":
        # subgradient at 0 is taken as 0
        return (z > 0).astype(np.float64)
    if name == "tanh":
        return 1.0 - a * a
    return np.ones_like(z)


def forward(model, x):
    h = _check_input(model, x)
    # overflow surfaces as inf in the output; callers check finiteness
    with np.errstate(over="ignore", invalid="ignore"):
        for layer in model.layers:
            h = _activate(layer.activation, layer.weights @ h + layer.bias)
    return h


def jacobian_analytic(model, x):
    """Chain-rule Jacobian, shape (output_dim, dims)."""
    h = _check_input(model, x)
    jac = np.eye(model.input_spec.dims)
    for layer in model.layers:
        z = layer.weights @ h + layer.bias
        h = _activate(layer.activation, z)
        jac = _activation_slope(layer.activation, z, h)[:, None] * (layer.weights @ jac)
    return jac


def jacobian_fd(model, x, h=1e-5):
    """Central-difference Jacobian; column i is (f(x+h e_i) - f(x-h e_i)) / 2h."""
    if not h > 0:
        raise ValueError("finite-difference step must be positive")
    x = _check_input(model, x)
    cols = []
    for i in range(x.shape[0]):
        step = np.zeros_like(x)
        step[i] = h
        plus, minus = forward(model, x + step), forward(model, x - step)
        if not (np.all(np.isfinite(plus)) and np.all(np.isfinite(minus))):
            raise NonFiniteResult("non-finite model output", point=x.tolist())
        cols.append((plus - minus) / (2.0 * h))
    return np.stack(cols, axis=1)


def sample_inputs(spec, m, seed=0):
    """``m`` points uniform over the input box, from the xorshift64* stream.

    Draws are consumed point by point, axis by axis.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    gen = XorShift64Star(seed)
    width = spec.upper - spec.lower
    out = []
    for _ in range(m):
        u = np.array([gen.random() for _ in range(spec.dims)])
        out.append(spec.lower + u * width)
    return out


def random_model(rng, dims, widths, activation="tanh", scale=1.0, bits_per_dim=8):
    """Random model with normal weights; ``rng`` is a numpy Generator.

    A testing and demo helper, not part of the metric computations.
    """
    spec = InputSpec(dims, bits_per_dim, -np.ones(dims), np.ones(dims))
    layers, n_in = [], dims
    for n_out in widths:
        layers.append(Layer(rng.normal(0.0, scale / np.sqrt(n_in), (n_out, n_in)),
                            rng.normal(0.0, 0.1, n_out), activation))
        n_in = n_out
    return MlpModel(spec, tuple(layers))
