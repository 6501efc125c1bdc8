import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trimetric.exceptions import DimensionMismatch, MalformedArtifact, NonFiniteResult
from trimetric.model import (InputSpec, Layer, MlpModel, ModelArtifact, deserialize,
                             forward, jacobian_analytic, jacobian_fd, load_model,
                             random_model, sample_inputs, serialize_canonical)


def box(d, bits=8, lo=-1.0, hi=1.0):
    return InputSpec(d, bits, np.full(d, lo), np.full(d, hi))


def single(w, b, act="identity", bits=8):
    w = np.atleast_2d(np.asarray(w, float))
    return MlpModel(box(w.shape[1], bits), (Layer(w, b, act),))


def xorshift_star_oracle(seed, n):
    """Same stream computed with wrapping numpy uint64 arithmetic."""
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        x = z ^ (z >> np.uint64(31))
        out = []
        for _ in range(n):
            x ^= x >> np.uint64(12)
            x ^= x << np.uint64(25)
            x ^= x >> np.uint64(27)
            out.append(int((x * np.uint64(0x2545F4914F6CDD1D)) >> np.uint64(11)) / 2.0**53)
    return out


# ----- serialization -----

def test_fixed_fixture_bytes():
    m = single([[1.0]], [0.0])
    art = serialize_canonical(m)
    expected = (b"AIMM" + struct.pack("<III", 1, 1, 8) + struct.pack("<dd", -1.0, 1.0)
                + struct.pack("<I", 1) + struct.pack("<IIB", 1, 1, 0)
                + struct.pack("<dd", 1.0, 0.0))
    assert art.bytes == expected
    assert serialize_canonical(m).bytes == art.bytes


def test_one_bit_change_changes_artifact():
    w = np.array([[0.25, -1.5]])
    flipped = w.copy()
    flipped.view(np.uint64)[0, 1] ^= np.uint64(1)
    a = serialize_canonical(single(w, [0.0]))
    b = serialize_canonical(single(flipped, [0.0]))
    assert a.bytes != b.bytes


def test_roundtrip_random_models():
    rng = np.random.default_rng(0)
    for _ in range(100):
        d = int(rng.integers(1, 6))
        widths = list(rng.integers(1, 7, size=int(rng.integers(1, 4))))
        act = ["identity", "relu", "tanh"][int(rng.integers(3))]
        m = random_model(rng, d, widths, act)
        back = deserialize(serialize_canonical(m))
        assert back == m
        assert serialize_canonical(back).bytes == serialize_canonical(m).bytes


def test_negative_zero_is_preserved():
    m = single([[-0.0]], [0.0])
    back = deserialize(serialize_canonical(m))
    assert math.copysign(1.0, back.layers[0].weights[0, 0]) == -1.0


def test_bad_magic():
    with pytest.raises(MalformedArtifact):
        deserialize(ModelArtifact(b"XXXX" + b"\0" * 64))


def test_nan_weight_rejected():
    raw = bytearray(serialize_canonical(single([[1.0]], [0.0])).bytes)
    raw[-16:-8] = struct.pack("<d", float("nan"))
    with pytest.raises(MalformedArtifact):
        deserialize(ModelArtifact(bytes(raw)))


def test_truncated_and_trailing():
    raw = serialize_canonical(single([[1.0, 2.0]], [0.0])).bytes
    with pytest.raises(MalformedArtifact):
        deserialize(raw[:-1])
    with pytest.raises(MalformedArtifact):
        deserialize(raw + b"extra")
    assert deserialize(raw + b"extra", allow_trailing=True) == single([[1.0, 2.0]], [0.0])


def test_layer_dimension_mismatch_in_bytes():
    raw = bytearray(serialize_canonical(single([[1.0, 2.0]], [0.0])).bytes)
    # patch the layer's declared input width from 2 to 3
    offset = 4 + 12 + 32 + 4 + 4
    raw[offset:offset + 4] = struct.pack("<I", 3)
    with pytest.raises(MalformedArtifact):
        deserialize(bytes(raw))


def test_json_model_file(tmp_path):
    m = random_model(np.random.default_rng(1), 3, [4, 2])
    import json
    path = tmp_path / "m.json"
    path.write_text(json.dumps(m.to_dict()))
    assert load_model(path) == m


def test_construction_checks():
    with pytest.raises(DimensionMismatch):
        MlpModel(box(2), (Layer(np.eye(3), np.zeros(3)),))
    with pytest.raises(ValueError):
        InputSpec(1, 8, [1.0], [0.0])
    with pytest.raises(ValueError):
        Layer([[np.inf]], [0.0])
    assert box(3, 5).log2_input_space_size == 15


# ----- forward -----

def test_forward_identity():
    m = single(np.eye(2), [0.0, 0.0])
    np.testing.assert_array_equal(forward(m, [0.3, -0.7]), [0.3, -0.7])


def test_forward_relu_sign():
    m = single([[1.0, -1.0]], [0.0], "relu")
    np.testing.assert_array_equal(forward(m, [2.0, 3.0]), [0.0])


def test_forward_tanh_constant():
    m = single([[0.0]], [0.5], "tanh")
    assert forward(m, [0.9])[0] == pytest.approx(math.tanh(0.5), abs=1e-15)
    assert forward(m, [0.9])[0] == pytest.approx(0.46212, abs=1e-5)


def test_forward_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        forward(single(np.eye(2), [0, 0]), [1.0])


def test_linear_model_is_affine():
    rng = np.random.default_rng(5)
    m = random_model(rng, 3, [4, 2], "identity")
    x, y = rng.normal(size=3), rng.normal(size=3)
    np.testing.assert_allclose(forward(m, x + y),
                               forward(m, x) + forward(m, y) - forward(m, np.zeros(3)),
                               atol=1e-12)


# ----- Jacobians -----

def test_jacobian_linear_equals_weights():
    w = np.array([[1.0, 2.0], [-3.0, 0.5], [0.0, 4.0]])
    m = single(w, [0.1, 0.2, 0.3])
    np.testing.assert_array_equal(jacobian_analytic(m, [0.2, 0.4]), w)
    np.testing.assert_allclose(jacobian_fd(m, [0.2, 0.4], 1e-3), w, rtol=1e-10, atol=1e-10)


def test_jacobian_tanh_at_origin():
    m = single(np.eye(2), [0.0, 0.0], "tanh")
    np.testing.assert_array_equal(jacobian_analytic(m, [0.0, 0.0]), np.eye(2))
    np.testing.assert_allclose(jacobian_fd(m, [0.0, 0.0], 1e-5), np.eye(2), atol=1e-8)


def test_jacobian_constant_model():
    m = single(np.zeros((2, 3)), [1.0, -1.0], "tanh")
    np.testing.assert_array_equal(jacobian_fd(m, [0.1, 0.2, 0.3], 1e-4), np.zeros((2, 3)))


def test_relu_subgradient_zero_at_kink():
    m = single([[1.0]], [0.0], "relu")
    assert jacobian_analytic(m, [0.0])[0, 0] == 0.0
    assert jacobian_analytic(m, [0.5])[0, 0] == 1.0


def test_fd_rejects_nonpositive_step_and_nonfinite():
    m = single([[1.0]], [0.0])
    with pytest.raises(ValueError):
        jacobian_fd(m, [0.0], 0.0)
    huge = single([[1e308]], [0.0])
    with pytest.raises(NonFiniteResult):
        jacobian_fd(huge, [1.0], 1.0)


def rel_frobenius(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_analytic_matches_fd_smooth(seed):
    rng = np.random.default_rng(seed)
    act = "tanh" if seed % 2 else "identity"
    m = random_model(rng, int(rng.integers(1, 5)), [int(rng.integers(1, 6)), 3], act)
    x = rng.uniform(-1, 1, m.input_spec.dims)
    h = 1e-5 * max(1.0, np.abs(x).max())
    assert rel_frobenius(jacobian_fd(m, x, h), jacobian_analytic(m, x)) <= 1e-4


def test_analytic_matches_fd_relu_away_from_kinks():
    rng = np.random.default_rng(11)
    h = 1e-5
    checked = 0
    for _ in range(200):
        m = random_model(rng, 3, [5, 2], "relu")
        x = rng.uniform(-1, 1, 3)
        pre, a = [], x
        for layer in m.layers:
            z = layer.weights @ a + layer.bias
            pre.append(z)
            a = np.maximum(z, 0)
        if min(np.abs(z).min() for z in pre) <= 10 * h:
            continue
        checked += 1
        assert rel_frobenius(jacobian_fd(m, x, h), jacobian_analytic(m, x)) <= 1e-4
    assert checked > 50


# ----- sampling -----

def test_sampling_deterministic_and_bounded():
    spec = InputSpec(3, 4, [-2.0, 0.0, 10.0], [2.0, 0.5, 10.1])
    a = sample_inputs(spec, 50, seed=9)
    b = sample_inputs(spec, 50, seed=9)
    assert all(np.array_equal(u, v) for u, v in zip(a, b))
    pts = np.array(sample_inputs(spec, 10_000, seed=1))
    assert np.all(pts >= spec.lower) and np.all(pts <= spec.upper)


def test_sampling_reference_trace():
    spec = box(2)
    u = xorshift_star_oracle(42, 4)
    first, second = sample_inputs(spec, 2, seed=42)
    np.testing.assert_array_equal(first, [-1.0 + 2.0 * u[0], -1.0 + 2.0 * u[1]])
    np.testing.assert_array_equal(second, [-1.0 + 2.0 * u[2], -1.0 + 2.0 * u[3]])


def test_sampling_requires_positive_count():
    with pytest.raises(ValueError):
        sample_inputs(box(1), 0)
