import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reservoir_bench.linalg import spectral_radius
from reservoir_bench.reservoir import (
    NeuronKind,
    NeuronModel,
    NoiseBatch,
    NumericOverflowError,
    ReservoirConfig,
    ReservoirState,
    WeightSet,
    advance,
    build_topology,
    run_sequence,
    step,
    trajectory,
)
from reservoir_bench.rng import RngStream


def _sgn(v):
    return float(v > 0) - float(v < 0)


def _advance_oracle(x, u, w_in, W_s, a, kind, b, r):
    # element-by-element scalar evaluation of the four update rules
    n = len(x)
    out = []
    for i in range(n):
        z = w_in[i] * u + sum(W_s[i, j] * x[j] for j in range(n))
        act = a * math.tanh(z)
        noise = b * r[i] if r is not None else 0.0
        if kind in ("AN", "ASN"):
            out.append((1 - a) * x[i] + act + noise)
        else:
            out.append((1 - a) * x[i] + _sgn(act + noise))
    return np.array(out)


@pytest.mark.parametrize("kind", ["AN", "ASN", "BN", "BSN"])
def test_advance_matches_scalar_oracle(kind):
    rng = np.random.default_rng(5)
    n = 6
    x = rng.uniform(-2, 2, n)
    W_s = rng.uniform(-0.5, 0.5, (n, n))
    w_in = rng.uniform(-0.5, 0.5, n)
    b = 0.3 if kind in ("ASN", "BSN") else 0.0
    r = rng.uniform(-1, 1, n) if b else None
    got = advance(x, 0.7, w_in, W_s, 0.4, NeuronKind(kind), b, r)
    np.testing.assert_allclose(got, _advance_oracle(x, 0.7, w_in, W_s, 0.4, kind, b, r), rtol=1e-13, atol=1e-14)


def test_advance_batch_rows_are_independent():
    rng = np.random.default_rng(6)
    n, R = 5, 4
    X = rng.uniform(-1, 1, (R, n))
    U = rng.uniform(-1, 1, R)
    Rn = rng.uniform(-1, 1, (R, n))
    W_s = rng.uniform(-0.5, 0.5, (n, n))
    w_in = rng.uniform(-0.5, 0.5, n)
    batch = advance(X, U, w_in, W_s, 0.3, NeuronKind.ASN, 0.1, Rn)
    for i in range(R):
        single = advance(X[i], U[i], w_in, W_s, 0.3, NeuronKind.ASN, 0.1, Rn[i])
        np.testing.assert_allclose(batch[i], single, rtol=1e-14, atol=1e-15)


def test_sign_of_zero_is_zero():
    x = np.zeros(3)
    out = advance(x, 0.0, np.zeros(3), np.zeros((3, 3)), 0.5, NeuronKind.BN)
    np.testing.assert_array_equal(out, np.zeros(3))


def test_model_validation():
    with pytest.raises(ValueError):
        NeuronModel("AN", 0.05)
    with pytest.raises(ValueError):
        NeuronModel("ASN", -0.1)
    with pytest.raises(ValueError):
        NeuronModel("XYZ", 0.0)
    assert NeuronModel("asn", 0.05).kind is NeuronKind.ASN
    assert NeuronKind.BSN.binary and NeuronKind.BSN.stochastic
    assert not NeuronKind.AN.binary and not NeuronKind.AN.stochastic


@pytest.mark.parametrize("kwargs", [dict(N=0), dict(a=0.0), dict(a=1.5), dict(rho_target=0.0), dict(noise_support=(1.0, -1.0))])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        ReservoirConfig(**kwargs)


def test_build_topology_deterministic_and_scaled():
    cfg = ReservoirConfig(N=25, rho_target=0.9, w_in_scale=0.3, seed=4, topology_index=2)
    w1, w2 = build_topology(cfg), build_topology(cfg)
    np.testing.assert_array_equal(w1.W_s, w2.W_s)
    np.testing.assert_array_equal(w1.W_in, w2.W_in)
    assert np.max(np.abs(np.linalg.eigvals(w1.W_s))) == pytest.approx(0.9, abs=1e-9)
    assert np.all(np.abs(w1.W_in) <= 0.15)
    other = build_topology(ReservoirConfig(N=25, seed=4, topology_index=3))
    assert not np.allclose(other.W_s / spectral_radius(other.W_s), w1.W_s / 0.9)


def test_topology_independent_of_model_and_run():
    base = ReservoirConfig(N=10, seed=1, topology_index=1)
    a = build_topology(base)
    b = build_topology(base.with_model("BSN", 0.1))
    c = build_topology(ReservoirConfig(N=10, seed=1, topology_index=1, run_index=17))
    np.testing.assert_array_equal(a.W_s, b.W_s)
    np.testing.assert_array_equal(a.W_s, c.W_s)


def test_weightset_shapes_and_csv_roundtrip(tmp_path):
    w = build_topology(ReservoirConfig(N=4, seed=2)).with_readout(np.arange(4.0))
    assert w.W_out.shape == (1, 4)
    paths = w.save_csv(tmp_path / "w")
    assert len(paths) == 3
    back = WeightSet.load_csv(tmp_path / "w")
    np.testing.assert_array_equal(back.W_s, w.W_s)
    np.testing.assert_array_equal(back.W_in, w.W_in)
    np.testing.assert_array_equal(back.W_out, w.W_out)
    with pytest.raises(ValueError):
        WeightSet(np.ones(3), np.eye(4))


def test_step_needs_noise_stream_when_noisy():
    cfg = ReservoirConfig(N=3, model=NeuronModel("ASN", 0.1))
    w = build_topology(cfg)
    with pytest.raises(ValueError):
        step(ReservoirState.zeros(3), 0.5, w, cfg, None)
    s = step(ReservoirState.zeros(3), 0.5, w, cfg, RngStream(0, 0))
    assert s.t == 1


def test_step_reports_overflow():
    cfg = ReservoirConfig(N=2)
    w = build_topology(cfg)
    with pytest.raises(NumericOverflowError) as ei:
        step(ReservoirState(np.array([np.inf, 0.0]), 5), 0.1, w, cfg)
    assert ei.value.t == 6
    with pytest.raises(NumericOverflowError):
        step(ReservoirState.zeros(2), float("nan"), w, cfg)


def test_run_sequence_matches_repeated_step():
    cfg = ReservoirConfig(N=5, model=NeuronModel("BSN", 0.2), seed=3)
    w = build_topology(cfg)
    u = np.sin(np.arange(30) * 0.3)
    seq = trajectory(run_sequence(ReservoirState.zeros(5), u, w, cfg, RngStream(1, 1)))
    noise = RngStream(1, 1)
    s = ReservoirState.zeros(5)
    for k, uk in enumerate(u):
        s = step(s, uk, w, cfg, noise)
        np.testing.assert_array_equal(seq[k], s.x)


def test_noise_batch_rows_match_single_streams():
    cfg = ReservoirConfig(N=3, model=NeuronModel("ASN", 0.1), noise_support=(-0.5, 0.5))
    nb = NoiseBatch([RngStream(0, i) for i in range(4)], cfg, chunk=7)
    blocks = np.stack([nb.next() for _ in range(20)])
    for i in range(4):
        ref = RngStream(0, i).uniform(-0.5, 0.5, (20, 3))
        np.testing.assert_array_equal(blocks[:, i], ref)
    assert NoiseBatch(None, ReservoirConfig(N=3)).next() is None


@pytest.mark.parametrize("pair", [("AN", "ASN"), ("BN", "BSN")])
def test_zero_noise_stochastic_model_equals_deterministic(pair):
    det, sto = pair
    cfg = ReservoirConfig(N=8, seed=9)
    w = build_topology(cfg)
    u = np.cos(np.arange(100) * 0.2)
    a = trajectory(run_sequence(ReservoirState.zeros(8), u, w, cfg.with_model(det)))
    b = trajectory(run_sequence(ReservoirState.zeros(8), u, w, cfg.with_model(sto, 0.0), RngStream(0, 0)))
    np.testing.assert_array_equal(a, b)


_matrix_seed = st.integers(0, 2**31)


@settings(max_examples=25, deadline=None)
@given(
    seed=_matrix_seed,
    n=st.integers(1, 30),
    a=st.floats(0.01, 1.0),
    rho=st.floats(0.1, 3.0),
    x0_scale=st.floats(0.0, 5.0),
)
def test_analog_state_bounded(seed, n, a, rho, x0_scale):
    # |x_i| never exceeds max(|x_i(0)|, 1) under AN dynamics
    rng = np.random.default_rng(seed)
    cfg = ReservoirConfig(N=n, a=a, rho_target=rho, seed=seed % 1000)
    w = build_topology(cfg)
    x0 = rng.uniform(-x0_scale, x0_scale, n)
    bound = np.maximum(np.abs(x0), 1.0) + 1e-12
    x = x0
    u = rng.uniform(-10, 10, 400)
    for k in range(400):
        x = advance(x, u[k], w.W_in[:, 0], w.W_s, a, NeuronKind.AN)
        assert np.all(np.abs(x) <= bound)


@settings(max_examples=25, deadline=None)
@given(seed=_matrix_seed, n=st.integers(1, 20), a=st.floats(0.01, 1.0), b=st.floats(0.0, 2.0))
def test_binary_increment_in_sign_set(seed, n, a, b):
    rng = np.random.default_rng(seed)
    W_s = rng.uniform(-0.5, 0.5, (n, n))
    w_in = rng.uniform(-0.5, 0.5, n)
    x = rng.uniform(-3, 3, n)
    for _ in range(50):
        r = rng.uniform(-1, 1, n)
        kind = NeuronKind.BSN if b > 0 else NeuronKind.BN
        nxt = advance(x, rng.uniform(-3, 3), w_in, W_s, a, kind, b, r)
        # every coordinate is exactly (1-a)x plus one of -1, 0, +1
        leak = (1 - a) * x
        hits = np.stack([nxt == leak + s for s in (-1.0, 0.0, 1.0)])
        assert np.all(hits.any(axis=0))
        x = nxt


def test_single_neuron_hand_value():
    x = advance(np.zeros(1), 1.0, np.ones(1), np.zeros((1, 1)), 0.5, NeuronKind.AN)
    assert x[0] == pytest.approx(0.5 * math.tanh(1.0), abs=1e-15)
    assert x[0] == pytest.approx(0.3808, abs=1e-4)


def test_constant_input_converges_to_fixed_point():
    cfg = ReservoirConfig(N=20, rho_target=0.8, seed=5)
    w = build_topology(cfg)
    x = np.zeros(20)
    for _ in range(3000):
        nxt = advance(x, 0.5, w.W_in[:, 0], w.W_s, cfg.a, NeuronKind.AN)
        diff = np.max(np.abs(nxt - x))
        x = nxt
    assert diff < 1e-10


@settings(max_examples=25, deadline=None)
@given(seed=_matrix_seed, n=st.integers(1, 20), a=st.floats(0.05, 1.0), b=st.floats(0.0, 0.5), s=st.floats(0.1, 1.0))
def test_asn_state_bounded(seed, n, a, b, s):
    # noise adds at most b*s per step against the (1-a) decay
    rng = np.random.default_rng(seed)
    W_s = rng.uniform(-0.5, 0.5, (n, n))
    w_in = rng.uniform(-0.5, 0.5, n)
    x0 = rng.uniform(-3, 3, n)
    bound = np.maximum(np.abs(x0), 1 + b * s / a) + 1e-12
    x = x0
    for _ in range(300):
        x = advance(x, rng.uniform(-5, 5), w_in, W_s, a, NeuronKind.ASN, b, rng.uniform(-s, s, n))
        assert np.all(np.abs(x) <= bound)


def test_echo_state_forgetting():
    from reservoir_bench.signals import SignalSpec, generate

    u = generate(SignalSpec(), 500).values
    ratios = []
    for seed in range(20):
        cfg = ReservoirConfig(N=20, rho_target=1.0, seed=seed)
        w = build_topology(cfg)
        rng = np.random.default_rng(seed)
        xa, xb = rng.uniform(-1, 1, 20), rng.uniform(-1, 1, 20)
        d0 = np.linalg.norm(xa - xb)
        for uk in u:
            xa = advance(xa, uk, w.W_in[:, 0], w.W_s, cfg.a, NeuronKind.AN)
            xb = advance(xb, uk, w.W_in[:, 0], w.W_s, cfg.a, NeuronKind.AN)
        ratios.append(np.linalg.norm(xa - xb) / d0)
    assert np.median(ratios) < 1.0
