import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import signal as sps

from reservoir_bench.rng import RngStream
from reservoir_bench.signals import (
    PRESETS,
    InvalidSpecError,
    SignalKind,
    SignalSpec,
    TimeSeries,
    generate,
    get_preset,
    sawtooth_wave,
    square_wave,
)


def test_clean_matches_closed_form():
    spec = SignalSpec()
    u = generate(spec, 300).values
    t = np.arange(300.0)
    ref = [1.0 * math.cos(2 * math.pi * 0.1 * k) + 2.0 * math.sin(2 * math.pi * 0.02 * k) for k in t]
    np.testing.assert_allclose(u, ref, rtol=0, atol=1e-12)
    assert u[0] == 1.0


def test_clean_quarter_period_values():
    u = generate(SignalSpec(), 13).values
    # t=12.5 is off-grid; t=0 and t=5 (half f1 period) are exact
    assert u[0] == pytest.approx(1.0, abs=1e-15)
    assert u[5] == pytest.approx(-1.0 + 2.0 * math.sin(2 * math.pi * 0.1), abs=1e-12)


def test_dt_scales_time():
    a = generate(SignalSpec(dt=0.5), 20)
    t = np.arange(20) * 0.5
    np.testing.assert_allclose(a.values, np.cos(2 * np.pi * 0.1 * t) + 2 * np.sin(2 * np.pi * 0.02 * t), atol=1e-12)
    assert a.dt == 0.5


def test_distorted_noise_bounded_and_reproducible():
    spec = get_preset("distorted")
    clean = generate(SignalSpec(), 500).values
    u1 = generate(spec, 500, RngStream(4, 2)).values
    u2 = generate(spec, 500, RngStream(4, 2)).values
    np.testing.assert_array_equal(u1, u2)
    d = u1 - clean
    assert np.all(d >= -0.5) and np.all(d < 0.5)
    assert abs(d.mean()) < 0.05


def test_distorted_noise_matches_stream():
    spec = SignalSpec(SignalKind.DISTORTED, C=1.5)
    u = generate(spec, 50, RngStream(9, 0)).values
    r = RngStream(9, 0).uniform(0, 1, 50)
    np.testing.assert_allclose(u - generate(SignalSpec(), 50).values, 1.5 * (r - 0.5), atol=1e-12)
    assert spec.needs_noise


def test_distorted_without_noise_stream_fails():
    with pytest.raises(InvalidSpecError):
        generate(get_preset("distorted"), 10)


def test_harmonic_matches_direct_sum():
    spec = get_preset("harmonic")
    u = generate(spec, 100).values
    ref = []
    for k in range(100):
        s = 0.0
        for n in range(1, 30, 2):
            s += math.sin(2 * math.pi * n * 0.1 * k) / n
        ref.append(4 / math.pi * s)
    np.testing.assert_allclose(u, ref, atol=1e-12)


def test_sawtooth_and_square_match_scipy():
    phase = np.linspace(0.013, 40.0, 997)
    np.testing.assert_allclose(sawtooth_wave(phase), sps.sawtooth(phase), atol=1e-12)
    np.testing.assert_array_equal(square_wave(phase), sps.square(phase))


def test_wave_boundaries():
    assert sawtooth_wave(0.0) == -1.0
    assert square_wave(0.0) == 1.0
    assert square_wave(np.pi) == -1.0


def test_sawtooth_and_square_signals_match_scipy():
    t = np.arange(400.0)
    # skip samples on period or half-period boundaries (t = 5k here), where
    # scipy's float phase can land on the other side of the jump
    off = np.mod(t, 5) != 0
    for name, fn in (("sawtooth", sps.sawtooth), ("square", sps.square)):
        u = generate(get_preset(name), 400).values
        ref = 1.0 * fn(2 * np.pi * 0.1 * t) + 2.0 * fn(2 * np.pi * 0.02 * t)
        np.testing.assert_allclose(u[off], ref[off], atol=1e-9)


def test_period_starts_are_exact():
    saw = generate(get_preset("sawtooth"), 201).values
    sq = generate(get_preset("square"), 201).values
    for k in (0, 50, 100, 150, 200):
        assert saw[k] == -3.0
        assert sq[k] == 3.0


def test_square_exact_levels():
    u = generate(get_preset("square"), 200).values
    assert set(np.unique(u)) <= {-3.0, -1.0, 1.0, 3.0}


@pytest.mark.parametrize(
    "kwargs",
    [dict(f1=0.0), dict(f2=-1.0), dict(dt=0.0), dict(C=-0.1), dict(harmonic_count=0), dict(A=float("nan"))],
)
def test_invalid_specs(kwargs):
    with pytest.raises(InvalidSpecError):
        SignalSpec(**kwargs)


def test_unknown_preset():
    with pytest.raises(InvalidSpecError):
        get_preset("nope")


def test_table_variants():
    a, b, c = (PRESETS[k] for k in ("variant_a", "variant_b", "variant_c"))
    assert (a.A, a.B, a.C, a.f1, a.f2) == (0.5, 1.0, 0.0, 0.2, 0.04)
    assert (b.A, b.B, b.C) == (1.0, 2.0, 0.5)
    assert (c.A, c.B, c.C) == (1.0, 2.0, 1.5)
    assert PRESETS["input1"] is PRESETS["clean"]


def test_roundtrip_dict():
    for spec in PRESETS.values():
        assert SignalSpec.from_dict(spec.to_dict()) == spec


def test_timeseries_rejects_nonfinite():
    with pytest.raises(ValueError):
        TimeSeries([0.0, float("inf")])
    ts = TimeSeries(np.arange(5.0), 0.5)
    assert len(ts.slice(1, 3)) == 2 and ts.slice(1, 3).dt == 0.5


@settings(max_examples=40, deadline=None)
@given(
    kind=st.sampled_from(list(SignalKind)),
    A=st.floats(-3, 3),
    B=st.floats(-3, 3),
    C=st.floats(0, 2),
    f1=st.floats(0.001, 0.5),
    f2=st.floats(0.001, 0.5),
    seed=st.integers(0, 1000),
)
def test_bound_holds(kind, A, B, C, f1, f2, seed):
    spec = SignalSpec(kind, A=A, B=B, C=C, f1=f1, f2=f2)
    u = generate(spec, 300, RngStream(seed, 0)).values
    assert np.all(np.abs(u) <= spec.bound() + 1e-9)
