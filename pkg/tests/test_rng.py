import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reservoir_bench.rng import (
    InvalidRangeError,
    Purpose,
    RngStream,
    derive_stream,
    next_uniform,
    stream_id_for,
)


def _oracle_doubles(seed, stream_id, n):
    # raw Philox words converted by hand: top 53 bits scaled to [0, 1)
    raw = np.random.Philox(key=np.array([seed, stream_id], dtype=np.uint64)).random_raw(n)
    return (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53


@pytest.mark.parametrize("seed,sid", [(0, 0), (7, 1), (2023, (1 << 56) | (3 << 32) | 41), (2**63, 2**64 - 1)])
def test_stream_matches_raw_philox(seed, sid):
    s = RngStream(seed, sid)
    got = np.array([s.next_uniform() for _ in range(16)])
    np.testing.assert_array_equal(got, _oracle_doubles(seed, sid, 16))


def test_same_key_same_sequence():
    a, b = RngStream(5, 9), RngStream(5, 9)
    np.testing.assert_array_equal(a.uniform(-1, 1, 100), b.uniform(-1, 1, 100))


def test_different_ids_differ():
    a, b = RngStream(5, 9), RngStream(5, 10)
    assert not np.array_equal(a.uniform(0, 1, 20), b.uniform(0, 1, 20))


def test_array_draws_equal_scalar_draws():
    a, b = RngStream(3, 4), RngStream(3, 4)
    block = a.uniform(-0.5, 0.5, (7, 3))
    scalars = np.array([next_uniform(b, -0.5, 0.5) for _ in range(21)]).reshape(7, 3)
    np.testing.assert_array_equal(block, scalars)


def test_counter_advances():
    s = RngStream(1, 1)
    c0 = s.counter
    s.uniform(0, 1, 8)
    assert s.counter > c0


@pytest.mark.parametrize("lo,hi", [(1.0, 1.0), (2.0, -2.0)])
def test_empty_range_rejected(lo, hi):
    s = RngStream(0, 0)
    with pytest.raises(InvalidRangeError):
        s.next_uniform(lo, hi)
    with pytest.raises(InvalidRangeError):
        s.uniform(lo, hi, 3)


def test_stream_id_packing():
    assert stream_id_for(0, 0, Purpose.NEURON_NOISE) == 0
    assert stream_id_for(3, 41, Purpose.TOPOLOGY) == (1 << 56) | (3 << 32) | 41
    assert stream_id_for(0, 1, Purpose.INPUT_NOISE) == (2 << 56) | 1
    with pytest.raises(ValueError):
        stream_id_for(1 << 24, 0)
    with pytest.raises(ValueError):
        stream_id_for(0, 1 << 32)


def test_purposes_are_independent():
    draws = {p: derive_stream(11, 2, 3, p).uniform(0, 1, 5) for p in Purpose}
    vals = list(draws.values())
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            assert not np.array_equal(vals[i], vals[j])


def test_negative_seed_rejected():
    with pytest.raises(ValueError):
        RngStream(-1, 0)


@settings(max_examples=50, deadline=None)
@given(
    seed=st.integers(0, 2**32),
    lo=st.floats(-1e3, 1e3),
    width=st.floats(1e-6, 1e3),
)
def test_draws_stay_in_half_open_range(seed, lo, width):
    hi = lo + width
    v = RngStream(seed, 0).uniform(lo, hi, 200)
    assert np.all(v >= lo) and np.all(v <= hi)
