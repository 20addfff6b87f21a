"""Counter-based, splittable random streams.

Every stream is a Philox4x64-10 generator whose 128-bit key is the pair
``(seed, stream_id)`` and whose counter starts at zero.  Doubles are drawn
as ``(next_uint64 >> 11) * 2**-53`` (numpy's ``Generator.random``), so a
stream is fully specified by those two integers and reproducible on any
platform.

Stream ids pack the experiment coordinates into one 64-bit word::

    stream_id = purpose << 56 | topology_index << 32 | run_index

with ``purpose`` < 2**8, ``topology_index`` < 2**24 and ``run_index`` < 2**32.
"""

from __future__ import annotations

from enum import IntEnum

import numpy as np

MASK64 = (1 << 64) - 1
MAX_TOPOLOGY = 1 << 24
MAX_RUN = 1 << 32


class InvalidRangeError(ValueError):
    pass


class Purpose(IntEnum):
    """What a derived stream is used for (top byte of the stream id)."""

    NEURON_NOISE = 0
    TOPOLOGY = 1
    INPUT_NOISE = 2


class RngStream:
    """A reproducible uniform random stream keyed by ``(seed, stream_id)``.

    Two streams constructed from the same pair emit identical sequences;
    streams with different ids share no state.
    """

    __slots__ = ("seed", "stream_id", "_gen")

    def __init__(self, seed: int, stream_id: int = 0):
        if seed < 0 or stream_id < 0:
            raise ValueError("seed and stream_id must be nonnegative")
        self.seed = int(seed) & MASK64
        self.stream_id = int(stream_id) & MASK64
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id:#x})"

    @property
    def counter(self) -> int:
        """Current 256-bit Philox counter (low word first), for diagnostics."""
        words = self._gen.bit_generator.state["state"]["counter"]
        return sum(int(w) << (64 * i) for i, w in enumerate(words))

    def next_uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        if not lo < hi:
            raise InvalidRangeError(f"empty range [{lo}, {hi})")
        return lo + (hi - lo) * float(self._gen.random())

    def uniform(self, lo: float, hi: float, size) -> np.ndarray:
        """Array of ``U[lo, hi)`` samples; equals ``size`` successive scalar draws."""
        if not lo < hi:
            raise InvalidRangeError(f"empty range [{lo}, {hi})")
        return lo + (hi - lo) * self._gen.random(size)

    def spawn_generator(self) -> np.random.Generator:
        """The underlying numpy generator (shares state with this stream)."""
        return self._gen


def next_uniform(stream: RngStream, lo: float, hi: float) -> float:
    return stream.next_uniform(lo, hi)


def stream_id_for(topology_index: int, run_index: int, purpose: Purpose = Purpose.NEURON_NOISE) -> int:
    if not 0 <= topology_index < MAX_TOPOLOGY:
        raise ValueError(f"topology_index out of range: {topology_index}")
    if not 0 <= run_index < MAX_RUN:
        raise ValueError(f"run_index out of range: {run_index}")
    return (int(purpose) << 56) | (topology_index << 32) | run_index


def derive_stream(
    seed: int,
    topology_index: int,
    run_index: int,
    purpose: Purpose = Purpose.NEURON_NOISE,
) -> RngStream:
    """Stream for one (topology, run) cell of an experiment grid."""
    return RngStream(seed, stream_id_for(topology_index, run_index, purpose))
