"""Deterministic random numbers for reproducible trajectories.

The generator family is SplitMix64: state advances by the 64-bit golden
constant and the output is the standard 3-stage finalizer.  Uniform doubles
are the top 53 bits scaled by 2**-53.  Substreams are derived from a seed by
counter folding: ``s_{j+1} = mix64(s_j + (c_j + 1) * GOLDEN mod 2**64)`` over
the counter list.  The compiled trajectory kernel implements the identical
arithmetic, so sampled trajectories are bit-identical across both paths and
across any parallel scheduling (per-trial streams depend only on the master
seed and the trial index).
"""

from __future__ import annotations

__all__ = ["MASK64", "GOLDEN", "mix64", "derive_seed", "SplitMix64"]

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *counters: int) -> int:
    s = seed & MASK64
    for c in counters:
        s = mix64((s + (int(c) + 1) * GOLDEN) & MASK64)
    return s


class SplitMix64:
    """Seeded stream of uniforms; `spawn` derives independent substreams."""

    __slots__ = ("seed", "state")

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self.state = self.seed

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 2.0 ** -53

    def spawn(self, *counters: int) -> "SplitMix64":
        return SplitMix64(derive_seed(self.seed, *counters))

    def __repr__(self):
        return f"SplitMix64(seed={self.seed:#x})"
