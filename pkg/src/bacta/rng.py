"""Counter-based splittable random streams.

The generator is SplitMix64: the stream state advances by a fixed odd
increment and each output is a bijective finalizer of the counter, so
streams derived from distinct keys never share output sequences in
practice and replay is exact across platforms.

Uniform consumption per variate (reproducibility contract):
  uniform        1
  normal         2 per polar-rejection round (~1.27 rounds on average);
                 the second polar value is discarded, never cached
  exponential    1
  gamma          Marsaglia-Tsang: 3 per round (2 for the normal + 1
                 accept test); shape < 1 adds 1 uniform for the boost
  beta           two gamma draws
  bernoulli      1
  binomial       n bernoulli draws
  poisson        one exponential per event plus one terminating draw
"""

from __future__ import annotations

import math

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 finalizer; a bijection on 64-bit integers."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def mix_seed(seed: int, key: int) -> int:
    """Stateless derivation of a substream seed from (seed, key)."""
    return mix64(mix64(seed & _MASK) ^ ((key * _GOLDEN) & _MASK))


class RandomStream:
    """One independently seeded stream; owned by a single caller."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = mix64(seed & _MASK)

    def substream(self, key: int) -> "RandomStream":
        """Derive an independent stream without disturbing this one."""
        return RandomStream(mix_seed(self._state, key))

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK
        return mix64(self._state)

    def uniform(self) -> float:
        """Uniform on [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def normal(self) -> float:
        """Standard normal via the polar (Marsaglia) method."""
        while True:
            u = 2.0 * self.uniform() - 1.0
            v = 2.0 * self.uniform() - 1.0
            s = u * u + v * v
            if 0.0 < s < 1.0:
                return u * math.sqrt(-2.0 * math.log(s) / s)

    def exponential(self) -> float:
        """Standard exponential; guards against log(0)."""
        u = self.uniform()
        while u <= 0.0:
            u = self.uniform()
        return -math.log(u)
