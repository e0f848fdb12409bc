"""Seeded Monte Carlo engine over Rayleigh fading draws.

Samples are cut into fixed-size chunks and chunk ``i`` is drawn from a
Philox (counter-based) generator keyed by ``(seed, i)``.  Results therefore
depend only on ``(seed, n)``: the worker count changes who computes a chunk,
never what the chunk contains, and partial results are merged in chunk order.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .channel import FadingDraw, sample_fading

__all__ = [
    "CHUNK_SIZE",
    "DEFAULT_SEED",
    "DEFAULT_SE_MULTIPLIER",
    "Provenance",
    "ThroughputEstimate",
    "stream",
    "chunk_sizes",
    "map_chunks",
    "estimate",
]

CHUNK_SIZE = 1 << 16
DEFAULT_SEED = 20_100_915
DEFAULT_SE_MULTIPLIER = 4.0


class Provenance(enum.Enum):
    ANALYTIC = "analytic"
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte-carlo"


@dataclass(frozen=True)
class ThroughputEstimate:
    """A value (throughput in nats/channel use, or a probability) with its origin.

    ``half_width`` is ``std_error`` times the requested multiplier and is zero
    for analytic and quadrature values.
    """

    value: float
    half_width: float = 0.0
    n: int = 0
    provenance: Provenance = Provenance.ANALYTIC
    std_error: float = 0.0

    def contains(self, other: float, slack: float = 0.0) -> bool:
        """True if ``other`` is within ``half_width + slack`` of ``value``."""
        return abs(self.value - other) <= self.half_width + slack


def stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for substream ``index`` of ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))
    key = ss.generate_state(2, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def chunk_sizes(n: int, chunk: int = CHUNK_SIZE) -> list[int]:
    full, rest = divmod(int(n), chunk)
    return [chunk] * full + ([rest] if rest else [])


def map_chunks(
    fn: Callable[[FadingDraw], object], n: int, seed: int = DEFAULT_SEED, workers: int = 1
) -> list:
    """Apply ``fn`` to the fading draws of every chunk; results in chunk order."""
    sizes = chunk_sizes(n)

    def run(i: int):
        return fn(sample_fading(stream(seed, i), sizes[i]))

    if workers <= 1 or len(sizes) <= 1:
        return [run(i) for i in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, range(len(sizes))))


def _merge(stats: Sequence[tuple[int, float, float]]) -> tuple[int, float, float]:
    # pairwise-update mean/M2 merge, applied left to right
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in stats:
        if nb == 0:
            continue
        tot = n + nb
        delta = mb - mean
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n = tot
    return n, mean, m2


def _chunk_stats(values) -> tuple[int, float, float]:
    v = np.asarray(values, dtype=float).ravel()
    mean = float(v.mean())
    return v.size, mean, float(np.sum((v - mean) ** 2))


def estimate(
    payoff: Callable[[FadingDraw], np.ndarray],
    n: int,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
    multiplier: float = DEFAULT_SE_MULTIPLIER,
) -> ThroughputEstimate:
    """Sample mean of ``payoff`` over ``n`` fading draws.

    ``payoff`` receives a vectorised :class:`FadingDraw` and must return one
    value per draw.
    """
    if n < 2:
        raise ValueError(f"need at least two samples, got {n}")
    stats = map_chunks(lambda d: _chunk_stats(np.broadcast_to(payoff(d), d.nu_s.shape)), n, seed, workers)
    count, mean, m2 = _merge(stats)
    se = math.sqrt(m2 / (count - 1) / count)
    return ThroughputEstimate(mean, multiplier * se, count, Provenance.MONTE_CARLO, se)
