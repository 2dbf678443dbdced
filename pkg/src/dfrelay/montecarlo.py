"""Monte Carlo oracle for the weaker-hop SNR and the adaptive capacities.

Draws are generated in fixed-size blocks from a Philox counter-based
generator. Block ``b`` of stream ``s`` uses counter ``(0, 0, b, s)`` under
key ``seed``, so every draw is a pure function of ``(seed, stream, index)``
and estimates do not depend on how blocks are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .capacity import AdaptiveScheme, opra_cutoff
from .distribution import MinSnrDistribution, RicianHop
from .errors import DegenerateSampleError, DomainError

__all__ = [
    "SimulationEstimate",
    "BLOCK_SIZE",
    "sample_hop_snr",
    "sample_min_snr",
    "estimate_min_cdf",
    "estimate_single_hop_survival",
    "estimate_density",
    "estimate_outage",
    "estimate_capacity",
    "estimate_expected_inverse_tail",
]

BLOCK_SIZE = 1 << 20
STREAM_X, STREAM_Y = 0, 1


@dataclass(frozen=True)
class SimulationEstimate:
    value: float
    standard_error: float
    samples: int
    seed: int

    def z_score(self, reference: float) -> float:
        if self.standard_error == 0.0:
            return 0.0 if self.value == reference else math.copysign(math.inf, self.value - reference)
        return (self.value - reference) / self.standard_error


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise DomainError("seed must be a 64-bit unsigned integer")
    return seed


def _block_generator(seed: int, stream: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, block, stream]))


def _hop_block(hop: RicianHop, seed: int, stream: int, block: int, count: int) -> np.ndarray:
    # G1 ~ N(s, sigma2/2), G2 ~ N(0, sigma2/2) with s**2 = K sigma2, s**2 + sigma2 = mean
    sigma2 = hop.mean_snr / (1.0 + hop.k_factor)
    los = math.sqrt(hop.k_factor * sigma2)
    z = _block_generator(seed, stream, block).standard_normal((2, BLOCK_SIZE))[:, :count]
    scale = math.sqrt(sigma2 / 2.0)
    g1 = los + scale * z[0]
    g2 = scale * z[1]
    return g1 * g1 + g2 * g2


def _blocks(n: int) -> Iterator[tuple[int, int]]:
    for block in range((n + BLOCK_SIZE - 1) // BLOCK_SIZE):
        yield block, min(BLOCK_SIZE, n - block * BLOCK_SIZE)


def sample_hop_snr(hop: RicianHop, seed: int, n: int, stream: int = STREAM_X) -> np.ndarray:
    """``n`` draws of one hop's instantaneous SNR ``G1**2 + G2**2``."""
    seed = _check_seed(seed)
    if n < 1:
        raise DomainError("need at least one sample")
    return np.concatenate([_hop_block(hop, seed, stream, b, c) for b, c in _blocks(n)])


def _min_blocks(dist: MinSnrDistribution, seed: int, n: int) -> Iterator[np.ndarray]:
    seed = _check_seed(seed)
    if n < 1:
        raise DomainError("need at least one sample")
    for block, count in _blocks(n):
        gx = _hop_block(dist.hop_x, seed, STREAM_X, block, count)
        gy = _hop_block(dist.hop_y, seed, STREAM_Y, block, count)
        yield np.minimum(gx, gy)


def sample_min_snr(dist: MinSnrDistribution, seed: int, n: int) -> np.ndarray:
    return np.concatenate(list(_min_blocks(dist, seed, n)))


def _proportion(count: int, n: int, seed: int) -> SimulationEstimate:
    p = count / n
    return SimulationEstimate(p, math.sqrt(p * (1.0 - p) / n), n, seed)


def estimate_min_cdf(
    dist: MinSnrDistribution, gamma_grid: Sequence[float], seed: int, n: int
) -> list[SimulationEstimate]:
    """Empirical ``P(min <= g)`` at each grid point with binomial standard errors."""
    if n < 1000:
        raise DomainError("empirical CDF needs at least 1000 samples")
    grid = np.asarray(gamma_grid, dtype=float)
    counts = np.zeros(grid.shape, dtype=np.int64)
    for chunk in _min_blocks(dist, seed, n):
        chunk.sort()
        counts += np.searchsorted(chunk, grid, side="right")
    return [_proportion(int(c), n, seed) for c in counts]


def estimate_single_hop_survival(hop: RicianHop, gamma: float, seed: int, n: int) -> SimulationEstimate:
    count = 0
    for block, size in _blocks(n):
        count += int(np.count_nonzero(_hop_block(hop, _check_seed(seed), STREAM_X, block, size) > gamma))
    return _proportion(count, n, seed)


def estimate_density(samples: np.ndarray, center: float, width: float) -> SimulationEstimate:
    """Histogram density over ``[center - width/2, center + width/2)``."""
    n = samples.size
    inside = np.count_nonzero((samples >= center - width / 2) & (samples < center + width / 2))
    p = inside / n
    return SimulationEstimate(p / width, math.sqrt(p * (1 - p) / n) / width, n, -1)


def estimate_outage(dist: MinSnrDistribution, beta0: float, seed: int, n: int) -> SimulationEstimate:
    return estimate_min_cdf(dist, [beta0], seed, n)[0]


def _moments(dist, seed, n, func):
    """Sums needed for sample means: (sum f, sum f**2)."""
    s1 = s2 = 0.0
    for chunk in _min_blocks(dist, seed, n):
        v = func(chunk)
        s1 += float(np.sum(v))
        s2 += float(np.sum(v * v))
    return s1, s2


def _mean_estimate(s1, s2, n, seed) -> SimulationEstimate:
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0) * n / max(n - 1, 1)
    return SimulationEstimate(mean, math.sqrt(var / n), n, seed)


def estimate_expected_inverse_tail(dist: MinSnrDistribution, gamma0: float, seed: int, n: int) -> SimulationEstimate:
    s1, s2 = _moments(dist, seed, n, lambda g: np.where(g >= gamma0, 1.0 / np.maximum(g, gamma0), 0.0))
    return _mean_estimate(s1, s2, n, seed)


def estimate_capacity(
    dist: MinSnrDistribution,
    scheme: AdaptiveScheme | str,
    seed: int,
    n: int,
    cutoff: float | None = None,
) -> SimulationEstimate:
    """Sample-mean estimate of a scheme's capacity (bit/s/Hz).

    OPRA without ``cutoff`` uses the analytic water-filling cutoff; TIFR
    requires ``cutoff``. The TIFR standard error uses the delta method on
    the pair (mean of 1{g >= b}/g, fraction of g >= b).
    """
    scheme = AdaptiveScheme(str(getattr(scheme, "value", scheme)).upper())
    if scheme is AdaptiveScheme.ORA:
        s1, s2 = _moments(dist, seed, n, lambda g: 0.5 * np.log2(1.0 + g))
        return _mean_estimate(s1, s2, n, seed)
    if scheme is AdaptiveScheme.OPRA:
        g0 = opra_cutoff(dist) if cutoff is None else float(cutoff)
        s1, s2 = _moments(
            dist, seed, n, lambda g: np.where(g >= g0, 0.5 * np.log2(np.maximum(g, g0) / g0), 0.0)
        )
        return _mean_estimate(s1, s2, n, seed)

    if cutoff is None or not cutoff > 0:
        raise DomainError("TIFR estimation needs a positive cutoff")
    b0 = float(cutoff)
    # accumulate sums of u = 1{g>=b}/g, v = 1{g>=b} and their cross moments
    su = suu = sv = suv = 0.0
    for chunk in _min_blocks(dist, seed, n):
        keep = chunk >= b0
        u = np.where(keep, 1.0 / np.maximum(chunk, b0), 0.0)
        su += float(u.sum())
        suu += float((u * u).sum())
        sv += float(keep.sum())
        suv += float(u.sum())  # u*v == u since v is an indicator
    if sv == 0:
        raise DegenerateSampleError(f"no samples at or above the cutoff {b0:g}")
    mu, mv = su / n, sv / n
    var_u = suu / n - mu * mu
    var_v = mv - mv * mv
    cov = suv / n - mu * mv
    value = 0.5 * math.log2(1.0 + 1.0 / mu) * mv
    # gradient of 0.5*log2(1 + 1/u)*v
    d_u = -0.5 * mv / (math.log(2.0) * mu * (mu + 1.0))
    d_v = 0.5 * math.log2(1.0 + 1.0 / mu)
    var = d_u * d_u * var_u + d_v * d_v * var_v + 2.0 * d_u * d_v * cov
    return SimulationEstimate(value, math.sqrt(max(var, 0.0) / n), n, seed)
