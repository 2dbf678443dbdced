"""Ergodic capacity of the dual-hop decode-and-forward link under adaptive transmission.

Three policies are covered: rate adaptation at constant power (ORA),
joint power and rate adaptation with an optimal cutoff (OPRA) and truncated
channel inversion at fixed rate (TIFR). Capacities are per unit bandwidth
and already include the factor 0.5 for the two orthogonal channel uses.

The primary route is the closed-form series over the Gamma mixture of the
minimum SNR; the cross-check integrates the Bessel-form density directly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .distribution import MinSnrDistribution, reference_min_pdf, reference_min_survival
from .errors import DomainError, NumericalError, RootNotBracketedError
from .special_functions import (
    DEFAULT_CONDITION_LIMIT,
    log_ratio_gamma_integrals,
    log_weighted_gamma_integrals,
)

__all__ = [
    "AdaptiveScheme",
    "CapacityResult",
    "capacity_ora",
    "capacity_opra",
    "capacity_tifr",
    "opra_cutoff",
    "cutoff_equation",
    "outage_probability",
    "optimize_tifr_cutoff",
    "quadrature_expectation",
]

LOG2E = math.log2(math.e)
CUTOFF_FLOOR = 1e-12
TIFR_FLOOR = 1e-6


class AdaptiveScheme(str, enum.Enum):
    ORA = "ORA"
    OPRA = "OPRA"
    TIFR = "TIFR"


@dataclass(frozen=True)
class CapacityResult:
    """Capacity of one scheme at one parameter point.

    ``capacity`` is in bit/s/Hz. ``cutoff`` is gamma_0 for OPRA and beta_0
    for TIFR. ``error_estimate`` is the relative disagreement between the
    series and quadrature routes when both were run, otherwise the series
    truncation bound. ``fallback_terms`` counts binomial sums that were
    replaced by quadrature because of cancellation.
    """

    scheme: AdaptiveScheme
    capacity: float
    cutoff: float | None = None
    outage_probability: float | None = None
    backend: str = "series"
    error_estimate: float = 0.0
    fallback_terms: int = 0


def _relative_gap(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 0 else 0.0


# ---------------------------------------------------------------------------
# Quadrature against the Bessel-form density
# ---------------------------------------------------------------------------

def quadrature_expectation(
    dist: MinSnrDistribution,
    func: Callable[[float], float],
    lower: float = 0.0,
    rel_tol: float = 1e-12,
) -> tuple[float, float]:
    """``int_lower^inf func(g) f_min(g) dg`` using the Bessel/Marcum density.

    The range is cut into geometrically growing panels scaled by the smaller
    mean SNR, up to where the minimum's survival is below 1e-18, and the rest
    goes to QUADPACK's infinite-range rule. Returns ``(value, abs_error)``.
    """
    scale = min(dist.hop_x.mean_snr, dist.hop_y.mean_snr)

    def integrand(g):
        return func(g) * reference_min_pdf(dist, g)

    upper = lower + scale
    while reference_min_survival(dist, upper) > 1e-18:
        upper = lower + 2.0 * (upper - lower)
    edges = [lower]
    width = 0.05 * scale
    while edges[-1] + width < upper:
        edges.append(edges[-1] + width)
        width *= 2.0
    edges.append(upper)

    total, err = [], 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=rel_tol, limit=200)
        total.append(v)
        err += e
    v, e = integrate.quad(integrand, upper, np.inf, epsabs=1e-300, epsrel=rel_tol, limit=200)
    total.append(v)
    return math.fsum(total), err + e


# ---------------------------------------------------------------------------
# ORA
# ---------------------------------------------------------------------------

def _ora_series(dist: MinSnrDistribution, condition_limit: float):
    mix = dist.mixture()
    evals = log_weighted_gamma_integrals(
        mix.max_order, mix.rate, condition_limit=condition_limit
    )
    log_moments = np.array([e.log_value for e in evals])
    # E[ln(1+g)] under Gamma(p+1, s) is s**(p+1)/p! * int g**p exp(-s g) ln(1+g) dg
    per_order = np.exp(mix.log_normalizers() + log_moments)
    nats = math.fsum(mix.weights * per_order)
    return 0.5 * LOG2E * nats, sum(e.fallback for e in evals)


def _ora_quadrature(dist: MinSnrDistribution) -> float:
    value, _ = quadrature_expectation(dist, lambda g: math.log1p(g))
    return 0.5 * LOG2E * value


def capacity_ora(
    dist: MinSnrDistribution,
    backend: str = "series",
    cross_check: bool = True,
    condition_limit: float = DEFAULT_CONDITION_LIMIT,
) -> CapacityResult:
    """Constant power, optimal rate: ``0.5 E[log2(1 + gamma_min)]``."""
    fallback = 0
    if backend == "series":
        value, fallback = _ora_series(dist, condition_limit)
        other = _ora_quadrature(dist) if cross_check else None
    elif backend == "quadrature":
        value = _ora_quadrature(dist)
        other = _ora_series(dist, condition_limit)[0] if cross_check else None
    else:
        raise ValueError(f"unknown backend {backend!r}")
    err = _relative_gap(value, other) if other is not None else dist.truncation_bound
    return CapacityResult(AdaptiveScheme.ORA, value, backend=backend, error_estimate=err,
                          fallback_terms=fallback)


# ---------------------------------------------------------------------------
# OPRA
# ---------------------------------------------------------------------------

def cutoff_equation(dist: MinSnrDistribution, gamma0: float) -> float:
    """``(1 - F(g0))/g0 - E[1/g ; g >= g0] - 1``; zero at the optimal cutoff."""
    return dist.survival(gamma0) / gamma0 - dist.expected_inverse_tail(gamma0) - 1.0


def opra_cutoff(dist: MinSnrDistribution, residual_tol: float = 1e-10) -> float:
    """Water-filling cutoff gamma_0 in (0, 1].

    The cutoff equation is strictly decreasing in gamma_0, positive near 0
    and nonpositive at 1, so bisection (in log scale) on that bracket
    always converges.
    """
    grid = np.geomspace(CUTOFF_FLOOR, 1.0, 25)
    h_grid = np.array([cutoff_equation(dist, g) for g in grid])
    if not np.all(np.diff(h_grid) < 0):
        raise NumericalError("cutoff equation is not decreasing on (0, 1]; series unreliable")
    lo, hi = CUTOFF_FLOOR, 1.0
    h_lo, h_hi = h_grid[0], h_grid[-1]
    if h_hi == 0.0:
        return 1.0
    if not (h_lo > 0 > h_hi):
        raise RootNotBracketedError(
            f"cutoff equation has h({lo:g})={h_lo:.3g}, h(1)={h_hi:.3g}"
        )
    # narrow the bracket with the grid values before bisecting
    idx = int(np.argmax(h_grid <= 0))
    lo, hi = grid[idx - 1], grid[idx]
    mid, h_mid = hi, h_grid[idx]
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        h_mid = cutoff_equation(dist, mid)
        if h_mid == 0.0 or hi - lo <= 4e-16 * hi:
            break
        if h_mid > 0:
            lo = mid
        else:
            hi = mid
    if abs(h_mid) > residual_tol:
        raise NumericalError(f"cutoff residual {h_mid:.3g} above {residual_tol:g}")
    return mid


def _opra_series(dist: MinSnrDistribution, gamma0: float) -> float:
    mix = dist.mixture()
    evals = log_ratio_gamma_integrals(mix.max_order, mix.rate, gamma0)
    log_moments = np.array([e.log_value for e in evals])
    per_order = np.exp(mix.log_normalizers() + log_moments)
    return 0.5 * LOG2E * math.fsum(mix.weights * per_order)


def _opra_quadrature(dist: MinSnrDistribution, gamma0: float) -> float:
    value, _ = quadrature_expectation(dist, lambda g: math.log(g / gamma0), lower=gamma0)
    return 0.5 * LOG2E * value


def capacity_opra(
    dist: MinSnrDistribution, backend: str = "series", cross_check: bool = True
) -> CapacityResult:
    """Optimal power and rate: ``0.5 E[log2(gamma/gamma0) ; gamma >= gamma0]``."""
    gamma0 = opra_cutoff(dist)
    if backend == "series":
        value = _opra_series(dist, gamma0)
        other = _opra_quadrature(dist, gamma0) if cross_check else None
    elif backend == "quadrature":
        value = _opra_quadrature(dist, gamma0)
        other = _opra_series(dist, gamma0) if cross_check else None
    else:
        raise ValueError(f"unknown backend {backend!r}")
    err = _relative_gap(value, other) if other is not None else dist.truncation_bound
    return CapacityResult(AdaptiveScheme.OPRA, value, cutoff=gamma0, backend=backend,
                          error_estimate=err)


# ---------------------------------------------------------------------------
# TIFR
# ---------------------------------------------------------------------------

def outage_probability(dist: MinSnrDistribution, beta0: float) -> float:
    beta0 = float(beta0)
    if not beta0 >= 0:
        raise DomainError("outage threshold must be nonnegative")
    return dist.cdf(beta0)


def _tifr_value(inverse_tail: float, p_out: float) -> float:
    return 0.5 * math.log2(1.0 + 1.0 / inverse_tail) * (1.0 - p_out)


def _tifr_series(dist: MinSnrDistribution, beta0: float) -> tuple[float, float]:
    p_out = dist.cdf(beta0)
    return _tifr_value(dist.expected_inverse_tail(beta0), p_out), p_out


def _tifr_quadrature(dist: MinSnrDistribution, beta0: float) -> tuple[float, float]:
    inv, _ = quadrature_expectation(dist, lambda g: 1.0 / g, lower=beta0)
    p_out = 1.0 - reference_min_survival(dist, beta0)
    return _tifr_value(inv, p_out), p_out


def capacity_tifr(
    dist: MinSnrDistribution, beta0: float, backend: str = "series", cross_check: bool = True
) -> CapacityResult:
    """Truncated channel inversion with fixed rate at cutoff ``beta0 > 0``.

    ``beta0 = 0`` is rejected: ``f_min(0) > 0`` so ``E[1/gamma]`` diverges.
    """
    beta0 = float(beta0)
    if not beta0 > 0:
        raise DomainError("TIFR cutoff must be strictly positive")
    if backend == "series":
        (value, p_out) = _tifr_series(dist, beta0)
        other = _tifr_quadrature(dist, beta0)[0] if cross_check else None
    elif backend == "quadrature":
        (value, p_out) = _tifr_quadrature(dist, beta0)
        other = _tifr_series(dist, beta0)[0] if cross_check else None
    else:
        raise ValueError(f"unknown backend {backend!r}")
    err = _relative_gap(value, other) if other is not None else dist.truncation_bound
    return CapacityResult(AdaptiveScheme.TIFR, value, cutoff=beta0, outage_probability=p_out,
                          backend=backend, error_estimate=err)


def _golden_max(func, lo, hi, tol):
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - inv_phi * (hi - lo)
    d = lo + inv_phi * (hi - lo)
    fc, fd = func(c), func(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - inv_phi * (hi - lo)
            fc = func(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + inv_phi * (hi - lo)
            fd = func(d)
    return (c, fc) if fc >= fd else (d, fd)


def optimize_tifr_cutoff(
    dist: MinSnrDistribution, upper: float = 1.0, tol: float = 1e-6, cross_check: bool = True
) -> CapacityResult:
    """Best TIFR capacity over ``beta0 in (0, upper]`` by golden-section search.

    The default ``upper = 1`` keeps the outage probability at or below that
    of the OPRA cutoff. Endpoints are compared explicitly, so the result is
    never worse than either end of the interval.
    """
    def objective(b):
        return _tifr_series(dist, b)[0]

    candidates = [_golden_max(objective, TIFR_FLOOR, upper, tol)]
    candidates += [(b, objective(b)) for b in (TIFR_FLOOR, upper)]
    beta0, _ = max(candidates, key=lambda item: item[1])
    return capacity_tifr(dist, beta0, cross_check=cross_check)
