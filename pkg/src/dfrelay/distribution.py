"""Distribution of the weaker-hop SNR of a dual-hop link over Rician fading.

Each hop SNR is noncentral chi-square with two degrees of freedom, which is
a Poisson(K) mixture of Gamma(n+1, a) laws with ``a = (1+K)/mean_snr``.
All series below are written in that Poisson-weighted form: every term is
bounded by a Poisson probability, so the tail mass beyond the truncation
order is a rigorous error bound and no ``k!**2`` ever has to be formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .errors import DomainError, SeriesTruncationError

__all__ = [
    "RicianHop",
    "SeriesControl",
    "MinSnrDistribution",
    "GammaMixture",
    "truncation_order",
    "single_hop_pdf",
    "single_hop_survival",
    "min_cdf",
    "min_pdf",
    "min_survival",
    "min_expected_inverse_tail",
    "reference_single_hop_pdf",
    "reference_single_hop_survival",
    "reference_min_pdf",
    "reference_min_survival",
]


def db_to_linear(db: float) -> float:
    return 10.0 ** (float(db) / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * math.log10(value)


@dataclass(frozen=True)
class RicianHop:
    """Fading parameters of one hop: Rician K factor and mean linear SNR."""

    k_factor: float
    mean_snr: float

    def __post_init__(self):
        if not (math.isfinite(self.k_factor) and self.k_factor >= 0):
            raise DomainError(f"k_factor must be >= 0, got {self.k_factor}")
        if not (math.isfinite(self.mean_snr) and self.mean_snr > 0):
            raise DomainError(f"mean_snr must be > 0, got {self.mean_snr}")

    @classmethod
    def from_db(cls, k_factor: float, mean_snr_db: float) -> "RicianHop":
        return cls(k_factor, db_to_linear(mean_snr_db))

    @property
    def rate(self) -> float:
        """``a = (1 + K) / mean_snr``."""
        return (1.0 + self.k_factor) / self.mean_snr

    @property
    def amplitude(self) -> float:
        """``A = a * exp(-K)``, the density at zero."""
        return self.rate * math.exp(-self.k_factor)

    def log_bessel_coefficient(self, k):
        """``log B(k)`` with ``B(k) = K**k (1+K)**k / (mean_snr**k k!**2)``."""
        k = np.asarray(k, dtype=float)
        return special.xlogy(k, self.k_factor * self.rate) - 2.0 * special.gammaln(k + 1.0)

    def poisson_log_weights(self, order: int) -> np.ndarray:
        """``log(exp(-K) K**n / n!)`` for ``n = 0..order``."""
        n = np.arange(order + 1, dtype=float)
        return special.xlogy(n, self.k_factor) - self.k_factor - special.gammaln(n + 1.0)


@dataclass(frozen=True)
class SeriesControl:
    tolerance: float = 1e-12
    max_terms: int = 512

    def __post_init__(self):
        if not self.tolerance > 0:
            raise DomainError("series tolerance must be > 0")
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise DomainError("max_terms must be a positive integer")


def truncation_order(hop: RicianHop, control: SeriesControl) -> tuple[int, float, bool]:
    """Smallest ``N`` with Poisson(K) mass above ``N`` below the tolerance.

    Returns ``(N, tail_mass, converged)``; ``N`` never exceeds
    ``max_terms - 1``. The tail mass bounds the truncation error of every
    survival-type series built on this hop.
    """
    cap = int(control.max_terms) - 1
    if hop.k_factor == 0.0:
        return 0, 0.0, True
    # P(Poisson > N) = P(N+1, K), the regularized lower gamma
    start = max(0, int(hop.k_factor))
    for order in range(start, cap + 1):
        tail = float(special.gammainc(order + 1, hop.k_factor))
        if tail < control.tolerance:
            return order, tail, True
    return cap, float(special.gammainc(cap + 1, hop.k_factor)), False


def _gamma_arg(gamma):
    g = np.asarray(gamma, dtype=float)
    if np.any(np.isnan(g)) or np.any(g < 0):
        raise DomainError("SNR argument must be nonnegative")
    return g


def _unwrap(value):
    return float(value) if np.ndim(value) == 0 else value


def _hop_pdf_terms(hop: RicianHop, order: int, g: np.ndarray) -> np.ndarray:
    """Sum over n <= order of Poisson(K)_n * Gamma(n+1, a) density at g."""
    n = np.arange(order + 1, dtype=float).reshape((-1,) + (1,) * g.ndim)
    ax = hop.rate * g
    log_terms = (
        hop.poisson_log_weights(order).reshape(n.shape)
        + math.log(hop.rate)
        + special.xlogy(n, ax)
        - ax
        - special.gammaln(n + 1.0)
    )
    return np.exp(log_terms).sum(axis=0)


def _hop_survival_terms(hop: RicianHop, order: int, g: np.ndarray) -> np.ndarray:
    """Sum over n <= order of Poisson(K)_n * Q(n+1, a g)."""
    n = np.arange(order + 1, dtype=float).reshape((-1,) + (1,) * g.ndim)
    ax = hop.rate * g
    # Q(n+1, x) is the cumulative sum over m <= n of the Poisson(x) pmf
    log_pmf = special.xlogy(n, ax) - ax - special.gammaln(n + 1.0)
    q_table = np.minimum(np.cumsum(np.exp(log_pmf), axis=0), 1.0)
    weights = np.exp(hop.poisson_log_weights(order)).reshape(n.shape)
    # S(0) = 1 exactly; the truncated sum would give 1 minus the dropped mass
    return np.where(g == 0.0, 1.0, (weights * q_table).sum(axis=0))


def single_hop_pdf(hop: RicianHop, gamma, control: SeriesControl | None = None):
    """Density ``A exp(-a g) I0(2 sqrt(K a g))`` from its power series."""
    g = _gamma_arg(gamma)
    order, _, _ = truncation_order(hop, control or SeriesControl())
    return _unwrap(_hop_pdf_terms(hop, order, g))


def single_hop_survival(hop: RicianHop, gamma, control: SeriesControl | None = None):
    """``P(gamma_hop > gamma)`` as a Poisson-weighted sum of ``Q(n+1, a gamma)``."""
    g = _gamma_arg(gamma)
    order, _, _ = truncation_order(hop, control or SeriesControl())
    return _unwrap(_hop_survival_terms(hop, order, g))


class GammaMixture:
    """``f_min`` written as ``sum_p w_p * Gamma(p+1, s)`` density, ``s = a_x + a_y``.

    Expanding ``f_x S_y + f_y S_x`` with the finite-sum form of ``Q(n+1, .)``
    produces only terms ``g**p exp(-s g)``; collecting them by ``p`` gives
    nonnegative weights that sum to one minus the truncated tail mass.
    """

    def __init__(self, hop_x: RicianHop, hop_y: RicianHop, order_x: int, order_y: int):
        self.rate = hop_x.rate + hop_y.rate
        part_x = self._half(hop_x, hop_y, order_x, order_y)
        part_y = self._half(hop_y, hop_x, order_y, order_x)
        self.weights = part_x + part_y
        self.max_order = len(self.weights) - 1

    def _half(self, dens: RicianHop, surv: RicianHop, n_dens: int, n_surv: int) -> np.ndarray:
        s = self.rate
        n = np.arange(n_dens + 1, dtype=float)
        m = np.arange(n_surv + 1, dtype=float)
        log_pd = dens.poisson_log_weights(n_dens)
        # T(m) = sum_{j >= m} Poisson(K_surv)_j, truncated at n_surv
        tail = np.cumsum(np.exp(surv.poisson_log_weights(n_surv))[::-1])[::-1]
        with np.errstate(divide="ignore"):
            log_tail = np.log(tail)
        log_x = log_pd + (n + 1.0) * math.log(dens.rate / s) - special.gammaln(n + 1.0)
        log_y = log_tail + m * math.log(surv.rate / s) - special.gammaln(m + 1.0)
        p = n[:, None] + m[None, :]
        log_terms = log_x[:, None] + log_y[None, :] + special.gammaln(p + 1.0)
        out = np.zeros(n_dens + n_surv + 1)
        np.add.at(out, p.astype(int).ravel(), np.exp(log_terms).ravel())
        return out

    def log_normalizers(self) -> np.ndarray:
        """``log(s**(p+1) / p!)``: converts a raw moment integral to a mixture term."""
        p = np.arange(self.max_order + 1, dtype=float)
        return (p + 1.0) * math.log(self.rate) - special.gammaln(p + 1.0)


@dataclass(frozen=True)
class MinSnrDistribution:
    """Law of ``min(gamma_x, gamma_y)`` for independent Rician hops.

    Immutable; the truncation orders are fixed at construction from the
    series control and both hops' K factors.
    """

    hop_x: RicianHop
    hop_y: RicianHop
    control: SeriesControl = field(default_factory=SeriesControl)

    def __post_init__(self):
        ox, tx, cx = truncation_order(self.hop_x, self.control)
        oy, ty, cy = truncation_order(self.hop_y, self.control)
        object.__setattr__(self, "order_x", ox)
        object.__setattr__(self, "order_y", oy)
        object.__setattr__(self, "truncation_bound", tx + ty)
        object.__setattr__(self, "converged", cx and cy)
        object.__setattr__(self, "gamma_mixture", GammaMixture(self.hop_x, self.hop_y, ox, oy))

    @classmethod
    def from_params(cls, kx, snr_x, ky, snr_y, tolerance=1e-12, max_terms=512):
        return cls(RicianHop(kx, snr_x), RicianHop(ky, snr_y), SeriesControl(tolerance, max_terms))

    def survival(self, gamma):
        g = _gamma_arg(gamma)
        sx = _hop_survival_terms(self.hop_x, self.order_x, g)
        sy = _hop_survival_terms(self.hop_y, self.order_y, g)
        return _unwrap(sx * sy)

    def cdf(self, gamma):
        g = _gamma_arg(gamma)
        sx = _hop_survival_terms(self.hop_x, self.order_x, g)
        sy = _hop_survival_terms(self.hop_y, self.order_y, g)
        return _unwrap(1.0 - sx * sy)

    def pdf(self, gamma):
        g = _gamma_arg(gamma)
        fx = _hop_pdf_terms(self.hop_x, self.order_x, g)
        fy = _hop_pdf_terms(self.hop_y, self.order_y, g)
        sx = _hop_survival_terms(self.hop_x, self.order_x, g)
        sy = _hop_survival_terms(self.hop_y, self.order_y, g)
        return _unwrap(fx * sy + fy * sx)

    def mixture(self) -> GammaMixture:
        return self.gamma_mixture

    def expected_inverse_tail(self, gamma0: float) -> float:
        """``E[1/gamma ; gamma >= gamma0]``.

        Term ``p`` of the mixture contributes ``s * G(p, s*gamma0) / p!`` where
        ``G(u, x)`` is the upper incomplete gamma for ``u > 0`` and the
        exponential integral ``E1(x)`` for ``u = 0``.
        """
        gamma0 = float(gamma0)
        if not gamma0 > 0:
            raise DomainError("cutoff must be strictly positive")
        if not self.converged:
            raise SeriesTruncationError(
                f"max_terms={self.control.max_terms} reached before the Poisson tail "
                f"fell below {self.control.tolerance:g}"
            )
        mix = self.mixture()
        s = mix.rate
        x = s * gamma0
        p = np.arange(1, mix.max_order + 1, dtype=float)
        terms = mix.weights[1:] * s * special.gammaincc(p, x) / p
        return float(mix.weights[0] * s * special.exp1(x) + math.fsum(terms))


def min_cdf(dist: MinSnrDistribution, gamma):
    return dist.cdf(gamma)


def min_survival(dist: MinSnrDistribution, gamma):
    return dist.survival(gamma)


def min_pdf(dist: MinSnrDistribution, gamma):
    return dist.pdf(gamma)


def min_expected_inverse_tail(dist: MinSnrDistribution, gamma0: float) -> float:
    return dist.expected_inverse_tail(gamma0)


# ---------------------------------------------------------------------------
# Bessel / Marcum closed forms, independent of the series truncation.
# Used as the integrand of every quadrature cross-check.
# ---------------------------------------------------------------------------

def reference_single_hop_pdf(hop: RicianHop, gamma):
    g = _gamma_arg(gamma)
    a, k = hop.rate, hop.k_factor
    arg = 2.0 * np.sqrt(k * a * g)
    # i0e(x) = exp(-x) I0(x)
    out = a * np.exp(arg - k - a * g) * special.i0e(arg)
    return _unwrap(out)


def reference_single_hop_survival(hop: RicianHop, gamma):
    g = _gamma_arg(gamma)
    if hop.k_factor == 0.0:
        return _unwrap(np.exp(-hop.rate * g))
    return _unwrap(stats.ncx2.sf(2.0 * hop.rate * g, 2, 2.0 * hop.k_factor))


def reference_min_survival(dist: MinSnrDistribution, gamma):
    return reference_single_hop_survival(dist.hop_x, gamma) * reference_single_hop_survival(
        dist.hop_y, gamma
    )


def reference_min_pdf(dist: MinSnrDistribution, gamma):
    hx, hy = dist.hop_x, dist.hop_y
    return reference_single_hop_pdf(hx, gamma) * reference_single_hop_survival(
        hy, gamma
    ) + reference_single_hop_pdf(hy, gamma) * reference_single_hop_survival(hx, gamma)
