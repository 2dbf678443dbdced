"""Special-function kernels used by the closed-form distribution and capacity series.

Everything here works with integer orders only. Large magnitudes are
handled in the log domain; quadrature routines integrate a rescaled
integrand and return ``log`` values so that callers can combine terms
such as ``w**100 * exp(-0.02 * w)`` without overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import integrate, special

from .errors import DomainError

__all__ = [
    "QuadratureSpec",
    "IntegralEvaluation",
    "DEFAULT_CONDITION_LIMIT",
    "upper_incomplete_gamma",
    "regularized_upper_gamma",
    "log_regularized_upper_gamma",
    "exponential_integral_e1",
    "meijer_g_2_3_kernel",
    "log_shifted_kernel",
    "log_weighted_gamma_integral",
    "evaluate_log_weighted_gamma_integral",
    "log_weighted_gamma_integrals",
    "log_ratio_gamma_integral",
    "evaluate_log_ratio_gamma_integral",
    "log_ratio_gamma_integrals",
]

# Sum|terms| / |sum| above which the alternating binomial sum is abandoned.
DEFAULT_CONDITION_LIMIT = 1e8


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for the adaptive quadrature backends."""

    relative_tolerance: float = 1e-10
    absolute_tolerance: float = 1e-14
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.relative_tolerance > 0 and self.absolute_tolerance > 0):
            raise DomainError("quadrature tolerances must be strictly positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be at least 1")


# QUADPACK refuses epsrel below 50 machine epsilons.
KERNEL_QUADRATURE = QuadratureSpec(
    relative_tolerance=2e-14, absolute_tolerance=1e-300, max_subdivisions=500
)


class IntegralEvaluation(NamedTuple):
    """Result of one log-weighted Gamma-type integral.

    ``log_value`` is the natural log of the (positive) integral, ``backend``
    is the route that produced it, ``condition`` is the cancellation ratio of
    the binomial sum (1.0 for quadrature) and ``fallback`` tells whether the
    closed form was rejected in favour of quadrature.
    """

    log_value: float
    backend: str
    condition: float
    fallback: bool = False

    @property
    def value(self) -> float:
        return math.exp(self.log_value) if self.log_value < 709.0 else math.inf


def _check_order(value, name):
    if isinstance(value, bool) or int(value) != value or value < 0:
        raise DomainError(f"{name} must be a nonnegative integer, got {value!r}")
    return int(value)


def _check_positive(value, name):
    value = float(value)
    if not value > 0 or not math.isfinite(value):
        raise DomainError(f"{name} must be positive and finite, got {value!r}")
    return value


# ---------------------------------------------------------------------------
# Gamma family
# ---------------------------------------------------------------------------

def upper_incomplete_gamma(a: float, x: float) -> float:
    """Non-regularized upper incomplete gamma ``Gamma(a, x)``."""
    a = float(a)
    x = float(x)
    if not a > 0:
        raise DomainError(f"order must be positive, got {a}")
    if not x >= 0:
        raise DomainError(f"argument must be nonnegative, got {x}")
    full = special.gamma(a) if a < 171.0 else math.exp(special.gammaln(a))
    if x == 0.0:
        return float(full)
    return float(full * special.gammaincc(a, x))


def log_regularized_upper_gamma(n_plus_1: int, x):
    """``log Q(n+1, x)`` via the finite Poisson sum ``exp(-x) sum x**m / m!``.

    Works for scalar or array ``x``; the sum is done with log-sum-exp so it
    stays finite where ``Q`` itself underflows.
    """
    order = _check_order(n_plus_1, "order")
    if order < 1:
        raise DomainError("integer order must be at least 1")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0) or np.any(np.isnan(x_arr)):
        raise DomainError("argument must be nonnegative")
    m = np.arange(order, dtype=float).reshape((-1,) + (1,) * x_arr.ndim)
    log_terms = special.xlogy(m, x_arr) - x_arr - special.gammaln(m + 1.0)
    # Q <= 1; logsumexp can overshoot 0 by an ulp when Q is close to 1
    out = np.minimum(special.logsumexp(log_terms, axis=0), 0.0)
    return float(out) if np.ndim(out) == 0 else out


def regularized_upper_gamma(n_plus_1: int, x):
    """Regularized upper incomplete gamma ``Q(n+1, x)`` for integer order."""
    out = log_regularized_upper_gamma(n_plus_1, x)
    return np.exp(out) if isinstance(out, np.ndarray) else math.exp(out)


def exponential_integral_e1(x: float) -> float:
    x = float(x)
    if not x > 0:
        raise DomainError(f"E1 requires a strictly positive argument, got {x}")
    return float(special.exp1(x))


# ---------------------------------------------------------------------------
# Quadrature on [lower, inf) with a certified exponential tail
# ---------------------------------------------------------------------------

def _integrate_with_tail(
    func: Callable[[float], float],
    lower: float,
    log_tail: Callable[[float], float],
    width: float,
    spec: QuadratureSpec,
    peak: float | None = None,
):
    """Integrate ``func`` over ``[lower, lower + L]`` and bound the rest.

    ``log_tail(t)`` must return the log of an upper bound on the integral of
    ``func`` over ``[t, inf)``. ``L`` is doubled until that bound drops below
    the absolute tolerance or a small fraction of the relative one.
    Returns ``(value, error_bound)``.
    """
    length = max(width, 1e-300)
    for _ in range(2000):
        upper = lower + length
        tail = math.exp(min(log_tail(upper), 700.0))
        points = [peak] if peak is not None and lower < peak < upper else None
        value, abserr = integrate.quad(
            func,
            lower,
            upper,
            epsabs=spec.absolute_tolerance,
            epsrel=spec.relative_tolerance,
            limit=spec.max_subdivisions,
            points=points,
        )
        if tail <= max(spec.absolute_tolerance, 1e-3 * spec.relative_tolerance * abs(value)):
            return value, abserr + tail
        length *= 2.0
    raise ArithmeticError("tail bound failed to converge")  # pragma: no cover


def log_shifted_kernel(mu: float, q: int, spec: QuadratureSpec = KERNEL_QUADRATURE) -> float:
    """``log`` of ``int_0^inf (1+u)**q exp(-mu*u) ln(1+u) du``.

    This is ``exp(mu) * mu**(-q) * G(mu)`` for the Meijer kernel below, i.e.
    the kernel with its dominant scale factored out.
    """
    mu = _check_positive(mu, "mu")
    q = _check_order(q, "q")
    u_peak = max(q / mu - 1.0, 0.0)
    log_scale = q * math.log1p(u_peak) - mu * u_peak

    def integrand(u):
        lg = math.log1p(u)
        return math.exp(q * lg - mu * u - log_scale) * lg

    def log_tail(u):
        # ln(1+u) <= 1+u, then a closed-form upper incomplete gamma
        return (
            mu
            - (q + 2) * math.log(mu)
            + special.gammaln(q + 2)
            + log_regularized_upper_gamma(q + 2, mu * (1.0 + u))
            - log_scale
        )

    width = u_peak + (10.0 * math.sqrt(q + 1.0) + 10.0) / mu
    value, _ = _integrate_with_tail(integrand, 0.0, log_tail, width, spec, peak=u_peak or None)
    return log_scale + math.log(value)


def meijer_g_2_3_kernel(mu: float, q: int, spec: QuadratureSpec = KERNEL_QUADRATURE) -> float:
    """``G^{3,0}_{2,3}(mu | 0, 0; -1, -1, q)`` for integer ``q >= 0``.

    Evaluated as ``(1/mu) int_mu^inf t**q exp(-t) ln(t/mu) dt`` after the
    substitution ``t = mu*(1+u)``.
    """
    mu = _check_positive(mu, "mu")
    q = _check_order(q, "q")
    log_g = q * math.log(mu) - mu + log_shifted_kernel(mu, q, spec)
    return math.exp(log_g) if log_g < 709.0 else math.inf


# ---------------------------------------------------------------------------
# int_0^inf w^a exp(-b w) ln(1+w) dw
# ---------------------------------------------------------------------------

def _log_weighted_quadrature(alpha: int, beta: float, spec: QuadratureSpec) -> float:
    w_peak = alpha / beta
    log_scale = (alpha * math.log(w_peak) - alpha) if alpha > 0 else 0.0

    def integrand(w):
        if w == 0.0:
            return 0.0
        return math.exp(alpha * math.log(w) - beta * w - log_scale) * math.log1p(w)

    def log_tail(w):
        return (
            special.gammaln(alpha + 2)
            - (alpha + 2) * math.log(beta)
            + log_regularized_upper_gamma(alpha + 2, beta * w)
            - log_scale
        )

    width = w_peak + (10.0 * math.sqrt(alpha + 1.0) + 10.0) / beta
    value, _ = _integrate_with_tail(integrand, 0.0, log_tail, width, spec, peak=w_peak or None)
    return log_scale + math.log(value)


def _alternating_binomial_sum(alpha: int, log_kernels: Sequence[float]):
    """Return ``(log|sum|, condition)`` of sum_q C(a,q) (-1)^(a-q) exp(log_kernels[q])."""
    q = np.arange(alpha + 1)
    log_terms = (
        special.gammaln(alpha + 1)
        - special.gammaln(q + 1)
        - special.gammaln(alpha - q + 1)
        + np.asarray(log_kernels[: alpha + 1])
    )
    top = float(log_terms.max())
    magnitudes = np.exp(log_terms - top)
    signed = np.where((alpha - q) % 2 == 0, magnitudes, -magnitudes)
    total = math.fsum(signed)
    if total <= 0.0:
        return math.nan, math.inf
    return top + math.log(total), math.fsum(magnitudes) / total


def log_weighted_gamma_integrals(
    alpha_max: int,
    beta: float,
    backend: str = "closed_form",
    spec: QuadratureSpec | None = None,
    condition_limit: float = DEFAULT_CONDITION_LIMIT,
) -> list[IntegralEvaluation]:
    """Evaluate ``int_0^inf w^a exp(-beta w) ln(1+w) dw`` for ``a = 0..alpha_max``.

    The closed form is the binomial sum of Meijer kernels; all orders share
    one set of kernel evaluations. Orders whose sum is worse conditioned
    than ``condition_limit`` are recomputed by direct quadrature and flagged.
    """
    alpha_max = _check_order(alpha_max, "alpha")
    beta = _check_positive(beta, "beta")
    spec = spec or QuadratureSpec()
    if backend == "quadrature":
        return [
            IntegralEvaluation(_log_weighted_quadrature(a, beta, spec), "quadrature", 1.0)
            for a in range(alpha_max + 1)
        ]
    if backend != "closed_form":
        raise ValueError(f"unknown backend {backend!r}")

    log_kernels = [log_shifted_kernel(beta, q) for q in range(alpha_max + 1)]
    results = []
    for a in range(alpha_max + 1):
        log_value, condition = _alternating_binomial_sum(a, log_kernels)
        if condition > condition_limit:
            log_value = _log_weighted_quadrature(a, beta, spec)
            results.append(IntegralEvaluation(log_value, "quadrature", condition, True))
        else:
            results.append(IntegralEvaluation(log_value, "closed_form", condition))
    return results


def evaluate_log_weighted_gamma_integral(
    alpha: int,
    beta: float,
    backend: str = "closed_form",
    spec: QuadratureSpec | None = None,
    condition_limit: float = DEFAULT_CONDITION_LIMIT,
) -> IntegralEvaluation:
    alpha = _check_order(alpha, "alpha")
    beta = _check_positive(beta, "beta")
    spec = spec or QuadratureSpec()
    if backend == "quadrature":
        return IntegralEvaluation(_log_weighted_quadrature(alpha, beta, spec), "quadrature", 1.0)
    return log_weighted_gamma_integrals(alpha, beta, backend, spec, condition_limit)[-1]


def log_weighted_gamma_integral(alpha: int, beta: float, backend: str = "closed_form", **kwargs) -> float:
    """``int_0^inf w**alpha exp(-beta w) ln(1+w) dw``.

    >>> round(log_weighted_gamma_integral(0, 1.0), 8)
    0.59634736
    """
    return evaluate_log_weighted_gamma_integral(alpha, beta, backend, **kwargs).value


# ---------------------------------------------------------------------------
# int_eta^inf w^a exp(-b w) ln(w/eta) dw
# ---------------------------------------------------------------------------

def _log_ratio_quadrature(alpha: int, beta: float, eta: float, spec: QuadratureSpec) -> float:
    w_peak = max(alpha / beta, eta)
    log_scale = alpha * math.log(w_peak) - beta * w_peak

    def integrand(w):
        return math.exp(alpha * math.log(w) - beta * w - log_scale) * math.log(w / eta)

    def log_tail(w):
        return (
            special.gammaln(alpha + 2)
            - (alpha + 2) * math.log(beta)
            - math.log(eta)
            + log_regularized_upper_gamma(alpha + 2, beta * w)
            - log_scale
        )

    width = (w_peak - eta) + (10.0 * math.sqrt(alpha + 1.0) + 10.0) / beta
    peak = w_peak if w_peak > eta else None
    value, _ = _integrate_with_tail(integrand, eta, log_tail, width, spec, peak=peak)
    return log_scale + math.log(value)


def log_ratio_gamma_integrals(
    alpha_max: int,
    beta: float,
    eta: float,
    backend: str = "closed_form",
    spec: QuadratureSpec | None = None,
) -> list[IntegralEvaluation]:
    """Evaluate ``int_eta^inf w^a exp(-beta w) ln(w/eta) dw`` for ``a = 0..alpha_max``.

    Closed form: ``eta / beta**a * G(beta*eta | a)``, a sum of positive
    quantities, so no conditioning check is needed.
    """
    alpha_max = _check_order(alpha_max, "alpha")
    beta = _check_positive(beta, "beta")
    eta = _check_positive(eta, "eta")
    spec = spec or QuadratureSpec()
    if backend == "quadrature":
        return [
            IntegralEvaluation(_log_ratio_quadrature(a, beta, eta, spec), "quadrature", 1.0)
            for a in range(alpha_max + 1)
        ]
    if backend != "closed_form":
        raise ValueError(f"unknown backend {backend!r}")
    mu = beta * eta
    return [
        IntegralEvaluation(
            (a + 1) * math.log(eta) - mu + log_shifted_kernel(mu, a), "closed_form", 1.0
        )
        for a in range(alpha_max + 1)
    ]


def evaluate_log_ratio_gamma_integral(
    alpha: int,
    beta: float,
    eta: float,
    backend: str = "closed_form",
    spec: QuadratureSpec | None = None,
) -> IntegralEvaluation:
    alpha = _check_order(alpha, "alpha")
    beta = _check_positive(beta, "beta")
    eta = _check_positive(eta, "eta")
    spec = spec or QuadratureSpec()
    if backend == "quadrature":
        return IntegralEvaluation(_log_ratio_quadrature(alpha, beta, eta, spec), "quadrature", 1.0)
    if backend != "closed_form":
        raise ValueError(f"unknown backend {backend!r}")
    mu = beta * eta
    return IntegralEvaluation(
        (alpha + 1) * math.log(eta) - mu + log_shifted_kernel(mu, alpha), "closed_form", 1.0
    )


def log_ratio_gamma_integral(
    alpha: int, beta: float, eta: float, backend: str = "closed_form", **kwargs
) -> float:
    """``int_eta^inf w**alpha exp(-beta w) ln(w/eta) dw``."""
    return evaluate_log_ratio_gamma_integral(alpha, beta, eta, backend, **kwargs).value
