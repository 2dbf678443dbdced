"""Literal (expanded) forms of the series, kept for tests only.

These follow the double/triple sums term by term, with B(k) and
B~(k) = B(k)/a**(k+1) evaluated in the log domain, and are deliberately
not shared with the package code paths they check.
"""

import math

import numpy as np
from scipy import special

from dfrelay.special_functions import exponential_integral_e1, meijer_g_2_3_kernel, upper_incomplete_gamma


def _log_b_tilde(hop, k):
    # log B~(k) = log B(k) - (k+1) log a
    return hop.log_bessel_coefficient(k) - (k + 1) * math.log(hop.rate)


def _log_amp(hop):
    return math.log(hop.rate) - hop.k_factor


def expanded_min_pdf(dist, gamma):
    """Triple sum over (n, k-n, m) of the expanded PDF, truncated at the
    distribution's per-hop orders."""
    hx, hy = dist.hop_x, dist.hop_y
    ax, ay = hx.rate, hy.rate
    s = ax + ay
    g = np.atleast_1d(np.asarray(gamma, dtype=float))
    log_g = np.log(g, where=g > 0, out=np.full_like(g, -np.inf))
    total = np.zeros_like(g)
    base = _log_amp(hx) + _log_amp(hy)
    for n in range(dist.order_x + 1):
        for j in range(dist.order_y + 1):
            coeff = base + _log_b_tilde(hx, n) + _log_b_tilde(hy, j)
            for m1 in range(j + 1):
                p = n + m1
                lt = coeff + (n + 1) * math.log(ax) + special.gammaln(j + 1) + m1 * math.log(ay) \
                    - special.gammaln(m1 + 1)
                total += np.exp(lt + (p * log_g if p else 0.0) - s * g)
            for m2 in range(n + 1):
                p = j + m2
                lt = coeff + (j + 1) * math.log(ay) + special.gammaln(n + 1) + m2 * math.log(ax) \
                    - special.gammaln(m2 + 1)
                total += np.exp(lt + (p * log_g if p else 0.0) - s * g)
    return total


def expanded_min_cdf(dist, gamma):
    """``1 - A_x A_y sum B~x(n) B~y(k-n) Gamma(n+1, a_x g) Gamma(k-n+1, a_y g)``."""
    hx, hy = dist.hop_x, dist.hop_y
    g = np.atleast_1d(np.asarray(gamma, dtype=float))
    base = _log_amp(hx) + _log_amp(hy)
    acc = np.zeros_like(g)
    for n in range(dist.order_x + 1):
        gx = special.gammaln(n + 1) + np.log(special.gammaincc(n + 1, hx.rate * g))
        for j in range(dist.order_y + 1):
            gy = special.gammaln(j + 1) + np.log(special.gammaincc(j + 1, hy.rate * g))
            acc += np.exp(base + _log_b_tilde(hx, n) + _log_b_tilde(hy, j) + gx + gy)
    return 1.0 - acc


def _binomial_kernel_sum(alpha, beta):
    """Alternating binomial sum of Meijer kernels, no conditioning guard."""
    return math.fsum(
        math.comb(alpha, q) * (-1) ** (alpha - q) * math.exp(beta) / beta**q
        * meijer_g_2_3_kernel(beta, q)
        for q in range(alpha + 1)
    )


def _expanded_sum(dist, inner):
    """``A_x A_y sum_n sum_j B~x(n) B~y(j) (a_x^{n+1} j! sum_m1 ... + a_y^{j+1} n! sum_m2 ...)``
    where ``inner(p, weight)`` maps the power ``p`` of ``g**p exp(-s g)`` to its
    contribution."""
    hx, hy = dist.hop_x, dist.hop_y
    ax, ay = hx.rate, hy.rate
    base = _log_amp(hx) + _log_amp(hy)
    terms = []
    for n in range(dist.order_x + 1):
        for j in range(dist.order_y + 1):
            coeff = base + _log_b_tilde(hx, n) + _log_b_tilde(hy, j)
            for m1 in range(j + 1):
                w = coeff + (n + 1) * math.log(ax) + special.gammaln(j + 1) \
                    + m1 * math.log(ay) - special.gammaln(m1 + 1)
                terms.append(inner(n + m1, math.exp(w)))
            for m2 in range(n + 1):
                w = coeff + (j + 1) * math.log(ay) + special.gammaln(n + 1) \
                    + m2 * math.log(ax) - special.gammaln(m2 + 1)
                terms.append(inner(j + m2, math.exp(w)))
    return math.fsum(terms)


def expanded_ora_capacity(dist):
    s = dist.hop_x.rate + dist.hop_y.rate
    cache = {}

    def inner(p, w):
        if p not in cache:
            cache[p] = _binomial_kernel_sum(p, s)
        return w * cache[p]

    return 0.5 * math.log2(math.e) * _expanded_sum(dist, inner)


def expanded_opra_capacity(dist, gamma0):
    s = dist.hop_x.rate + dist.hop_y.rate

    def inner(p, w):
        return w * gamma0 / s**p * meijer_g_2_3_kernel(s * gamma0, p)

    return 0.5 * math.log2(math.e) * _expanded_sum(dist, inner)


def expanded_inverse_tail(dist, gamma0):
    s = dist.hop_x.rate + dist.hop_y.rate

    def branch(u, x):
        # Gamma(u, x)/s**u for u > 0, E1(x) for u = 0
        return upper_incomplete_gamma(u, x) / s**u if u > 0 else exponential_integral_e1(x)

    return _expanded_sum(dist, lambda p, w: w * branch(p, s * gamma0))
