"""Euler-Maclaurin summation over the half-lattice and shifted-Gaussian sums.

The brute-force lattice sums here are the ground truth; the Euler-Maclaurin
side (``em_sum`` and the ``*_leading`` predictors) is what gets checked.

Coefficient convention: for ``f`` decaying at infinity,

    sum_{m >= 0} f(m) = int_0^inf f + sum_{j < r} a_j f^(j)(0) + R_r,

with ``a_j = -B_{j+1} / (j+1)!`` and ``B_1 = -1/2``, so ``a_0 = 1/2``,
``a_1 = -1/12``, ``a_2 = 0``, ``a_3 = 1/720``, ...
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate
from scipy.special import zeta

from .kernels import gaussian_tail_integral

MAX_ORDER = 8
TAIL_SIGMAS = 12.0


@dataclass(frozen=True)
class EmCoefficients:
    order: int
    a: tuple[float, ...]


def em_coefficients(order: int = MAX_ORDER) -> EmCoefficients:
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in [0, {MAX_ORDER}], got {order}")
    return EmCoefficients(order, tuple(float(exact_a(j)) for j in range(order)))


def remainder_constant(r: int) -> float:
    """Bound on ``sup |B_r(frac t)| / r!`` for the periodic Bernoulli function.

    The remainder satisfies ``|R_r| <= remainder_constant(r) * int_0^inf |f^(r)|``.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    if r == 1:
        return 0.5
    return 2.0 * float(zeta(r)) / (2.0 * math.pi) ** r


def em_sum(f, r: int, *, upper: float = np.inf) -> float:
    """Euler-Maclaurin approximation of ``sum_{m >= 0} f(m)`` without remainder.

    Parameters
    ----------
    f : callable
        ``f(t, j)`` returns the ``j``-th derivative of the summand at ``t``.
    r : int
        Number of boundary corrections, at most ``MAX_ORDER``.
    """
    coeffs = em_coefficients(r)
    integral, _ = integrate.quad(lambda t: f(t, 0), 0.0, upper, limit=400)
    return float(integral + sum(a * f(0.0, j) for j, a in enumerate(coeffs.a)))


def em_remainder_bound(f, r: int, *, upper: float = np.inf) -> float:
    """Upper bound on the Euler-Maclaurin remainder after ``r`` corrections."""
    mass, _ = integrate.quad(lambda t: abs(f(t, r)), 0.0, upper, limit=400)
    return remainder_constant(r) * mass


# ---------------------------------------------------------------------------
# brute-force lattice Gaussian sums


def _lattice(v: float, a: float, p: float, extra: int = 0, sigmas: float = TAIL_SIGMAS):
    """Indices ``m >= 0`` within ``sigmas`` standard deviations of the Gaussian center.

    The summand ``exp(-2 pi (v - m / (a sqrt p))^2)`` is a Gaussian in ``m``
    with standard deviation ``a sqrt(p) / (2 sqrt(pi))``; outside the window
    each omitted term is below ``exp(-sigmas^2 / 2)``.
    """
    scale = a * math.sqrt(p)
    sigma = scale / (2.0 * math.sqrt(math.pi))
    center = v * scale
    lo = max(0, math.floor(center - sigmas * sigma) - abs(extra))
    hi = max(0, math.ceil(center + sigmas * sigma) + abs(extra))
    return np.arange(lo, hi + 1, dtype=float), scale


def gaussian_halfline_sum(v: float, a: float, p: float, *, sigmas: float = TAIL_SIGMAS) -> float:
    """``sum_{m >= 0} exp(-2 pi (v - m / (a sqrt p))^2)`` by direct summation."""
    if a <= 0:
        raise ValueError("a must be positive")
    m, scale = _lattice(v, a, p, sigmas=sigmas)
    return float(math.fsum(np.exp(-2.0 * math.pi * (v - m / scale) ** 2)))


def gaussian_halfline_leading(v: float, a: float, p: float) -> float:
    """Leading Euler-Maclaurin term ``a sqrt(p) int_{-inf}^v exp(-2 pi t^2) dt``."""
    return float(a * math.sqrt(p) * gaussian_tail_integral(v))


def gaussian_moment_sum(v: float, a: float, p: float, k: int, *, sigmas: float = TAIL_SIGMAS) -> float:
    """``sum_{m >= 0} (m / sqrt p)^k exp(-2 pi (v - m / (a sqrt p))^2)`` directly."""
    if a <= 0:
        raise ValueError("a must be positive")
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0:
        return gaussian_halfline_sum(v, a, p, sigmas=sigmas)
    # the polynomial weight shifts the effective window by a few sigma at most
    m, scale = _lattice(v, a, p, sigmas=sigmas + math.sqrt(2 * k))
    terms = (m / math.sqrt(p)) ** k * np.exp(-2.0 * math.pi * (v - m / scale) ** 2)
    return float(math.fsum(terms))


def gaussian_moment_leading(v: float, a: float, p: float, k: int) -> float:
    """``a^(k+1) sqrt(p) int_{-inf}^v (v - t)^k exp(-2 pi t^2) dt``."""
    val, _ = integrate.quad(lambda t: (v - t) ** k * math.exp(-2.0 * math.pi * t * t), -np.inf, v)
    return float(a ** (k + 1) * math.sqrt(p) * val)


def paired_gaussian_difference(v: float, a: float, p: float, k: int, *, sigmas: float = TAIL_SIGMAS) -> float:
    """Lattice sum of shifted Gaussian products minus the unshifted one.

    ``sum_m exp(-2 pi [(v - m/s)^2 + (v - (m-k)/s)^2]) - sum_m exp(-4 pi (v - m/s)^2)``
    with ``s = a sqrt(p)`` and ``m >= 0``.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    if k == 0:
        return 0.0
    m, scale = _lattice(v, a, p, extra=k, sigmas=sigmas)
    shifted = np.exp(-2.0 * math.pi * ((v - m / scale) ** 2 + (v - (m - k) / scale) ** 2))
    plain = np.exp(-4.0 * math.pi * (v - m / scale) ** 2)
    return float(math.fsum(shifted) - math.fsum(plain))


def paired_gaussian_leading(v: float, k: int) -> float:
    return 0.5 * k * math.exp(-4.0 * math.pi * v * v)


def exact_a(j: int) -> Fraction:
    """Exact rational ``a_j`` (for display and tests)."""
    b = [Fraction(1)]
    # B_n from the standard recurrence with B_1 = -1/2
    for n in range(1, j + 2):
        b.append(-sum(Fraction(math.comb(n + 1, i)) * b[i] for i in range(n)) / (n + 1))
    return -b[j + 1] / math.factorial(j + 1)
