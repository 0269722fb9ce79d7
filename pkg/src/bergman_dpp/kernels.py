"""Full, equivariant and partial Bergman kernels of the model geometries.

Kernel values are returned in the unit-frame trivialization, i.e. with both
fiber weights folded in, so ``|K(x, y)|`` is the pointwise norm and
``K(x, x)`` is the density of the kernel's trace against ``dv_X``.

The partial kernel is the truncated monomial series
``sum_{k <= shift} c_k^2 (z conj(w))^k`` times the fiber weights.  Its terms
are log-concave in ``k``, so the sum is started at the largest term and
extended in both directions by the coefficient ratios; no intermediate
quantity can overflow even for ``p`` in the thousands.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import bdtr, erf, gammaincc

from .geometry import (
    ModelGeometry,
    log_c2,
    log_fiber_weight,
    rotate,
)
from .quadrature import circle_integrate

_NEGLIGIBLE = 1e-18


def _pair(z, w):
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return np.broadcast_arrays(z, w)


def _log_weights(model, p, z, w):
    return log_fiber_weight(model, p, z) + log_fiber_weight(model, p, w)


def full_kernel(model: ModelGeometry, p: int, z, w):
    """Bergman kernel of all ``L^2`` holomorphic sections of ``L^p``."""
    z, w = _pair(z, w)
    zeta = z * np.conj(w)
    lw = _log_weights(model, p, z, w)
    if model.is_plane:
        return p * np.exp(p * np.pi * zeta + lw)
    one = 1.0 + zeta
    with np.errstate(divide="ignore"):
        logmag = p * np.log(np.abs(one)) + lw
    return (p + 1) * np.exp(logmag) * np.exp(1j * p * np.angle(one))


def _single_term(model, p, k, z, w):
    z, w = _pair(z, w)
    zeta = z * np.conj(w)
    lw = _log_weights(model, p, z, w)
    lc = log_c2(model, p, k)
    if k == 0:
        return np.exp(lc + lw).astype(complex)
    with np.errstate(divide="ignore"):
        logmag = lc + k * np.log(np.abs(zeta)) + lw
    return np.exp(logmag) * np.exp(1j * k * np.angle(zeta))


def equivariant_kernel(model: ModelGeometry, p: int, m: int, z, w):
    """Kernel of the projection onto the weight-``m`` sections.

    Each weight space is spanned by the single monomial of degree
    ``k = m + shift``; the kernel vanishes when no such degree exists.
    """
    k = m + model.shift(p)
    kmax = model.max_degree(p)
    if k < 0 or (kmax is not None and k > kmax):
        z, w = _pair(z, w)
        return np.zeros(z.shape, dtype=complex)
    return _single_term(model, p, k, z, w)


def _series_range(model, p, zeta, lw, klo: int, khi: int):
    """``sum_{k=klo}^{khi} c_k^2 zeta^k`` times ``exp(lw)``, summed outward from the largest term."""
    L = log_c2(model, p, np.arange(klo, khi + 1))
    d = np.diff(L)
    ratio = np.exp(d)
    n = khi - klo
    with np.errstate(divide="ignore"):
        ell = np.log(np.abs(zeta))
    # coefficients are log-concave: the largest term sits where d_k + ell changes sign
    j0 = np.searchsorted(-d, ell, side="left")
    phase = np.angle(zeta)
    kabs = klo + j0
    safe_ell = np.where(np.isfinite(ell), ell, 0.0)
    logstart = L[j0] + lw + np.where(kabs > 0, kabs * safe_ell, 0.0)
    start = np.exp(logstart) * np.exp(1j * kabs * phase)
    if klo > 0:
        start = np.where(np.abs(zeta) > 0, start, 0.0)
    scale = np.abs(start)
    total = start.copy()

    t = start.copy()
    for step in range(1, n + 1):
        j = j0 + step
        live = j <= n
        if not np.any(live):
            break
        t = np.where(live, t * zeta * ratio[np.minimum(j, n) - 1], 0.0)
        total += t
        if not np.any(np.abs(t) > _NEGLIGIBLE * scale):
            break

    t = start.copy()
    for step in range(1, n + 1):
        j = j0 - step
        live = j >= 0
        if not np.any(live):
            break
        jj = np.maximum(j, 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(live, t / (zeta * ratio[jj]), 0.0)
        total += t
        if not np.any(np.abs(t) > _NEGLIGIBLE * scale):
            break
    return total


def _peak_degree(model, p, zeta):
    """Index of the largest term of the untruncated series."""
    r = np.abs(zeta)
    if model.is_plane:
        return p * np.pi * r
    # ratio (p - k) / (k + 1) * r crosses one at k = (p r - 1) / (1 + r)
    return (p * r - 1.0) / (1.0 + r)


def truncated_series(model: ModelGeometry, p: int, z, w, kmax: int):
    """``sum_{k=0}^{kmax} c_k^2 (z conj(w))^k`` times the fiber weights.

    Where the untruncated series peaks below ``kmax`` the retained sum nearly
    equals the full kernel, and summing it directly would cancel terms of
    size ``p`` down to a much smaller result.  There the closed-form full
    kernel minus the (non-cancelling) upper tail is used instead.
    """
    z, w = _pair(z, w)
    shape = z.shape
    z = z.ravel()
    w = w.ravel()
    zeta = z * np.conj(w)
    lw = _log_weights(model, p, z, w)
    top = model.max_degree(p)
    if top is not None and kmax >= top:
        return full_kernel(model, p, z, w).reshape(shape)
    out = np.empty(z.shape, dtype=complex)
    comp = _peak_degree(model, p, zeta) < kmax - 1
    direct = ~comp
    if np.any(direct):
        out[direct] = _series_range(model, p, zeta[direct], lw[direct], 0, kmax)
    if np.any(comp):
        zc = zeta[comp]
        if top is None:
            lam = p * np.pi * float(np.max(np.abs(zc)))
            top = max(kmax + 40, int(math.ceil(lam + 12.0 * math.sqrt(lam + 1.0) + 40.0)))
        tail = _series_range(model, p, zc, lw[comp], kmax + 1, top)
        out[comp] = full_kernel(model, p, z[comp], w[comp]) - tail
    return out.reshape(shape)


def partial_kernel(model: ModelGeometry, p: int, z, w):
    """Kernel of the projection onto the nonpositive-weight sections."""
    return truncated_series(model, p, z, w, model.shift(p))


def partial_kernel_diag(model: ModelGeometry, p: int, z):
    """Diagonal of the partial kernel via its special-function closed form.

    Plane: ``p * Q(p + 1, p pi |z|^2)`` (a Poisson CDF); projective line:
    ``(p + 1) * BinomialCDF(s; p, |z|^2 / (1 + |z|^2))``.
    """
    r2 = np.abs(np.asarray(z)) ** 2
    s = model.shift(p)
    if model.is_plane:
        return p * gammaincc(s + 1, p * np.pi * r2)
    return (p + 1) * bdtr(s, p, r2 / (1.0 + r2))


def full_kernel_diag(model: ModelGeometry, p: int, z):
    r2 = np.abs(np.asarray(z, dtype=complex)) ** 2
    return np.full(r2.shape, float(p if model.is_plane else p + 1))


def plane_degree_cutoff(p: int, z, w) -> int:
    """Degree beyond which the Plane weight sum has a relative tail < 1e-14."""
    lam = p * np.pi * float(np.max(np.abs(z) * np.abs(w)))
    return int(math.ceil(lam + 12.0 * math.sqrt(lam + 1.0) + 40.0))


def averaged_equivariant_oracle(model: ModelGeometry, p: int, m: int, z, w, n_nodes: int) -> complex:
    """Weight-``m`` kernel by numerically averaging the full kernel over the circle.

    The lift of the action to ``L^p`` acts on the unit frame by
    ``exp(-2 pi i t shift)``.
    """
    if n_nodes < 4 * (p + abs(m)):
        raise ValueError(f"need at least 4(p+|m|) = {4 * (p + abs(m))} nodes, got {n_nodes}")
    shift = model.shift(p)

    def integrand(t):
        lift = np.exp(-2j * np.pi * t * (m + shift))
        return lift * full_kernel(model, p, rotate(model, z, t), w)

    return circle_integrate(integrand, n_nodes)


# ---------------------------------------------------------------------------
# local models near the boundary orbit


def local_model_full(Z, Zp, omega=None):
    """Flat Bergman kernel model ``exp(-pi/2 |Z - Z'|^2 - i pi omega(Z, Z'))``.

    ``Z`` and ``Zp`` are real vectors (last axis) of equal even dimension;
    ``omega`` defaults to the standard form ``sum dx_j ^ dy_j``.
    """
    Z = np.asarray(Z, dtype=float)
    Zp = np.asarray(Zp, dtype=float)
    if Z.shape[-1] != Zp.shape[-1]:
        raise ValueError("dimension mismatch")
    dim = Z.shape[-1]
    if omega is None:
        if dim % 2:
            raise ValueError("standard symplectic form needs an even dimension")
        omega = np.zeros((dim, dim))
        for j in range(0, dim, 2):
            omega[j, j + 1] = 1.0
            omega[j + 1, j] = -1.0
    omega = np.asarray(omega, dtype=float)
    dist2 = np.sum((Z - Zp) ** 2, axis=-1)
    symp = np.einsum("...i,ij,...j->...", Z, omega, Zp)
    return np.exp(-0.5 * np.pi * dist2 - 1j * np.pi * symp)


def _perp_factor(perp, perp_prime):
    if perp is None or np.size(perp) == 0:
        return 1.0
    return local_model_full(perp, perp_prime)


def local_model_equivariant(m_over_sqrtp, xi_norm, u, up, perp=None, perp_prime=None):
    """Leading-order model of ``p^(-n+1/2)`` times the weight-``m`` kernel."""
    if np.any(np.asarray(xi_norm) <= 0):
        raise ValueError("xi_norm must be positive")
    center = 0.5 * (np.asarray(u) + np.asarray(up)) + np.asarray(m_over_sqrtp) / xi_norm
    gauss = np.exp(-2.0 * np.pi * center**2) * np.exp(-0.5 * np.pi * (np.asarray(u) - np.asarray(up)) ** 2)
    return math.sqrt(2.0) / xi_norm * gauss * _perp_factor(perp, perp_prime)


def gaussian_tail_integral(a):
    """``int_{-inf}^a exp(-2 pi t^2) dt``."""
    return (1.0 + erf(math.sqrt(2.0 * math.pi) * np.asarray(a))) / (2.0 * math.sqrt(2.0))


def local_model_partial(u, up, perp=None, perp_prime=None):
    """Leading-order model of ``p^(-n)`` times the partial kernel."""
    u = np.asarray(u)
    up = np.asarray(up)
    return (math.sqrt(2.0) * gaussian_tail_integral(0.5 * (u + up))
            * np.exp(-0.5 * np.pi * (u - up) ** 2) * _perp_factor(perp, perp_prime))


def partial_profile(v, xi_norm):
    """Diagonal partial-kernel model at moment-map level ``v / sqrt(p)``.

    Along the normal direction ``mu = -|xi| u``, so the rescaled coordinate is
    ``sqrt(p) u = -v / |xi|``.
    """
    s = -np.asarray(v) / xi_norm
    return local_model_partial(s, s)


def boundary_point(model: ModelGeometry, p: int) -> float:
    """A point (on the positive real axis) of the zero level of the moment map."""
    if model.is_plane:
        return 1.0 / math.sqrt(math.pi)
    s = model.shift(p)
    return math.sqrt(s / (p - s))


def geodesic_distance(model: ModelGeometry, z, w):
    z, w = _pair(z, w)
    if model.is_plane:
        return np.abs(z - w)
    return np.arctan2(np.abs(z - w), np.abs(1.0 + np.conj(z) * w)) / math.sqrt(math.pi)


def decay_rate_fit(model: ModelGeometry, z, w, p_list) -> float:
    """Least-squares slope of ``log|K_p(x, y)| - log p`` against ``sqrt(p) d(x, y)``.

    Returns the fitted slope, i.e. ``-c`` in the off-diagonal decay bound.
    """
    p_arr = np.asarray(sorted(p_list), dtype=float)
    if p_arr.size < 4:
        raise ValueError("need at least 4 powers")
    d = float(geodesic_distance(model, z, w))
    if d == 0.0:
        raise ValueError("points must be distinct")
    mags = np.array([abs(complex(full_kernel(model, int(p), z, w))) for p in p_arr])
    if np.any(mags == 0.0):
        raise ValueError("degenerate fit: kernel vanishes (antipodal points?)")
    x = np.sqrt(p_arr) * d
    y = np.log(mags) - np.log(p_arr)
    if np.ptp(x) == 0.0:
        raise ValueError("degenerate fit")
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
