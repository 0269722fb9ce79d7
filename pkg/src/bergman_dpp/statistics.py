"""Linear statistics of the partial-kernel DPP.

Exact moments come from the correlation functions: the expectation is the
integral of ``f`` against the kernel diagonal and the variance is

    Var N[f] = 1/2 int int |K(x, y)|^2 (f(x) - f(y))^2 dv dv
             = tr(K f^2) - tr(K f K f).

The second form is evaluated in the section basis (``method="gram"``): with
``M_jk = int f s_j conj(s_k) dv``, ``Var = tr M_{f^2} - ||M_f||_F^2``.  Because
``s_j conj(s_k)`` carries the angular factor ``exp(i (j - k) theta)``, only
the angular Fourier modes of ``f`` that are actually present are needed.
The literal double integral is available as ``method="direct"``.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats
from scipy.special import ive

from .dpp import Configuration, RngStream, hkpv_sample, kostlan_radii_sample, sample_points
from .geometry import ModelGeometry, log_c2, log_fiber_weight, moment_map, rotate, section_basis, volume_density
from .kernels import boundary_point, partial_kernel, partial_kernel_diag
from .quadrature import (
    PANEL_ORDER,
    PlanarGrid,
    double_integrate,
    model_grid,
    planar_grid,
    sphere_grid,
    truncation_radius,
)

PLANE = ModelGeometry.plane()
FOURIER_TAIL = 1e-8
GAUSSIAN_CUT = math.sqrt(45.0)  # exp(-45) ~ 3e-20


# ---------------------------------------------------------------------------
# test functions


def _h(x):
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)


def _dh(x):
    safe = np.where(x > 0, x, 1.0)
    return np.where(x > 0, _h(x) / safe**2, 0.0)


def smooth_step(x):
    """C-infinity step: 1 for ``x <= 0``, 0 for ``x >= 1``."""
    x = np.asarray(x, dtype=float)
    a, b = _h(1.0 - x), _h(x)
    return a / (a + b)


def smooth_step_derivative(x):
    x = np.asarray(x, dtype=float)
    a, b = _h(1.0 - x), _h(x)
    return -(_dh(1.0 - x) * b + a * _dh(x)) / (a + b) ** 2


def _radial_parts(z):
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    unit = np.where(r > 0, z / np.where(r > 0, r, 1.0), 0.0)
    return z, r, unit


def _stack(gz):
    """Complex gradient ``df/dx + i df/dy`` to a trailing 2-vector."""
    return np.stack([np.real(gz), np.imag(gz)], axis=-1)


@dataclass(frozen=True)
class TestFunction:
    """A real test function on the chart with analytic gradient.

    ``circle_fourier(k)`` gives the Fourier coefficients along the circle of
    radius ``fourier_radius`` (the Plane boundary orbit for registry members);
    ``fourier_modes`` lists the nonzero ones when there are finitely many.
    """

    __test__ = False  # not a pytest class

    name: str
    value: Callable
    gradient: Callable
    support_radius: float
    circle_fourier: Callable | None = None
    fourier_decay_order: int = 2
    fourier_modes: tuple | None = None
    fourier_radius: float = 1.0 / math.sqrt(math.pi)
    params: dict = field(default_factory=dict)

    def __call__(self, z):
        return self.value(z)

    @property
    def is_radial(self) -> bool:
        return self.fourier_modes == (0,)


def radial_bump(a: float = 0.2, b: float = 0.45) -> TestFunction:
    """Equal to 1 on ``|z| <= a``, 0 for ``|z| >= b``, smooth in between."""
    if not 0 <= a < b:
        raise ValueError("need 0 <= a < b")

    def value(z):
        return smooth_step((np.abs(z) - a) / (b - a))

    def gradient(z):
        z, r, unit = _radial_parts(z)
        return _stack(smooth_step_derivative((r - a) / (b - a)) / (b - a) * unit)

    r0 = 1.0 / math.sqrt(math.pi)
    c0 = float(smooth_step((r0 - a) / (b - a)))
    return TestFunction(f"radial_bump(a={a},b={b})", value, gradient, b,
                        lambda k: complex(c0) if k == 0 else 0j, 64, (0,),
                        params={"a": a, "b": b})


def angular_mode(k: int = 1, cutoff: float = 0.7, width: float = 0.3) -> TestFunction:
    """``Re((z sqrt(pi))^k) * chi(|z|)`` with ``chi = 1`` on ``|z| <= cutoff``."""
    if int(k) != k or k < 1:
        raise ValueError("k must be an integer >= 1")
    k = int(k)
    sp = math.sqrt(math.pi)
    chi = radial_bump(cutoff, cutoff + width)

    def value(z):
        z = np.asarray(z, dtype=complex)
        return np.real((sp * z) ** k) * chi.value(z)

    def gradient(z):
        z = np.asarray(z, dtype=complex)
        g = (sp * z) ** k
        dg = k * sp * (sp * z) ** (k - 1)
        # for holomorphic g: grad Re g = (Re g', -Im g')
        grad_re = np.conj(dg)
        cg = chi.gradient(z)
        return _stack(grad_re * chi.value(z)) + np.real(g)[..., None] * cg

    r0 = 1.0 / sp
    amp = 0.5 * float(chi.value(r0))

    def fourier(j):
        return complex(amp) if abs(j) == k else 0j

    return TestFunction(f"angular_mode(k={k},cutoff={cutoff})", value, gradient, cutoff + width,
                        fourier, 64, (-k, k), params={"k": k, "cutoff": cutoff, "width": width})


def gaussian_bump(center: complex = 0.0, width: float = 0.1) -> TestFunction:
    """``exp(-|z - c|^2 / width^2)``, cut off where it drops below ``exp(-45)``."""
    if width <= 0:
        raise ValueError("width must be positive")
    c = complex(center)
    cut = GAUSSIAN_CUT * width

    def value(z):
        d2 = np.abs(np.asarray(z) - c) ** 2
        return np.where(d2 <= cut**2, np.exp(-d2 / width**2), 0.0)

    def gradient(z):
        z = np.asarray(z, dtype=complex)
        return _stack(-2.0 * (z - c) / width**2 * value(z))

    rho = 1.0 / math.sqrt(math.pi)
    kappa = 2.0 * rho * abs(c) / width**2
    phi = math.atan2(c.imag, c.real)

    def fourier(k):
        # generating function of the modified Bessel functions I_k
        return complex(math.exp(-((rho - abs(c)) ** 2) / width**2) * ive(k, kappa) * np.exp(1j * k * phi))

    modes = (0,) if c == 0 else None
    return TestFunction(f"gaussian_bump(center={center},width={width})", value, gradient,
                        abs(c) + cut, fourier, 20, modes,
                        params={"center": center, "width": width})


def constant_capped(R: float = 10.0) -> TestFunction:
    """Indicator of the disk ``|z| <= R``."""
    if R <= 0:
        raise ValueError("R must be positive")

    def value(z):
        return np.where(np.abs(z) <= R, 1.0, 0.0)

    def gradient(z):
        z = np.asarray(z)
        return np.zeros(z.shape + (2,))

    c0 = 1.0 if R > 1.0 / math.sqrt(math.pi) else 0.0
    return TestFunction(f"constant_capped(R={R})", value, gradient, R,
                        lambda k: complex(c0) if k == 0 else 0j, 64, (0,), params={"R": R})


FAMILIES = {
    "radial_bump": radial_bump,
    "angular_mode": angular_mode,
    "gaussian_bump": gaussian_bump,
    "constant_capped": constant_capped,
}


def registry() -> list[TestFunction]:
    """Default member of each family."""
    return [factory() for factory in FAMILIES.values()]


def make_function(name: str, **params) -> TestFunction:
    try:
        factory = FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown test function {name!r}; known: {sorted(FAMILIES)}") from None
    return factory(**params)


# ---------------------------------------------------------------------------
# statistics of a configuration


def linear_statistic(f: TestFunction, cfg) -> float:
    """``sum_j f(x_j)``."""
    pts = cfg.points if isinstance(cfg, Configuration) else np.asarray(cfg)
    return float(math.fsum(np.asarray(f.value(pts), dtype=float).ravel()))


def _base_radius(model: ModelGeometry, p: int | None) -> float:
    if model.is_plane:
        return 1.0 / math.sqrt(math.pi)
    if p is None:
        raise ValueError("projective line boundary needs p")
    return boundary_point(model, p)


def fourier_coefficients(f: TestFunction, K: int, model: ModelGeometry = PLANE, p: int | None = None,
                         n_nodes: int | None = None) -> np.ndarray:
    """``f_hat_k`` for ``k = -K .. K`` on the boundary orbit, by the trapezoid rule."""
    n = max(8 * (K + 1), 512) if n_nodes is None else n_nodes
    x0 = _base_radius(model, p)
    t = np.arange(n) / n
    vals = np.asarray(f.value(rotate(model, x0, t)), dtype=float)
    # f_hat_k = mean(exp(2 pi i t k) f) is an inverse DFT
    coeffs = np.fft.ifft(vals)
    k = np.arange(-K, K + 1)
    return coeffs[k % n]


def fourier_coefficient(f: TestFunction, k: int, model: ModelGeometry = PLANE, p: int | None = None) -> complex:
    """``int_0^1 exp(2 pi i t k) f(phi_t(x0)) dt`` with ``x0`` on the zero level of the moment map."""
    return complex(fourier_coefficients(f, abs(k), model, p)[k + abs(k)])


def fourier_truncation(f: TestFunction, model: ModelGeometry = PLANE, p: int | None = None,
                       n_nodes: int = 8192) -> int:
    """Smallest ``K`` whose two-sided coefficient tail is below ``FOURIER_TAIL``.

    The tail is read off a DFT resolved far beyond ``K``.  A fit of
    ``C_N K^-(N-1)`` to the first few modes underestimates ``K`` for narrow
    off-centre bumps, whose coefficients still grow there.
    """
    if f.fourier_modes is not None:
        return max(abs(k) for k in f.fourier_modes)
    half = n_nodes // 2 - 1
    c = np.abs(fourier_coefficients(f, half, model, p, n_nodes))
    mag = c[half + 1:] + c[:half][::-1]  # |k| = 1 .. half
    tail = np.cumsum(mag[::-1])[::-1]  # tail[j] = sum over |k| >= j + 1
    below = np.nonzero(tail < FOURIER_TAIL)[0]
    if below.size == 0:
        raise ValueError(f"{f.name}: Fourier tail not resolved with {n_nodes} nodes")
    return int(max(below[0], 1))


def boundary_h_half(f: TestFunction, model: ModelGeometry = PLANE, p: int | None = None) -> float:
    """``sum_k |k| |f_hat_k|^2`` on the boundary orbit."""
    K = fourier_truncation(f, model, p)
    if K == 0:
        return 0.0
    c = fourier_coefficients(f, K, model, p)
    k = np.arange(-K, K + 1)
    return float(np.sum(np.abs(k) * np.abs(c) ** 2))


# ---------------------------------------------------------------------------
# exact moments


def _stat_grid(model: ModelGeometry, p: int, f: TestFunction, n_angular: int | None = None) -> PlanarGrid:
    """Chart grid over the support of ``f`` resolving the retained sections."""
    radius = min(f.support_radius, truncation_radius(model, p))
    if model.is_plane:
        n_panels = max(25, math.ceil(radius * math.sqrt(p) / 0.25))
        return model_grid(model, p, PANEL_ORDER * n_panels, n_angular, radius)
    t_max = radius**2 / (1.0 + radius**2)
    n_panels = max(25, math.ceil(t_max * max(p / 8.0, 4.0 * math.sqrt(p))))
    return model_grid(model, p, PANEL_ORDER * n_panels, n_angular, radius)


def expectation_exact(model: ModelGeometry, p: int, f: TestFunction, grid: PlanarGrid | None = None) -> float:
    """``int K(x, x) f(x) dv``."""
    grid = _stat_grid(model, p, f) if grid is None else grid
    z = grid.points()
    vals = partial_kernel_diag(model, p, z) * f.value(z) * volume_density(model, z)
    return float(np.sum(vals * grid.weights()))


def _angular_modes(vals: np.ndarray, tol: float = 1e-14):
    """FFT of ``vals`` (radius x angle) over the angle, and the modes that are present."""
    F = np.fft.fft(vals, axis=1) / vals.shape[1]
    mags = np.max(np.abs(F), axis=0)
    top = float(np.max(mags)) if mags.size else 0.0
    half = vals.shape[1] // 2
    present = [ell for ell in range(half) if top > 0 and mags[ell] > tol * top]
    return F, present


def _log_radial(model: ModelGeometry, p: int, radii: np.ndarray) -> np.ndarray:
    """``log(c_j r^j w(r))`` for all retained degrees, shape ``(N_p, n_radial)``."""
    basis = section_basis(model, p)
    k = basis.degrees[:, None]
    with np.errstate(divide="ignore"):
        return 0.5 * basis.log_c2[:, None] + k * np.log(radii)[None, :] + log_fiber_weight(model, p, radii)[None, :]


def gram_diagonals(model: ModelGeometry, p: int, g_vals: np.ndarray, grid: PlanarGrid, modes=None) -> dict:
    """Diagonals ``M_{j, j+l}`` of ``M = int g s_j conj(s_k) dv`` for ``l >= 0``."""
    F, present = _angular_modes(g_vals)
    if modes is not None:
        present = [ell for ell in present if ell in modes]
    LR = _log_radial(model, p, grid.radii)
    n = LR.shape[0]
    dens = volume_density(model, grid.radii)
    out = {}
    for ell in present:
        if ell >= n:
            continue
        radial = 2.0 * np.pi * grid.radial_weights * dens * F[:, ell]
        out[ell] = np.exp(LR[: n - ell] + LR[ell:]) @ radial
    return out


def _gram_matrix(n: int, diags: dict) -> np.ndarray:
    M = np.zeros((n, n), dtype=complex)
    for ell, d in diags.items():
        idx = np.arange(n - ell)
        M[idx, idx + ell] = d
        if ell:
            M[idx + ell, idx] = np.conj(d)
    return M


def _variance_gram(model, p, f, grid):
    z = grid.points()
    fv = np.asarray(f.value(z), dtype=float)
    trace = np.sum(gram_diagonals(model, p, fv**2, grid, modes={0}).get(0, 0.0)).real
    diags = gram_diagonals(model, p, fv, grid)
    frob = sum((1.0 if ell == 0 else 2.0) * float(np.sum(np.abs(d) ** 2)) for ell, d in diags.items())
    return float(trace - frob)


def variance_density(model: ModelGeometry, p: int, f: TestFunction, z, grid: PlanarGrid | None = None):
    """Inner integral ``int |K(x, y)|^2 (f(x) - f(y))^2 dv(y)`` at the points ``z``."""
    grid = _stat_grid(model, p, f) if grid is None else grid
    pts = grid.points()
    fv = np.asarray(f.value(pts), dtype=float)
    n = model.n_points(p)
    Mf = _gram_matrix(n, gram_diagonals(model, p, fv, grid))
    Mf2 = _gram_matrix(n, gram_diagonals(model, p, fv**2, grid))
    z = np.asarray(z, dtype=complex)
    v = section_basis(model, p).evaluate(z.ravel())
    fx = np.asarray(f.value(z.ravel()), dtype=float)
    kxx = np.sum(np.abs(v) ** 2, axis=1)
    q1 = np.einsum("bj,jk,bk->b", np.conj(v), Mf, v).real
    q2 = np.einsum("bj,jk,bk->b", np.conj(v), Mf2, v).real
    return (fx**2 * kxx - 2.0 * fx * q1 + q2).reshape(z.shape)


def _level_radius(model: ModelGeometry, p: int, level: float) -> float:
    """Chart radius of the circle ``mu = level``, clipped to ``[0, inf)``."""
    if model.is_plane:
        return math.sqrt(max(level + 1.0, 0.0) / math.pi)
    t = level + model.shift(p) / p
    if t <= 0:
        return 0.0
    if t >= 1:
        return math.inf
    return math.sqrt(t / (1.0 - t))


def _reach_radius(model: ModelGeometry, p: int, f: TestFunction) -> float:
    """Radius beyond which ``|K(x, y)|^2`` is below ``exp(-45)`` for all ``y`` in the support of ``f``."""
    R = truncation_radius(model, p)
    if model.is_plane:
        R = min(R, f.support_radius + math.sqrt(45.0 / (math.pi * p)))
    return R


def _variance_split(model, p, f, delta, n_radial, n_angular):
    R = _reach_radius(model, p, f)
    cuts = sorted({0.0, R, *(min(R, _level_radius(model, p, s * delta)) for s in (-1.0, 1.0))})
    base = _stat_grid(model, p, f, n_angular)
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi <= lo:
            continue
        if model.is_plane:
            g = planar_grid(hi, n_radial, base.n_angular, r_min=lo)
        else:
            g = sphere_grid(hi, n_radial, base.n_angular, r_min=lo)
        z = g.points()
        vals = variance_density(model, p, f, z, base) * volume_density(model, z)
        total += float(np.sum(vals * g.weights()))
    return 0.5 * total


def variance_exact(model: ModelGeometry, p: int, f: TestFunction, *, method: str = "gram",
                   grid: PlanarGrid | None = None, split: float | None = None,
                   split_nodes: tuple[int, int] = (160, 128)) -> float:
    """Exact variance of ``N_p[f]``.

    Parameters
    ----------
    method : {"gram", "direct"}
        ``gram`` uses the section-basis trace identity; ``direct`` runs the
        double integral of ``|K|^2 (f(x) - f(y))^2 / 2`` (small ``p`` only).
    split : float, optional
        With ``method="gram"``, integrate the inner-integral density over
        the three shells ``mu < -split``, ``|mu| < split``, ``mu > split``
        separately and add the pieces.
    """
    if method == "gram":
        if split is not None:
            return _variance_split(model, p, f, split, *split_nodes)
        grid = _stat_grid(model, p, f) if grid is None else grid
        return max(0.0, _variance_gram(model, p, f, grid))
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    grid = model_grid(model, p, 128, 64, _reach_radius(model, p, f)) if grid is None else grid

    def integrand(x, y):
        k2 = np.abs(partial_kernel(model, p, x, y)) ** 2
        diff = f.value(x) - f.value(y)
        return 0.5 * k2 * diff**2 * volume_density(model, x) * volume_density(model, y)

    return max(0.0, double_integrate(integrand, grid))


# ---------------------------------------------------------------------------
# limits


def droplet_radius(model: ModelGeometry, p: int | None = None) -> float:
    return _base_radius(model, p)


def limit_expectation(f: TestFunction, model: ModelGeometry = PLANE, p: int = 1) -> float:
    """``p * int_{mu < 0} f dv``: the leading term of the expectation."""
    R = min(droplet_radius(model, p), f.support_radius)
    g = planar_grid(R, 512, 256)
    z = g.points()
    return float(p * np.sum(f.value(z) * volume_density(model, z) * g.weights()))


def limit_variance(f: TestFunction, boundary_factor: float = 1.0, model: ModelGeometry = PLANE,
                   p: int | None = None) -> tuple[float, float]:
    """Bulk and boundary terms of the limiting variance.

    The bulk Dirichlet energy is conformally invariant in one complex
    dimension, so it is integrated with the chart's Euclidean gradient.  The
    boundary term is ``boundary_factor * sum_k |k| |f_hat_k|^2``, the reduced
    space being a single point of unit mass.
    """
    R = min(droplet_radius(model, p), f.support_radius)
    g = planar_grid(R, 512, 256)
    grad = f.gradient(g.points())
    bulk = float(np.sum(np.sum(grad**2, axis=-1) * g.weights())) / (4.0 * math.pi)
    if f.is_radial:
        return bulk, 0.0
    return bulk, boundary_factor * boundary_h_half(f, model, p)


def richardson_limit(p_list, values) -> tuple[float, np.ndarray]:
    """Least-squares fit ``V(p) = V_inf + a p^-1/2 + b p^-1``; returns ``V_inf`` and residuals."""
    p = np.asarray(p_list, dtype=float)
    V = np.asarray(values, dtype=float)
    if p.size < 3:
        raise ValueError("need at least three powers")
    A = np.stack([np.ones_like(p), p**-0.5, 1.0 / p], axis=1)
    coef, *_ = np.linalg.lstsq(A, V, rcond=None)
    return float(coef[0]), V - A @ coef


@dataclass
class BoundaryFactorResult:
    p_list: list
    variances: list
    extrapolated: float
    bulk: float
    h_half: float
    predictions: dict
    matches: list

    @property
    def winner(self) -> float | None:
        return self.matches[0] if len(self.matches) == 1 else None


def determine_boundary_factor(f: TestFunction | None = None, p_list=(100, 200, 400, 800),
                              factors=(1.0, 0.5), tol: float = 0.05,
                              model: ModelGeometry = PLANE) -> BoundaryFactorResult:
    """Extrapolate exact variances and check which boundary factor reproduces the limit."""
    f = angular_mode(1) if f is None else f
    variances = [variance_exact(model, p, f) for p in p_list]
    limit, _ = richardson_limit(p_list, variances)
    bulk, _ = limit_variance(f, 1.0, model, p_list[-1])
    h = boundary_h_half(f, model, p_list[-1])
    preds = {fac: bulk + fac * h for fac in factors}
    matches = [fac for fac, v in preds.items() if abs(limit - v) <= tol * abs(v)]
    return BoundaryFactorResult(list(p_list), variances, limit, bulk, h, preds, matches)


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass
class StatisticsReport:
    p: int
    n_samples: int
    exact_expectation: float
    exact_variance: float
    mc_mean: float
    mc_variance: float
    mc_stderr: float
    ks_statistic: float | None
    ks_threshold: float | None
    limit_expectation: float
    limit_variance_bulk: float
    limit_variance_boundary: float
    boundary_factor: float = 1.0
    h_half: float = 0.0
    values: np.ndarray | None = field(default=None, repr=False)


def ks_normality(values) -> tuple[float, float]:
    """KS statistic of the standardized sample against N(0, 1), and the 5% critical value."""
    x = np.asarray(values, dtype=float)
    sd = x.std(ddof=1)
    if sd == 0:
        return 0.0, 1.36 / math.sqrt(x.size)
    res = stats.kstest((x - x.mean()) / sd, "norm")
    return float(res.statistic), 1.36 / math.sqrt(x.size)


def sample_statistics(model: ModelGeometry, p: int, f: TestFunction, n_samples: int, seed: int, *,
                      stream_offset: int = 0, workers: int = 1, sampler: str = "hkpv") -> np.ndarray:
    """``N_p[f]`` on ``n_samples`` independent streams, in stream order."""
    streams = range(stream_offset, stream_offset + n_samples)
    if sampler == "kostlan":
        if not model.is_plane:
            raise ValueError("Kostlan sampling is only valid for the plane model")
        return np.array([linear_statistic(f, kostlan_radii_sample(p, RngStream(seed, i)).astype(complex))
                         for i in streams])
    if sampler != "hkpv":
        raise ValueError(f"unknown sampler {sampler!r}")
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            configs = list(pool.map(sample_points, [model] * n_samples, [p] * n_samples,
                                    [seed] * n_samples, streams, chunksize=8))
    else:
        configs = [hkpv_sample(model, p, RngStream(seed, i)).points for i in streams]
    for pts in configs:
        if len(pts) != model.n_points(p):
            raise RuntimeError("sampler returned a configuration of the wrong size")
    return np.array([linear_statistic(f, pts) for pts in configs])


def mc_run(model: ModelGeometry, p: int, f: TestFunction, n_samples: int, seed: int, *,
           stream_offset: int = 0, workers: int = 1, sampler: str = "hkpv",
           boundary_factor: float = 1.0, exact: bool = True) -> StatisticsReport:
    """Sample ``N_p[f]`` and package it with exact and limiting moments."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    vals = sample_statistics(model, p, f, n_samples, seed, stream_offset=stream_offset,
                             workers=workers, sampler=sampler)
    mean = float(vals.mean())
    var = float(vals.var(ddof=1))
    stderr = math.sqrt(var / n_samples) if var > 0 else math.ulp(1.0)
    ks, thr = ks_normality(vals) if n_samples >= 100 else (None, None)
    e_exact = expectation_exact(model, p, f) if exact else math.nan
    v_exact = variance_exact(model, p, f) if exact else math.nan
    bulk, _ = limit_variance(f, 1.0, model, p)
    h = 0.0 if f.is_radial else boundary_h_half(f, model, p)
    return StatisticsReport(p, n_samples, e_exact, v_exact, mean, var, stderr, ks, thr,
                            limit_expectation(f, model, p), bulk, boundary_factor * h,
                            boundary_factor, h, vals)


def deviation_probability(values, n_points: int, target: float, eps: float) -> float:
    """Fraction of samples with ``|N[f] / N - target| > eps``."""
    x = np.asarray(values, dtype=float) / n_points
    return float(np.mean(np.abs(x - target) > eps))
