"""Deterministic quadrature on the model charts.

Planar integrals use a tensor polar rule: composite Gauss-Legendre in the
radius times the uniform trapezoid rule in the angle (spectrally accurate for
smooth periodic integrands).  On the projective line the radial rule is built
in the area coordinate ``t = r^2 / (1 + r^2)`` so that the far chart, where
the Fubini-Study density has an algebraic tail, costs nothing.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import ModelGeometry, volume_density

DEFAULT_RADIAL_NODES = 400
DEFAULT_ANGULAR_NODES = 256
PANEL_ORDER = 16
# chart tail 1/(1+R^2) of the sphere's unit volume
SPHERE_TAIL = 1e-12


class TruncationTailWarning(UserWarning):
    """Integrand mass near the truncation radius exceeds the monitor tolerance."""


def gauss_legendre_panels(a: float, b: float, n_nodes: int, order: int = PANEL_ORDER):
    """Composite Gauss-Legendre nodes/weights on ``[a, b]`` with about ``n_nodes`` points."""
    n_panels = max(1, math.ceil(n_nodes / order))
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True)
class PlanarGrid:
    """Tensor polar rule on the disk ``|z| <= radius``.

    ``radial_weights`` already contain the Jacobian ``r`` of polar coordinates,
    so ``sum(radial_weights) * 2 pi == pi R^2`` for the uniform radial map.
    """

    radii: np.ndarray
    radial_weights: np.ndarray
    n_angular: int
    radius: float
    mapping: str = "uniform"
    r_min: float = 0.0

    def __post_init__(self):
        if self.n_angular < 8 or self.n_angular % 2:
            raise ValueError("angular node count must be even and >= 8")

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_angular) / self.n_angular

    @property
    def angle_weight(self) -> float:
        return 2.0 * np.pi / self.n_angular

    def points(self) -> np.ndarray:
        """Chart nodes, shape ``(n_radial, n_angular)``."""
        return self.radii[:, None] * np.exp(1j * self.angles)[None, :]

    def weights(self) -> np.ndarray:
        """Lebesgue area weights matching :meth:`points`."""
        return np.repeat(self.radial_weights[:, None] * self.angle_weight, self.n_angular, axis=1)

    @property
    def size(self) -> int:
        return self.radii.size * self.n_angular

    def refined(self, factor: int = 2) -> "PlanarGrid":
        """Same domain with ``factor`` times the nodes in each direction."""
        if self.mapping == "uniform":
            return planar_grid(self.radius, self.radii.size * factor, self.n_angular * factor, r_min=self.r_min)
        return sphere_grid(self.radius, self.radii.size * factor, self.n_angular * factor, r_min=self.r_min)


def planar_grid(radius: float, n_radial: int = DEFAULT_RADIAL_NODES,
                n_angular: int = DEFAULT_ANGULAR_NODES, r_min: float = 0.0) -> PlanarGrid:
    """Uniform-radius polar grid on the annulus ``r_min <= |z| <= radius``."""
    r, w = gauss_legendre_panels(r_min, radius, n_radial)
    return PlanarGrid(r, w * r, n_angular, float(radius), "uniform", float(r_min))


def sphere_grid(radius: float, n_radial: int = DEFAULT_RADIAL_NODES,
                n_angular: int = DEFAULT_ANGULAR_NODES, r_min: float = 0.0) -> PlanarGrid:
    """Polar grid on the chart annulus with radial nodes uniform in ``r^2/(1+r^2)``."""
    t_min = r_min**2 / (1.0 + r_min**2)
    t_max = radius**2 / (1.0 + radius**2)
    t, wt = gauss_legendre_panels(t_min, t_max, n_radial)
    r = np.sqrt(t / (1.0 - t))
    # r dr = dt / (2 (1 - t)^2)
    return PlanarGrid(r, wt / (2.0 * (1.0 - t) ** 2), n_angular, float(radius), "sphere", float(r_min))


def truncation_radius(model: ModelGeometry, p: int) -> float:
    """Chart radius beyond which the retained sections carry negligible mass.

    Plane: ``1/sqrt(pi) + 10/sqrt(p) + 8 sqrt(log p)/sqrt(p)``.  Projective
    line: the chart radius whose complement has volume ``SPHERE_TAIL``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if model.is_plane:
        return 1.0 / math.sqrt(math.pi) + (10.0 + 8.0 * math.sqrt(math.log(p))) / math.sqrt(p)
    return math.sqrt((1.0 - SPHERE_TAIL) / SPHERE_TAIL)


def model_grid(model: ModelGeometry, p: int, n_radial: int | None = None,
               n_angular: int | None = None, radius: float | None = None) -> PlanarGrid:
    """Default grid for integrals of the rank-``N_p`` kernels at power ``p``.

    Angular node count grows like ``sqrt(p)`` beyond ``p = 400``.
    """
    if n_radial is None:
        n_radial = DEFAULT_RADIAL_NODES
    if n_angular is None:
        n_angular = DEFAULT_ANGULAR_NODES
        if p > 400:
            n_angular = 2 * math.ceil(DEFAULT_ANGULAR_NODES * math.sqrt(p / 400) / 2)
    if radius is None:
        radius = truncation_radius(model, p)
    if model.is_plane:
        return planar_grid(radius, n_radial, n_angular)
    return sphere_grid(radius, n_radial, n_angular)


def circle_integrate(g, n: int) -> complex:
    """Uniform trapezoid rule for ``int_0^1 g(t) dt`` with ``n`` nodes.

    Exact for trigonometric polynomials of degree < n.
    """
    if n < 2:
        raise ValueError("need at least 2 nodes")
    t = np.arange(n) / n
    vals = np.asarray(g(t))
    return complex(np.mean(vals)) if np.iscomplexobj(vals) else complex(float(np.mean(vals)))


def plane_integrate(g, grid: PlanarGrid, tail_tol: float | None = None) -> complex:
    """Integrate ``g(z)`` against chart Lebesgue measure on the grid.

    With ``tail_tol`` set, warns with :class:`TruncationTailWarning` when the
    outermost 5% of the radius contributes more than ``tail_tol`` of the total
    absolute mass, i.e. when the truncation is not capturing the integrand.
    """
    z = grid.points()
    vals = np.asarray(g(z))
    w = grid.weights()
    total = np.sum(vals * w)
    if tail_tol is not None:
        outer = grid.radii >= 0.95 * grid.radius
        mass = np.sum(np.abs(vals) * w)
        tail = np.sum((np.abs(vals) * w)[outer])
        if mass > 0 and tail > tail_tol * mass:
            warnings.warn(f"integrand tail fraction {tail / mass:.3g} at R={grid.radius:.4g}",
                          TruncationTailWarning, stacklevel=2)
    return complex(total)


def model_integrate(model: ModelGeometry, g, grid: PlanarGrid) -> complex:
    """Integrate ``g`` against the model volume form ``dv_X``."""
    return plane_integrate(lambda z: g(z) * volume_density(model, z), grid)


def local_disk_rule(radius: float, n_radial: int = 48, n_angular: int = 64):
    """Offsets and Lebesgue weights of a polar rule on a small disk around 0."""
    r, w = gauss_legendre_panels(0.0, radius, n_radial)
    ang = 2.0 * np.pi * np.arange(n_angular) / n_angular
    offs = (r[:, None] * np.exp(1j * ang)[None, :]).ravel()
    wts = np.repeat(w * r * (2.0 * np.pi / n_angular), n_angular)
    return offs, wts


def double_integrate(g, grid: PlanarGrid, decay_scale: float | None = None, *,
                     inner_radial: int = 48, inner_angular: int = 64,
                     chunk: int = 256) -> float:
    """Compute ``int int g(x, y) dx dy`` with both variables on the grid disk.

    Without a decay hint the plain tensor product of the grid with itself is
    used.  With ``decay_scale`` (the off-diagonal length scale of ``g``) the
    inner integral is split into a near field, a local polar disk of radius
    ``10 * decay_scale`` around each outer node, and a far field evaluated on
    a coarse copy of the grid with 1/16 of the node density.  ``g`` must be
    vectorized: ``g(x[:, None], y[None, :])`` or broadcast-compatible shapes.

    Outer nodes are processed in fixed chunks and reduced in index order, so
    the result does not depend on how the chunks are scheduled.
    """
    x = grid.points().ravel()
    wx = grid.weights().ravel()
    if decay_scale is None:
        parts = []
        for lo in range(0, x.size, chunk):
            xs = x[lo:lo + chunk]
            vals = g(xs[:, None], x[None, :])
            parts.append(np.sum(wx[lo:lo + chunk] * (np.asarray(vals) @ wx)))
        return float(np.real(np.sum(parts)))

    rho = 10.0 * decay_scale
    offs, wl = local_disk_rule(rho, inner_radial, inner_angular)
    coarse_nr = max(PANEL_ORDER, grid.radii.size // 4)
    coarse_na = max(8, (grid.n_angular // 4) // 2 * 2)
    if grid.mapping == "uniform":
        coarse = planar_grid(grid.radius, coarse_nr, coarse_na, r_min=grid.r_min)
    else:
        coarse = sphere_grid(grid.radius, coarse_nr, coarse_na, r_min=grid.r_min)
    yc = coarse.points().ravel()
    wc = coarse.weights().ravel()

    parts = []
    step = max(1, chunk // 4)
    for lo in range(0, x.size, step):
        xs = x[lo:lo + step]
        near_pts = xs[:, None] + offs[None, :]
        near = np.asarray(g(xs[:, None], near_pts)) @ wl
        far_vals = np.asarray(g(xs[:, None], yc[None, :]))
        mask = np.abs(yc[None, :] - xs[:, None]) > rho
        far = np.sum(np.where(mask, far_vals, 0.0) * wc[None, :], axis=1)
        parts.append(np.sum(wx[lo:lo + step] * (near + far)))
    return float(np.real(np.sum(parts)))
