import math
import warnings

import numpy as np
import pytest

from bergman_dpp.geometry import ModelGeometry, volume_density
from bergman_dpp.kernels import full_kernel_diag, partial_kernel, partial_kernel_diag
from bergman_dpp.quadrature import (
    PlanarGrid,
    TruncationTailWarning,
    circle_integrate,
    double_integrate,
    model_grid,
    model_integrate,
    planar_grid,
    plane_integrate,
    sphere_grid,
    truncation_radius,
)

PLANE = ModelGeometry.plane()
SPHERE = ModelGeometry.projective_line()


def test_circle_integrate_examples():
    assert abs(circle_integrate(lambda t: np.exp(2j * np.pi * t), 16)) < 1e-15
    assert circle_integrate(lambda t: np.full_like(t, 2.5), 7) == pytest.approx(2.5)
    for n in (8, 9, 16, 33):
        assert circle_integrate(lambda t: np.cos(2 * np.pi * t) ** 2, n).real == pytest.approx(0.5, abs=1e-15)


def test_circle_integrate_trig_exactness():
    n = 12
    for k in range(1, n):
        assert abs(circle_integrate(lambda t: np.exp(2j * np.pi * k * t), n)) < 1e-14
    with pytest.raises(ValueError):
        circle_integrate(lambda t: t, 1)


def test_grid_area_and_validation():
    g = planar_grid(2.5, 200, 32)
    assert np.sum(g.weights()) == pytest.approx(math.pi * 2.5**2, rel=1e-12)
    assert plane_integrate(lambda z: np.ones(z.shape), g).real == pytest.approx(math.pi * 6.25, rel=1e-12)
    with pytest.raises(ValueError):
        PlanarGrid(g.radii, g.radial_weights, 7, 2.5)
    with pytest.raises(ValueError):
        PlanarGrid(g.radii, g.radial_weights, 6, 2.5)


def test_gaussian_integral():
    g = planar_grid(7.0, 400, 16)
    assert plane_integrate(lambda z: np.exp(-np.pi * np.abs(z) ** 2), g).real == pytest.approx(1.0, abs=1e-12)


def test_full_kernel_trace_diverges_and_is_flagged():
    vals = []
    for R in (5.0, 10.0):
        g = planar_grid(R, 64, 16)
        with pytest.warns(TruncationTailWarning):
            vals.append(plane_integrate(lambda z: full_kernel_diag(PLANE, 10, z) / 10, g, tail_tol=1e-6).real)
    assert vals[1] / vals[0] == pytest.approx(4.0, rel=1e-12)


def test_partial_trace_not_flagged():
    g = model_grid(PLANE, 50)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        plane_integrate(lambda z: partial_kernel_diag(PLANE, 50, z), g, tail_tol=1e-10)


def test_truncation_radius_examples():
    assert truncation_radius(PLANE, 100) == pytest.approx(0.5642 + 1.0 + 0.8 * math.sqrt(math.log(100)), abs=1e-4)
    assert 0.8 * math.sqrt(math.log(100)) == pytest.approx(1.72, abs=0.01)
    radii = [truncation_radius(PLANE, p) for p in (2, 5, 10, 50, 100, 1000, 10**5)]
    assert all(b < a for a, b in zip(radii, radii[1:]))
    assert radii[-1] > 1 / math.sqrt(math.pi)


@pytest.mark.parametrize("model,p", [(PLANE, 50), (SPHERE, 50)])
def test_omitted_mass(model, p):
    R = truncation_radius(model, p)
    g = sphere_grid(1e8, 400, 8, r_min=R) if not model.is_plane else planar_grid(R + 20, 400, 8, r_min=R)
    omitted = model_integrate(model, lambda z: partial_kernel_diag(model, p, z), g).real
    assert omitted < 1e-10 * model.n_points(p)


@pytest.mark.parametrize("model,p", [(PLANE, 20), (SPHERE, 20), (SPHERE, 9)])
def test_grid_convergence(model, p):
    g = model_grid(model, p, 160, 32)
    f = lambda z: partial_kernel_diag(model, p, z) * np.exp(-np.abs(z - 0.3) ** 2)
    a = model_integrate(model, f, g).real
    b = model_integrate(model, f, g.refined(2)).real
    assert abs(a - b) < 1e-8 * abs(b)


def test_double_integrate_constant():
    g = planar_grid(1.0, 48, 32)
    assert double_integrate(lambda x, y: np.ones(np.broadcast(x, y).shape), g) == pytest.approx(math.pi**2, rel=1e-6)


def test_double_integrate_zero_for_constant_f():
    g = planar_grid(1.0, 32, 16)
    f = lambda z: np.full(np.shape(z), 3.0)
    val = double_integrate(lambda x, y: np.abs(partial_kernel(PLANE, 5, x, y)) ** 2 * (f(x) - f(y)) ** 2, g, 0.3)
    assert val == 0.0


def test_double_integrate_projection_trace():
    p = 50
    g = planar_grid(1.3, 96, 16)
    val = double_integrate(lambda x, y: np.abs(partial_kernel(PLANE, p, x, y)) ** 2, g, 1 / math.sqrt(p))
    assert val == pytest.approx(p + 1, rel=1e-4)


def test_double_integrate_chunking_invariant():
    g = planar_grid(1.0, 32, 16)
    h = lambda x, y: np.exp(-np.abs(x - y) ** 2) * np.real(x)
    assert double_integrate(h, g, chunk=64) == double_integrate(h, g, chunk=64)
    assert double_integrate(h, g, chunk=64) == pytest.approx(double_integrate(h, g, chunk=256), rel=1e-13)
