"""Sampling and densities of the determinantal point process of the partial kernel.

The partial kernel is ``K(x, y) = v(x) . conj(v(y))`` where ``v(x)`` is the
vector of orthonormal section values at ``x``.  The process is therefore a
projection DPP of rank ``N_p`` and is sampled by the sequential chain rule:
after ``i`` points, the next one has density ``resid_i(x) / (N_p - i)`` with
``resid_i(x) = |v(x)|^2 - sum_j |<v(x), e_j>|^2`` and ``e_j`` the Gram-Schmidt
orthonormalization of the kernel columns ``v(x_1), ..., v(x_i)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc, gammainc, gammaln

from .geometry import ModelGeometry, section_basis, SectionBasis, log_fiber_weight
from .kernels import partial_kernel, partial_kernel_diag

RNG_ALGORITHM = "numpy.PCG64 via SeedSequence(master_seed, spawn_key=(stream,))"
MAX_CONSECUTIVE_REJECTIONS = 10**6


class SamplerStallError(RuntimeError):
    """The rejection step failed too many times in a row."""


@dataclass(frozen=True)
class RngStream:
    """Identifies one independent random stream derived from a master seed."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(ss))


@dataclass
class Configuration:
    """One sample: ``N_p`` chart points and the log of their joint density."""

    points: np.ndarray
    log_density: float
    rng_stamp: RngStream | None = None

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class SamplerState:
    basis: SectionBasis
    points: list = field(default_factory=list)
    frame: np.ndarray | None = None
    log_det: float = 0.0

    def __post_init__(self):
        n = self.basis.n_points
        if self.frame is None:
            self.frame = np.zeros((n, n), dtype=complex)

    @property
    def remaining(self) -> int:
        return self.basis.n_points - len(self.points)

    def residual(self, vecs: np.ndarray) -> np.ndarray:
        """Conditional kernel diagonal at points with section vectors ``vecs``."""
        diag = np.sum(np.abs(vecs) ** 2, axis=-1)
        i = len(self.points)
        if i == 0:
            return diag
        proj = vecs @ np.conj(self.frame[:i]).T
        return diag - np.sum(np.abs(proj) ** 2, axis=-1)

    def accept(self, z: complex, vec: np.ndarray) -> None:
        i = len(self.points)
        r = vec.copy()
        # two passes of classical Gram-Schmidt keep the frame orthonormal to rounding
        for _ in range(2):
            if i:
                r = r - (np.conj(self.frame[:i]) @ r) @ self.frame[:i]
        norm2 = float(np.real(np.vdot(r, r)))
        self.frame[i] = r / math.sqrt(norm2)
        # the squared residual norm is the conditional kernel diagonal at z
        self.log_det += math.log(norm2)
        self.points.append(z)


def _as_generator(rng):
    if isinstance(rng, RngStream):
        return rng.generator(), rng
    if isinstance(rng, np.random.Generator):
        return rng, None
    raise TypeError("rng must be an RngStream or numpy Generator")


def propose(basis: SectionBasis, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw from the one-point density ``K(x, x) / N_p``.

    That density is the uniform mixture of ``|s_k|^2`` over retained degrees;
    for a degree-``k`` monomial the area coordinate is Gamma(k+1) (plane,
    scaled by ``1/(p pi)``) or Beta(k+1, p-k+1) (projective line), and the
    angle is uniform.
    """
    p = basis.p
    k = rng.integers(0, basis.n_points, size=size)
    if basis.model.is_plane:
        r = np.sqrt(rng.gamma(k + 1.0) / (p * math.pi))
    else:
        t = rng.beta(k + 1.0, p - k + 1.0)
        r = np.sqrt(t / (1.0 - t))
    theta = rng.uniform(0.0, 2.0 * math.pi, size=size)
    return r * np.exp(1j * theta)


def hkpv_sample(model: ModelGeometry, p: int, rng, *, max_rejections: int = MAX_CONSECUTIVE_REJECTIONS) -> Configuration:
    """Exact sample of the partial-kernel DPP.

    Each conditional step proposes from ``K(x, x) / N_p`` and accepts with
    probability ``resid(x) / K(x, x) <= 1``; the acceptance rate at step ``i``
    is ``(N_p - i) / N_p``.
    """
    gen, stamp = _as_generator(rng)
    basis = section_basis(model, p)
    state = SamplerState(basis)
    n = basis.n_points
    while state.remaining:
        batch = min(256, 2 * math.ceil(n / state.remaining) + 2)
        rejected = 0
        while True:
            cand = propose(basis, gen, batch)
            u = gen.uniform(size=batch)
            vecs = basis.evaluate(cand)
            diag = np.sum(np.abs(vecs) ** 2, axis=-1)
            resid = state.residual(vecs)
            with np.errstate(invalid="ignore", divide="ignore"):
                ok = np.nonzero(u * diag < resid)[0]
            if ok.size:
                j = ok[0]
                state.accept(complex(cand[j]), vecs[j])
                break
            rejected += batch
            if rejected > max_rejections:
                raise SamplerStallError(
                    f"{rejected} consecutive rejections at step {len(state.points)} of {n} (p={p})")
    log_density = state.log_det - float(gammaln(n + 1))
    return Configuration(np.array(state.points), log_density, stamp)


def sample_points(model: ModelGeometry, p: int, seed: int, stream: int) -> np.ndarray:
    """Points of ``hkpv_sample`` for one stream (picklable entry point for workers)."""
    return hkpv_sample(model, p, RngStream(seed, stream)).points


def slater_log_density(model: ModelGeometry, p: int, points) -> float:
    """Log of ``|det s_j(x_i)|^2 / N_p!`` against ``dv_X^{N_p}``.

    Rows and columns of the evaluation matrix are rescaled in the log domain
    before the determinant so that large ``p`` does not underflow.  Coincident
    points give ``-inf``.
    """
    z = np.asarray(points, dtype=complex).ravel()
    basis = section_basis(model, p)
    n = basis.n_points
    if z.size != n:
        raise ValueError(f"need exactly N_p = {n} points, got {z.size}")
    if np.unique(z).size < n:
        return -math.inf
    k = basis.degrees
    r = np.abs(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        logr = np.log(r)
        logmag = 0.5 * basis.log_c2[None, :] + k[None, :] * logr[:, None]
    logmag[:, 0] = 0.5 * basis.log_c2[0]
    logmag = logmag + log_fiber_weight(model, p, z)[:, None]
    row = np.max(logmag, axis=1, keepdims=True)
    col = np.max(logmag - row, axis=0, keepdims=True)
    scaled = np.exp(logmag - row - col) * np.exp(1j * k[None, :] * np.angle(z)[:, None])
    sign, logabs = np.linalg.slogdet(scaled)
    if sign == 0:
        return -math.inf
    return float(2.0 * (logabs + row.sum() + col.sum()) - gammaln(n + 1))


def rho1(model: ModelGeometry, p: int, z):
    """One-point correlation function (the partial kernel diagonal)."""
    return partial_kernel_diag(model, p, z)


def rho2(model: ModelGeometry, p: int, z, w):
    """Two-point correlation ``K(x,x) K(y,y) - |K(x,y)|^2``."""
    return (partial_kernel_diag(model, p, z) * partial_kernel_diag(model, p, w)
            - np.abs(partial_kernel(model, p, z, w)) ** 2)


def expected_count_within(model: ModelGeometry, p: int, radius: float) -> float:
    """Expected number of points in the chart disk ``|z| <= radius``.

    Integrates ``rho1`` degree by degree: each ``|s_k|^2`` is a Gamma
    (plane) or Beta (projective line) law in the area coordinate.
    """
    k = section_basis(model, p).degrees.astype(float)
    r2 = float(radius) ** 2
    if model.is_plane:
        return float(np.sum(gammainc(k + 1.0, p * math.pi * r2)))
    if math.isinf(r2):
        return float(k.size)
    return float(np.sum(betainc(k + 1.0, p - k + 1.0, r2 / (1.0 + r2))))


def kostlan_radii_sample(p: int, rng, model: ModelGeometry | None = None) -> np.ndarray:
    """Moduli of a Plane configuration, sampled independently.

    For the Ginibre-type process the set of ``p pi |z|^2`` has the law of
    independent Gamma(k, 1) variables, ``k = 1 .. p + 1``.  Valid only for
    statistics of the moduli.  ``p = 0`` is the rank-one case with
    ``pi r^2 ~ Gamma(1, 1)``.
    """
    if model is not None and not model.is_plane:
        raise ValueError("Kostlan sampling is only valid for the plane model")
    gen, _ = _as_generator(rng)
    k = np.arange(1, p + 2, dtype=float)
    scale = p * math.pi if p >= 1 else math.pi
    return np.sqrt(gen.gamma(k) / scale)
