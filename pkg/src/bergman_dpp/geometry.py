"""Model geometries: the Bargmann-Fock plane and the Fubini-Study projective line.

Both models are one complex dimensional, carry the circle action by rotation
``z -> exp(2 pi i t) z`` of the affine chart, and are described entirely in
that chart.  Every function here is vectorized over complex arrays of chart
coordinates.

Plane
    Flat metric, Lebesgue volume, line bundle with unit-frame norm
    ``exp(-p pi |z|^2 / 2)``, moment map ``pi |z|^2 - 1``.
ProjectiveLine
    Fubini-Study metric normalized to total volume one, unit-frame norm
    ``(1 + |z|^2)^(-p/2)``, moment map ``|z|^2 / (1 + |z|^2) - s / p`` where
    ``s`` is the monomial degree carrying weight zero.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln


class Kind(enum.Enum):
    PLANE = "plane"
    PROJECTIVE_LINE = "projective_line"


class GeometryError(ValueError):
    """Invalid model parameters (e.g. a weight shift outside ``0 < s < p``)."""


@dataclass(frozen=True)
class ModelGeometry:
    """A prequantized Kähler model with its circle action.

    Parameters
    ----------
    kind : Kind
    weight_shift : int or None
        ProjectiveLine only.  Degree ``s`` of the weight-zero monomial; when
        ``None`` it defaults to ``p // 2`` at each power ``p``.
    description : str
    """

    kind: Kind
    weight_shift: int | None = None
    description: str = ""

    @classmethod
    def plane(cls) -> "ModelGeometry":
        return cls(Kind.PLANE, None, "Bargmann-Fock plane (Ginibre)")

    @classmethod
    def projective_line(cls, weight_shift: int | None = None) -> "ModelGeometry":
        return cls(Kind.PROJECTIVE_LINE, weight_shift, "Fubini-Study projective line")

    @property
    def is_plane(self) -> bool:
        return self.kind is Kind.PLANE

    def shift(self, p: int) -> int:
        """Degree ``k`` of the weight-zero section at power ``p``.

        Weights are ``m = k - shift``; the retained space uses ``k <= shift``.
        """
        _check_power(p)
        if self.is_plane:
            return p
        s = p // 2 if self.weight_shift is None else self.weight_shift
        # s = 0 is allowed as the degenerate rank-one case.
        if not 0 <= s < p:
            raise GeometryError(f"weight shift must satisfy 0 <= s < p, got s={s}, p={p}")
        return s

    def max_degree(self, p: int) -> int | None:
        """Largest monomial degree of a holomorphic section, ``None`` if unbounded."""
        return None if self.is_plane else p

    def n_points(self, p: int) -> int:
        """Dimension ``N_p`` of the span of nonpositive-weight sections."""
        return self.shift(p) + 1


def _check_power(p: int) -> None:
    if int(p) != p or p < 1:
        raise GeometryError(f"power p must be a positive integer, got {p!r}")


def moment_map(model: ModelGeometry, z, p: int | None = None):
    """Kostant moment map.  ``p`` is only needed on the projective line."""
    r2 = np.abs(z) ** 2
    if model.is_plane:
        return np.pi * r2 - 1.0
    if p is None:
        raise GeometryError("projective line moment map needs the power p")
    return r2 / (1.0 + r2) - model.shift(p) / p


def fundamental_field_norm(model: ModelGeometry, z):
    """Riemannian length of the generator of the circle action at ``z``."""
    r = np.abs(z)
    if model.is_plane:
        return 2.0 * np.pi * r
    return 2.0 * np.sqrt(np.pi) * r / (1.0 + r * r)


def rotate(model: ModelGeometry, z, t):
    """Flow of the circle action for time ``t`` (period one)."""
    return np.asarray(z) * np.exp(2j * np.pi * np.asarray(t))


def volume_density(model: ModelGeometry, z):
    """Density of the Riemannian volume against chart Lebesgue measure."""
    r2 = np.abs(z) ** 2
    if model.is_plane:
        return np.ones_like(r2, dtype=float)
    return 1.0 / (np.pi * (1.0 + r2) ** 2)


def log_fiber_weight(model: ModelGeometry, p: int, z):
    r2 = np.abs(z) ** 2
    if model.is_plane:
        return -0.5 * p * np.pi * r2
    return -0.5 * p * np.log1p(r2)


def fiber_weight(model: ModelGeometry, p: int, z):
    """Pointwise norm of the unit holomorphic frame of ``L^p``."""
    _check_power(p)
    return np.exp(log_fiber_weight(model, p, z))


@dataclass(frozen=True)
class SectionBasis:
    """Orthonormal monomial sections ``c_k z^k`` (times the unit frame).

    Attributes
    ----------
    p : int
    shift : int
        Degree of weight zero; ``weight(k) = k - shift``.
    log_c2 : ndarray
        ``log c_k^2`` for ``k = 0 .. shift`` (the retained, nonpositive weights).
    """

    model: ModelGeometry
    p: int
    shift: int
    log_c2: np.ndarray

    @property
    def n_points(self) -> int:
        return self.shift + 1

    @property
    def degrees(self) -> np.ndarray:
        return np.arange(self.shift + 1)

    @property
    def weights(self) -> np.ndarray:
        return self.degrees - self.shift

    @property
    def c2(self) -> np.ndarray:
        return np.exp(self.log_c2)

    def weight_of_degree(self, k):
        return np.asarray(k) - self.shift

    def evaluate(self, z) -> np.ndarray:
        """Section values ``s_k(z)`` in the unit frame, shape ``z.shape + (N_p,)``."""
        z = np.asarray(z, dtype=complex)
        k = self.degrees
        r = np.abs(z)[..., None]
        with np.errstate(divide="ignore", invalid="ignore"):
            logmag = 0.5 * self.log_c2 + k * np.log(r) + log_fiber_weight(self.model, self.p, z)[..., None]
        # 0**0 = 1 at the origin.
        logmag = np.where((r == 0) & (k == 0), 0.5 * self.log_c2[0] + log_fiber_weight(self.model, self.p, z)[..., None], logmag)
        phase = np.exp(1j * k * np.angle(z)[..., None])
        return np.exp(logmag) * phase


def log_c2(model: ModelGeometry, p: int, degrees) -> np.ndarray:
    """Log of the squared normalization of ``z^k`` for the given degrees."""
    k = np.asarray(degrees, dtype=float)
    if model.is_plane:
        return np.log(p) + k * np.log(p * np.pi) - gammaln(k + 1)
    return np.log(p + 1) + gammaln(p + 1) - gammaln(k + 1) - gammaln(p - k + 1)


def section_basis(model: ModelGeometry, p: int) -> SectionBasis:
    """Orthonormal basis of the nonpositive-weight holomorphic sections."""
    s = model.shift(p)
    return SectionBasis(model, p, s, log_c2(model, p, np.arange(s + 1)))
