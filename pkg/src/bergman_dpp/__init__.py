"""Partial Bergman kernels of circle-invariant models and their determinantal point processes."""

__version__ = "0.1.0"

from .geometry import GeometryError, Kind, ModelGeometry, moment_map, section_basis  # noqa: E402
from .dpp import Configuration, RngStream, SamplerStallError, hkpv_sample, slater_log_density  # noqa: E402

__all__ = [
    "Configuration",
    "GeometryError",
    "Kind",
    "ModelGeometry",
    "RngStream",
    "SamplerStallError",
    "__version__",
    "hkpv_sample",
    "moment_map",
    "section_basis",
    "slater_log_density",
]
