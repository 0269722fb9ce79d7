"""Flat ``key = value`` experiment configuration: parsing, validation, rendering."""
from __future__ import annotations

import re
from dataclasses import dataclass, field, fields

KINDS = ("kernel_profile", "em_validation", "lln", "clt_variance", "sampler_diagnostics")
MC_KINDS = ("lln", "clt_variance", "sampler_diagnostics")
MODELS = ("plane", "projective_line")
SAMPLERS = ("hkpv", "kostlan")
FUNCTIONS = ("radial_bump", "angular_mode", "gaussian_bump", "constant_capped")
SEED_LIMIT = 2**64

_FUNC_RE = re.compile(r"^([A-Za-z_]\w*)\s*(?:\((.*)\))?$")


class ConfigError(ValueError):
    """All problems found in a configuration, each prefixed by its line number."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    p_list: list
    model: str = "plane"
    weight_shift: int | None = None
    function: str = "radial_bump"
    function_params: dict = field(default_factory=lambda: {"a": 0.2, "b": 0.45})
    n_samples: int = 200
    boundary_factor: float = 1.0
    epsilon: float = 0.05
    sampler: str = "hkpv"
    workers: int = 1
    n_radial: int | None = None
    n_angular: int | None = None
    output_dir: str = "results"


def _number(text: str):
    for cast in (int, float, complex):
        try:
            return cast(text)
        except ValueError:
            continue
    raise ValueError(f"not a number: {text!r}")


def parse_function(text: str):
    """``name`` or ``name(key=value, ...)`` with numeric values."""
    m = _FUNC_RE.match(text.strip())
    if not m:
        raise ValueError(f"malformed function spec {text!r}")
    name, args = m.group(1), m.group(2)
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}; choose from {', '.join(FUNCTIONS)}")
    params = {}
    if args and args.strip():
        for item in args.split(","):
            key, sep, val = item.partition("=")
            key = key.strip()
            if not sep or not key.isidentifier():
                raise ValueError(f"malformed function argument {item.strip()!r}")
            if key in params:
                raise ValueError(f"duplicate function argument {key!r}")
            params[key] = _number(val.strip())
    return name, params


def _format_number(x) -> str:
    if isinstance(x, complex):
        return repr(x).strip("()")
    return repr(x)


def render_function(name: str, params: dict) -> str:
    if not params:
        return name
    return f"{name}(" + ", ".join(f"{k}={_format_number(v)}" for k, v in params.items()) + ")"


def _int(text):
    return int(text.strip())


def _float(text):
    x = float(text.strip())
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError("must be finite")
    return x


def _int_list(text):
    items = [s.strip() for s in text.split(",")]
    if not items or any(not s for s in items):
        raise ValueError("expected a comma-separated list of integers")
    return [int(s) for s in items]


def _choice(options):
    def parse(text):
        text = text.strip()
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    return parse


def _optional_int(text):
    text = text.strip()
    return None if text.lower() in ("", "none") else int(text)


def _string(text):
    text = text.strip()
    if not text:
        raise ValueError("must not be empty")
    return text


PARSERS = {
    "kind": _choice(KINDS),
    "seed": _int,
    "p_list": _int_list,
    "model": _choice(MODELS),
    "weight_shift": _optional_int,
    "function": parse_function,
    "n_samples": _int,
    "boundary_factor": _float,
    "epsilon": _float,
    "sampler": _choice(SAMPLERS),
    "workers": _int,
    "n_radial": _optional_int,
    "n_angular": _optional_int,
    "output_dir": _string,
}
REQUIRED = ("kind", "seed", "p_list")


def _validate(values: dict, lines: dict) -> list[str]:
    errs = []

    def err(key, msg):
        errs.append(f"line {lines.get(key, 0)}: {key}: {msg}")

    p_list = values.get("p_list")
    if p_list is not None:
        if any(p < 1 for p in p_list):
            err("p_list", "powers must be positive")
        if any(b <= a for a, b in zip(p_list, p_list[1:])):
            err("p_list", "p_list must be ascending")
    seed = values.get("seed")
    if seed is not None and not 0 <= seed < SEED_LIMIT:
        err("seed", "seed must be a 64-bit unsigned integer")
    kind = values.get("kind")
    n = values.get("n_samples", 200)
    if kind in MC_KINDS and n < 2:
        err("n_samples", "n_samples must be >= 2 for Monte Carlo experiments")
    if n < 1:
        err("n_samples", "n_samples must be positive")
    if values.get("boundary_factor", 1.0) <= 0:
        err("boundary_factor", "must be positive")
    if values.get("epsilon", 0.05) <= 0:
        err("epsilon", "must be positive")
    if values.get("workers", 1) < 1:
        err("workers", "must be >= 1")
    nr = values.get("n_radial")
    if nr is not None and nr < 16:
        err("n_radial", "must be >= 16")
    na = values.get("n_angular")
    if na is not None and (na < 8 or na % 2):
        err("n_angular", "must be even and >= 8")
    model = values.get("model", "plane")
    shift = values.get("weight_shift")
    if model == "plane" and shift is not None:
        err("weight_shift", "only meaningful for the projective_line model")
    if model == "projective_line" and p_list:
        if shift is None and any(p % 2 for p in p_list):
            err("p_list", "projective_line with the default shift p/2 needs even powers")
        if shift is not None and (shift < 0 or any(shift >= p for p in p_list)):
            err("weight_shift", "must satisfy 0 <= weight_shift < p for every p")
    if values.get("sampler") == "kostlan" and model != "plane":
        err("sampler", "kostlan sampling needs the plane model")
    fn = values.get("function")
    if fn is not None:
        from .statistics import make_function
        try:
            make_function(fn[0], **fn[1])
        except (TypeError, ValueError) as exc:
            err("function", str(exc))
    return errs


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate; raises :class:`ConfigError` listing every problem."""
    values, lines, errs, seen = {}, {}, [], set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip()
        if not sep:
            errs.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        if key not in PARSERS:
            errs.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in seen:
            errs.append(f"line {lineno}: duplicate key {key!r}")
            continue
        seen.add(key)
        try:
            values[key] = PARSERS[key](val)
            lines[key] = lineno
        except (ValueError, TypeError, OverflowError) as exc:
            errs.append(f"line {lineno}: {key}: {exc}")
    for key in REQUIRED:
        if key not in seen:
            errs.append(f"line 0: missing required key {key!r}")
    errs.extend(_validate(values, lines))
    if errs:
        raise ConfigError(errs)
    if "function" in values:
        values["function"], values["function_params"] = values["function"]
    return ExperimentConfig(**values)


def render_config(cfg: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config`."""
    out = []
    for f in fields(cfg):
        if f.name == "function_params":
            continue
        val = getattr(cfg, f.name)
        if f.name == "function":
            val = render_function(cfg.function, cfg.function_params)
        elif f.name == "p_list":
            val = ", ".join(str(p) for p in val)
        elif val is None:
            val = "none"
        elif isinstance(val, float):
            val = repr(val)
        out.append(f"{f.name} = {val}")
    return "\n".join(out) + "\n"
