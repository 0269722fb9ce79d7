"""Batch experiment execution: one CSV per (kind, p) task plus a flat manifest."""
from __future__ import annotations

import csv
import hashlib
import io
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from scipy import stats
from scipy.optimize import brentq

from . import __version__
from .config import ExperimentConfig, render_config
from .dpp import RNG_ALGORITHM, RngStream, expected_count_within, hkpv_sample, slater_log_density
from .euler_maclaurin import (
    gaussian_halfline_leading,
    gaussian_halfline_sum,
    paired_gaussian_difference,
    paired_gaussian_leading,
)
from .geometry import ModelGeometry, fundamental_field_norm
from .kernels import boundary_point, partial_kernel_diag, partial_profile
from .statistics import (
    determine_boundary_factor,
    deviation_probability,
    make_function,
    mc_run,
)

COLUMNS = {
    "kernel_profile": ["p", "v", "model_value", "exact_value", "abs_error"],
    "em_validation": ["p", "quantity", "v", "k", "lattice_value", "predicted", "abs_error", "tolerance"],
    "lln": ["p", "n_samples", "n_points", "exact_expectation", "limit_expectation",
            "mc_mean", "mc_stderr", "target_fraction", "mean_fraction", "epsilon", "deviation_probability"],
    "clt_variance": ["p", "n_samples", "exact_expectation", "exact_variance", "mc_mean", "mc_variance",
                     "mc_stderr", "limit_bulk", "limit_boundary_f1", "limit_boundary_fhalf",
                     "ks_stat", "ks_threshold"],
    "sampler_diagnostics": ["p", "n_samples", "n_points", "n_bins", "chi2_stat", "chi2_pvalue",
                            "max_log_density_mismatch"],
}
STREAM_BLOCK = 2**32  # streams for power p are p * STREAM_BLOCK + j


class RunFailure(RuntimeError):
    pass


def build_model(cfg: ExperimentConfig) -> ModelGeometry:
    if cfg.model == "plane":
        return ModelGeometry.plane()
    return ModelGeometry.projective_line(cfg.weight_shift)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _csv_bytes(columns, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue().encode()


# ---------------------------------------------------------------------------
# experiment kinds, one task per power


def task_kernel_profile(cfg, model, p):
    xi = float(fundamental_field_norm(model, boundary_point(model, p)))
    s = model.shift(p)
    rows = []
    for v in np.linspace(-3.0, 3.0, 61):
        level = v / math.sqrt(p)
        if model.is_plane:
            r2 = (1.0 + level) / math.pi
        else:
            t = s / p + level
            if not 0.0 < t < 1.0:
                continue
            r2 = t / (1.0 - t)
        exact = float(partial_kernel_diag(model, p, math.sqrt(r2))) / p
        approx = float(np.real(partial_profile(v, xi)))
        rows.append({"p": p, "v": float(v), "model_value": approx, "exact_value": exact,
                     "abs_error": abs(approx - exact)})
    return rows


def task_em_validation(cfg, model, p):
    rows = []
    for v in (-1.0, -0.5, 0.0, 0.5, 1.0):
        lat = gaussian_halfline_sum(v, 1.0, p)
        pred = gaussian_halfline_leading(v, 1.0, p)
        rows.append({"p": p, "quantity": "halfline", "v": v, "k": 0, "lattice_value": lat,
                     "predicted": pred, "abs_error": abs(lat - pred), "tolerance": 1e-2 * abs(pred)})
        for k in range(1, 6):
            lat = paired_gaussian_difference(v, 1.0, p, k)
            pred = paired_gaussian_leading(v, k)
            rows.append({"p": p, "quantity": "paired", "v": v, "k": k, "lattice_value": lat,
                         "predicted": pred, "abs_error": abs(lat - pred),
                         "tolerance": 3.0 * k * k / math.sqrt(p)})
    return rows


def task_lln(cfg, model, p):
    f = make_function(cfg.function, **cfg.function_params)
    rep = mc_run(model, p, f, cfg.n_samples, cfg.seed, stream_offset=p * STREAM_BLOCK,
                 workers=cfg.workers, sampler=cfg.sampler, boundary_factor=cfg.boundary_factor,
                 exact=True)
    n = model.n_points(p)
    target = rep.limit_expectation / n
    return [{"p": p, "n_samples": cfg.n_samples, "n_points": n,
             "exact_expectation": rep.exact_expectation, "limit_expectation": rep.limit_expectation,
             "mc_mean": rep.mc_mean, "mc_stderr": rep.mc_stderr, "target_fraction": target,
             "mean_fraction": rep.mc_mean / n, "epsilon": cfg.epsilon,
             "deviation_probability": deviation_probability(rep.values, n, target, cfg.epsilon)}]


def task_clt_variance(cfg, model, p):
    f = make_function(cfg.function, **cfg.function_params)
    rep = mc_run(model, p, f, cfg.n_samples, cfg.seed, stream_offset=p * STREAM_BLOCK,
                 workers=cfg.workers, sampler=cfg.sampler, boundary_factor=cfg.boundary_factor)
    return [{"p": p, "n_samples": cfg.n_samples, "exact_expectation": rep.exact_expectation,
             "exact_variance": rep.exact_variance, "mc_mean": rep.mc_mean,
             "mc_variance": rep.mc_variance, "mc_stderr": rep.mc_stderr,
             "limit_bulk": rep.limit_variance_bulk, "limit_boundary_f1": rep.h_half,
             "limit_boundary_fhalf": 0.5 * rep.h_half, "ks_stat": rep.ks_statistic,
             "ks_threshold": rep.ks_threshold}]


def radial_bins(model: ModelGeometry, p: int, n_bins: int = 20) -> np.ndarray:
    """Radii splitting the expected point count into ``n_bins`` equal parts."""
    n = model.n_points(p)
    edges = [0.0]
    hi = 1.0
    while expected_count_within(model, p, hi) < n * (1 - 1e-9 / n) and hi < 1e8:
        hi *= 2.0
    for j in range(1, n_bins):
        target = n * j / n_bins
        edges.append(brentq(lambda r: expected_count_within(model, p, r) - target, 0.0, hi, xtol=1e-14))
    edges.append(math.inf)
    return np.array(edges)


def radial_chi_square(model: ModelGeometry, p: int, points_list, n_bins: int = 20):
    """Pooled chi-square of point radii against the exact one-point density."""
    edges = radial_bins(model, p, n_bins)
    radii = np.abs(np.concatenate([np.asarray(x) for x in points_list]))
    counts, _ = np.histogram(radii, bins=edges)
    expected = np.full(n_bins, radii.size / n_bins)
    stat = float(np.sum((counts - expected) ** 2 / expected))
    return stat, float(stats.chi2.sf(stat, n_bins - 1))


def task_sampler_diagnostics(cfg, model, p):
    configs = [hkpv_sample(model, p, RngStream(cfg.seed, p * STREAM_BLOCK + j)) for j in range(cfg.n_samples)]
    n = model.n_points(p)
    if any(len(c) != n for c in configs):
        raise RunFailure("configuration of the wrong size")
    stat, pval = radial_chi_square(model, p, [c.points for c in configs])
    mismatch = max(abs(c.log_density - slater_log_density(model, p, c.points)) for c in configs)
    return [{"p": p, "n_samples": cfg.n_samples, "n_points": n, "n_bins": 20, "chi2_stat": stat,
             "chi2_pvalue": pval, "max_log_density_mismatch": mismatch}]


TASKS = {
    "kernel_profile": task_kernel_profile,
    "em_validation": task_em_validation,
    "lln": task_lln,
    "clt_variance": task_clt_variance,
    "sampler_diagnostics": task_sampler_diagnostics,
}


# ---------------------------------------------------------------------------


def _measured_factor(cfg, model):
    """Winning boundary factor from extrapolated exact variances, or ``none``."""
    if len(cfg.p_list) < 3:
        return "not_measured"
    f = make_function(cfg.function, **cfg.function_params)
    if f.is_radial:
        return "not_applicable"
    res = determine_boundary_factor(f, cfg.p_list, model=model)
    return "none" if res.winner is None else repr(res.winner)


def run(cfg: ExperimentConfig, *, log=print) -> int:
    """Execute every task; returns the process exit status (0 or 2)."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = build_model(cfg)
    written: list[Path] = []
    manifest = {f"config.{line.split(' = ', 1)[0]}": line.split(" = ", 1)[1]
                for line in render_config(cfg).splitlines()}
    manifest["artifact_version"] = __version__
    manifest["rng_algorithm"] = RNG_ALGORITHM
    manifest["boundary_factor"] = repr(cfg.boundary_factor)
    task = TASKS[cfg.kind]

    def timed(p):
        t0 = time.perf_counter()
        rows = task(cfg, model, p)
        return rows, time.perf_counter() - t0

    try:
        # tasks run concurrently; files are written afterwards in p order
        with ThreadPoolExecutor(max_workers=min(len(cfg.p_list), max(1, cfg.workers))) as pool:
            futures = [(p, pool.submit(timed, p)) for p in cfg.p_list]
            for p, fut in futures:
                rows, wall = fut.result()
                name = f"{cfg.kind}_p{p}.csv"
                data = _csv_bytes(COLUMNS[cfg.kind], rows)
                path = out / name
                path.write_bytes(data)
                written.append(path)
                manifest[f"task.{cfg.kind}_p{p}.wall_seconds"] = f"{wall:.3f}"
                manifest[f"file.{name}.sha256"] = hashlib.sha256(data).hexdigest()
                log(f"wrote {path} ({len(rows)} rows, {wall:.2f}s)")
        if cfg.kind == "clt_variance":
            manifest["boundary_factor_measured"] = _measured_factor(cfg, model)
        manifest["status"] = "ok"
        mpath = out / "manifest.txt"
        mpath.write_text("".join(f"{k} = {v}\n" for k, v in manifest.items()))
        log(f"wrote {mpath}")
        return 0
    except Exception as exc:  # any module failure marks partial output
        manifest["status"] = f"failed: {type(exc).__name__}: {exc}"
        mpath = out / "manifest.txt"
        mpath.write_text("".join(f"{k} = {v}\n" for k, v in manifest.items()))
        written.append(mpath)
        for path in written:
            os.replace(path, path.with_name(path.name + ".failed"))
        log(f"run failed: {type(exc).__name__}: {exc}")
        return 2
