"""PSNR scoring, error maps, and the pattern-by-rate experiment sweep.

PSNR is computed on magnitude images with the reference maximum as peak, so
it is invariant to global phase and to rescaling both images together. The
sweep runs every (case, pattern, rate, seed) cell once, scores each
requested method on it, and aggregates mean and standard deviation per
(pattern, rate, method) over the per-case rows.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .fileio import write_pgm, write_report_csv
from .forward_model import NoiseSpec, add_measurement_noise, simulate_coil_maps
from .forward_model import forward
from .phantom import Phantom
from .reconstruct import ReconConfig, pnp_reconstruct, zero_filled
from .sampling import make_cartesian1d_mask, make_full_mask, make_random2d_mask

METHODS = ("zero_filled", "pnp-identity", "pnp-cnn1d")

# Column order of the sweep report CSV; per-case and aggregate rows share
# the header, with fields that do not apply left empty.
REPORT_FIELDS = [
    "is_aggregate",
    "case_id",
    "pattern",
    "rate",
    "method",
    "seed",
    "psnr_db",
    "iters",
    "mean_psnr",
    "std_psnr",
    "n",
    "error",
]

DEFAULT_GRID = (
    ("cartesian1d", 0.35),
    ("cartesian1d", 0.40),
    ("cartesian1d", 0.45),
    ("cartesian1d", 0.50),
    ("random2d", 0.25),
    ("random2d", 0.30),
    ("random2d", 0.35),
    ("random2d", 0.40),
)


@dataclass(frozen=True)
class EvalReport:
    """Per-case rows plus aggregate rows, both as plain dicts."""

    rows: tuple
    aggregates: tuple


def psnr(ref: np.ndarray, test: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB between magnitude images.

    peak is max |ref|; identical magnitudes give +inf.
    """
    ref = np.asarray(ref)
    test = np.asarray(test)
    if ref.shape != test.shape:
        raise ValueError(f"shape mismatch: {ref.shape} vs {test.shape}")
    ref_mag = np.abs(ref)
    peak = float(ref_mag.max())
    if peak == 0.0:
        raise ValueError("reference image is identically zero")
    mse = float(np.mean((ref_mag - np.abs(test)) ** 2))
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(peak**2 / mse))


def error_map(ref: np.ndarray, test: np.ndarray) -> np.ndarray:
    """Pixelwise absolute magnitude difference."""
    ref = np.asarray(ref)
    test = np.asarray(test)
    if ref.shape != test.shape:
        raise ValueError(f"shape mismatch: {ref.shape} vs {test.shape}")
    return np.abs(np.abs(ref) - np.abs(test))


def make_mask_for(
    pattern: str, h: int, w: int, rate: float, center_fraction: float, seed: int
):
    if pattern == "cartesian1d":
        return make_cartesian1d_mask(h, w, rate, center_fraction, seed)
    if pattern == "random2d":
        return make_random2d_mask(h, w, rate, center_fraction, seed)
    if pattern == "full":
        return make_full_mask(h, w)
    raise ValueError(f"unknown sampling pattern {pattern!r}")


def _cell_rows(
    case_idx: int,
    case_id: str,
    phantom: Phantom,
    cell_idx: int,
    pattern: str,
    rate: float,
    seed: int,
    methods,
    maps,
    center_fraction: float,
    snr_db: float,
    gamma: float,
    max_iters: int,
    tol: float,
    model,
    out_dir,
) -> list[dict]:
    base = {
        "is_aggregate": False,
        "case_id": case_id,
        "pattern": pattern,
        "rate": rate,
        "seed": seed,
    }
    try:
        h, w = phantom.image.shape
        streams = np.random.SeedSequence([seed, case_idx, cell_idx]).generate_state(2)
        mask = make_mask_for(pattern, h, w, rate, center_fraction, int(streams[0]))
        y = forward(phantom.image, maps, mask)
        y = add_measurement_noise(y, mask, NoiseSpec(snr_db, int(streams[1])))
    except Exception as exc:  # cell setup failed: every method row records it
        return [dict(base, method=m, error=str(exc)) for m in methods]

    rows = []
    ref_peak = float(np.abs(phantom.image).max())
    for method in methods:
        row = dict(base, method=method)
        try:
            if method == "zero_filled":
                image = zero_filled(y, maps, mask)
                row["iters"] = 0
            else:
                kind = "identity" if method == "pnp-identity" else "cnn1d"
                cfg = ReconConfig(
                    gamma=gamma,
                    max_iters=max_iters,
                    tol=tol,
                    denoiser=kind,
                    model=model if kind == "cnn1d" else None,
                )
                result = pnp_reconstruct(y, maps, mask, cfg)
                image = result.image
                row["iters"] = result.iters_run
            row["psnr_db"] = psnr(phantom.image, image)
            if out_dir is not None:
                stem = f"{case_id}_{pattern}_r{rate:.2f}_s{seed}_{method}"
                write_pgm(
                    os.path.join(out_dir, stem + ".pgm"),
                    np.abs(image),
                    peak=ref_peak,
                )
                write_pgm(
                    os.path.join(out_dir, stem + "_error.pgm"),
                    error_map(phantom.image, image),
                    peak=ref_peak,
                )
        except Exception as exc:
            row["error"] = str(exc)
        rows.append(row)
    return rows


def aggregate_rows(rows) -> list[dict]:
    """Mean/std PSNR per (pattern, rate, method) over scored rows, in the
    order the groups first appear."""
    groups: dict[tuple, list[float]] = {}
    order = []
    for row in rows:
        if row.get("psnr_db") is None:
            continue
        key = (row["pattern"], row["rate"], row["method"])
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row["psnr_db"])
    aggregates = []
    for key in order:
        values = np.asarray(groups[key], dtype=np.float64)
        aggregates.append(
            {
                "is_aggregate": True,
                "pattern": key[0],
                "rate": key[1],
                "method": key[2],
                "mean_psnr": float(values.mean()),
                "std_psnr": float(values.std()),
                "n": int(values.size),
            }
        )
    return aggregates


def run_sweep(
    cases,
    grid=DEFAULT_GRID,
    methods=METHODS,
    seeds=(0,),
    coils: int = 8,
    center_fraction: float = 0.08,
    snr_db: float = float("inf"),
    gamma: float = 1.0,
    max_iters: int = 200,
    tol: float = 1e-8,
    model=None,
    threads: int = 1,
    out_dir=None,
) -> EvalReport:
    """Reconstruct and score every (case, pattern-rate, seed, method) cell.

    ``cases`` is a list of (case_id, Phantom) pairs. A failed cell or
    method records its error in the row instead of aborting the sweep.
    Results are deterministic for fixed seeds regardless of ``threads``.
    """
    cases = list(cases)
    grid = list(grid)
    methods = list(methods)
    seeds = list(seeds)
    if not cases or not grid or not methods or not seeds:
        raise ValueError("cases, grid, methods, and seeds must all be non-empty")
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}, expected one of {METHODS}")
    if "pnp-cnn1d" in methods and model is None:
        raise ValueError("pnp-cnn1d method needs a model")

    maps_cache: dict[tuple, np.ndarray] = {}
    for _, ph in cases:
        shape = ph.image.shape
        if shape not in maps_cache:
            maps_cache[shape] = simulate_coil_maps(*shape, coils)

    jobs = []
    for case_idx, (case_id, ph) in enumerate(cases):
        for cell_idx, (pattern, rate) in enumerate(grid):
            for seed in seeds:
                jobs.append(
                    (
                        case_idx,
                        case_id,
                        ph,
                        cell_idx,
                        pattern,
                        rate,
                        seed,
                        methods,
                        maps_cache[ph.image.shape],
                        center_fraction,
                        snr_db,
                        gamma,
                        max_iters,
                        tol,
                        model,
                        out_dir,
                    )
                )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_job = list(pool.map(lambda args: _cell_rows(*args), jobs))
    else:
        per_job = [_cell_rows(*args) for args in jobs]

    rows = [row for job_rows in per_job for row in job_rows]
    return EvalReport(rows=tuple(rows), aggregates=tuple(aggregate_rows(rows)))


def write_report(report: EvalReport, path) -> None:
    """Single CSV holding per-case rows followed by aggregate rows."""
    write_report_csv(path, REPORT_FIELDS, list(report.rows) + list(report.aggregates))
