"""Command-line entry point: gen-data, train, reconstruct, sweep.

Every option can come from the command line, from a ``key = value`` config
file (``--config``), or from the built-in default, in that order of
precedence. Each run writes a manifest recording the resolved value and
origin of every option plus any derived seeds, which is enough to
reproduce the outputs byte for byte.

Exit codes: 0 success, 2 usage error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .evaluate import METHODS, make_mask_for, psnr, run_sweep, write_report
from .evaluate import error_map
from .fileio import read_model, write_complex_image, write_manifest, write_mask
from .fileio import write_model, write_pgm
from .forward_model import NoiseSpec, add_measurement_noise, forward
from .forward_model import simulate_coil_maps
from .phantom import load_phantom, shepp_logan, synthetic_phantom
from .reconstruct import ReconConfig, pnp_reconstruct, zero_filled
from .synthdata import DatasetConfig, MagnitudeSource, build_dataset
from .synthdata import load_training_arrays, source_from_dir
from .training import TrainConfig, train_denoiser
from .denoiser import init_model


class UsageError(Exception):
    """Bad flags or config values; maps to exit code 2."""


def _parse_int(raw: str) -> int:
    return int(raw)


def _parse_positive_int(raw: str) -> int:
    value = int(raw)
    if value < 1:
        raise ValueError(f"must be at least 1, got {value}")
    return value


def _parse_float(raw: str) -> float:
    return float(raw)


def _parse_rate(raw: str) -> float:
    value = float(raw)
    if not 0.0 < value <= 1.0:
        raise ValueError(f"rate must be in (0, 1], got {value}")
    return value


def _parse_snr(raw: str) -> float:
    if raw.strip().lower() in ("inf", "+inf", "infinity"):
        return float("inf")
    value = float(raw)
    if math.isnan(value):
        raise ValueError("snr must not be NaN")
    return value


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _parse_str(raw: str) -> str:
    return raw


def _csv_list(item_parser):
    def parse(raw: str) -> tuple:
        items = [part.strip() for part in raw.split(",") if part.strip()]
        if not items:
            raise ValueError("empty list")
        return tuple(item_parser(item) for item in items)

    return parse


@dataclass(frozen=True)
class Opt:
    name: str
    parse: object
    default: object
    help: str
    required: bool = False
    is_flag: bool = False


GEN_DATA_OPTS = [
    Opt("total", _parse_positive_int, None, "number of line pairs to generate", True),
    Opt("line-length", _parse_positive_int, 320, "samples per line"),
    Opt("snr-min", _parse_float, 5.0, "lower SNR bound in dB"),
    Opt("snr-max", _parse_float, 40.0, "upper SNR bound in dB"),
    Opt("split", _parse_float, 0.9, "training fraction of the split"),
    Opt("seed", _parse_int, 0, "root seed"),
    Opt("source", _parse_str, "procedural", "procedural or dir:PATH of PGM images"),
    Opt("out", _parse_str, None, "output dataset path", True),
]

TRAIN_OPTS = [
    Opt("data", _parse_str, None, "dataset file from gen-data", True),
    Opt("epochs", _parse_positive_int, 200, "training epochs"),
    Opt("batch", _parse_positive_int, 128, "batch size"),
    Opt("lr", _parse_float, 0.001, "initial learning rate"),
    Opt("lr-decay", _parse_float, 0.99, "per-epoch learning rate factor"),
    Opt("seed", _parse_int, 0, "init and shuffle seed"),
    Opt("out", _parse_str, None, "output model path", True),
    Opt("desk-scale", _parse_bool, False, "preset: epochs 30", is_flag=True),
]

RECONSTRUCT_OPTS = [
    Opt("phantom", _parse_str, "shepp", "shepp, synthetic:SEED, or file:PATH"),
    Opt("size", _parse_positive_int, 320, "phantom grid size for generated phantoms"),
    Opt("coils", _parse_positive_int, 8, "number of simulated coils"),
    Opt("pattern", _parse_str, "cartesian1d", "cartesian1d, random2d, or full"),
    Opt("rate", _parse_rate, 0.35, "sampling rate in (0, 1]"),
    Opt("center-fraction", _parse_float, 0.08, "fully sampled center fraction"),
    Opt("snr", _parse_snr, float("inf"), "measurement SNR in dB, inf for noiseless"),
    Opt("denoiser", _parse_str, "identity", "identity or cnn1d"),
    Opt("model", _parse_str, None, "model file for the cnn1d denoiser"),
    Opt("gamma", _parse_float, 1.0, "gradient step size"),
    Opt("iters", _parse_positive_int, 200, "maximum iterations"),
    Opt("tol", _parse_float, 1e-8, "relative-change stopping tolerance"),
    Opt("seed", _parse_int, 0, "root seed for mask and noise"),
    Opt("zero-phase", _parse_bool, False, "drop the synthetic phase", is_flag=True),
    Opt("out-dir", _parse_str, None, "output directory", True),
]

SWEEP_OPTS = [
    Opt("cases", _csv_list(_parse_str), ("shepp", "synthetic:1", "synthetic:2"),
        "comma list: shepp, synthetic:SEED, file:PATH"),
    Opt("patterns", _csv_list(_parse_str), ("cartesian1d", "random2d"),
        "comma list of sampling patterns"),
    Opt("rates", _csv_list(_parse_rate), None,
        "comma list of rates applied to every pattern (default: per-pattern grid)"),
    Opt("methods", _csv_list(_parse_str), METHODS, "comma list of methods"),
    Opt("seeds", _csv_list(_parse_int), (0,), "comma list of sweep seeds"),
    Opt("size", _parse_positive_int, 256, "phantom grid size"),
    Opt("coils", _parse_positive_int, 8, "number of simulated coils"),
    Opt("iters", _parse_positive_int, 200, "maximum iterations per reconstruction"),
    Opt("model", _parse_str, None, "model file for the pnp-cnn1d method"),
    Opt("threads", _parse_positive_int, 1, "worker threads for sweep cells"),
    Opt("out-dir", _parse_str, None, "output directory", True),
]

# Per-pattern default rate grids used when --rates is not given.
DEFAULT_PATTERN_RATES = {
    "cartesian1d": (0.35, 0.40, 0.45, 0.50),
    "random2d": (0.25, 0.30, 0.35, 0.40),
    "full": (1.0,),
}


def _parse_config_file(path) -> dict:
    """Flat ``key = value`` file; # starts a comment, quotes are optional."""
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        if not key:
            raise UsageError(f"{path}:{lineno}: empty key")
        values[key] = value
    return values


def _resolve(args, opts: list[Opt]) -> tuple[dict, dict]:
    """Apply precedence flag > config file > default; track provenance."""
    config_values = {}
    if getattr(args, "config", None):
        config_values = _parse_config_file(args.config)
        known = {o.name for o in opts}
        unknown = sorted(set(config_values) - known)
        if unknown:
            raise UsageError(
                f"unknown config key(s) {', '.join(unknown)}; "
                f"known keys: {', '.join(sorted(known))}"
            )
    values: dict = {}
    provenance: dict = {}
    for opt in opts:
        raw = getattr(args, opt.name.replace("-", "_"))
        if raw is not None:
            source = "flag"
        elif opt.name in config_values:
            raw = config_values[opt.name]
            source = "config"
        else:
            values[opt.name] = opt.default
            provenance[opt.name] = "default"
            continue
        if opt.is_flag and raw is True:
            values[opt.name] = True
        else:
            try:
                values[opt.name] = opt.parse(raw)
            except ValueError as exc:
                raise UsageError(f"--{opt.name}: {exc}") from exc
        provenance[opt.name] = source
    for opt in opts:
        if opt.required and values[opt.name] is None:
            raise UsageError(f"--{opt.name} is required")
    return values, provenance


def _json_safe(value):
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    return value


def _manifest(subcommand: str, values: dict, provenance: dict, extra: dict) -> dict:
    doc = {
        "tool": "pnpmri",
        "version": __version__,
        "subcommand": subcommand,
        "config": _json_safe(values),
        "provenance": provenance,
    }
    doc.update(_json_safe(extra))
    return doc


def _derived_seeds(seed: int, count: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(count)]


def _make_phantom(spec: str, size: int, zero_phase: bool):
    if spec == "shepp":
        return shepp_logan(size, size, zero_phase=zero_phase)
    if spec.startswith("synthetic:"):
        try:
            seed = int(spec.split(":", 1)[1])
        except ValueError as exc:
            raise UsageError(f"bad phantom spec {spec!r}: {exc}") from exc
        return synthetic_phantom(size, size, seed, zero_phase=zero_phase)
    if spec.startswith("file:"):
        return load_phantom(spec.split(":", 1)[1], zero_phase=zero_phase)
    raise UsageError(
        f"unknown phantom {spec!r}; expected shepp, synthetic:SEED, or file:PATH"
    )


def _cmd_gen_data(args) -> int:
    values, provenance = _resolve(args, GEN_DATA_OPTS)
    if values["snr-min"] > values["snr-max"]:
        raise UsageError("--snr-min exceeds --snr-max")
    source_spec = values["source"]
    if source_spec == "procedural":
        side = max(320, values["line-length"])
        source = MagnitudeSource(kind="procedural", height=side, width=side)
    elif source_spec.startswith("dir:"):
        source = source_from_dir(source_spec.split(":", 1)[1])
    else:
        raise UsageError(
            f"unknown source {source_spec!r}; expected procedural or dir:PATH"
        )
    try:
        config = DatasetConfig(
            total=values["total"],
            line_length=values["line-length"],
            snr_min=values["snr-min"],
            snr_max=values["snr-max"],
            train_fraction=values["split"],
            seed=values["seed"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    summary = build_dataset(source, config, values["out"])
    write_manifest(
        values["out"] + ".manifest.json",
        _manifest(
            "gen-data",
            values,
            provenance,
            {
                "result": summary,
                "outputs": {
                    "dataset": values["out"],
                    "split": values["out"] + ".split.json",
                },
            },
        ),
    )
    print(
        f"wrote {summary['total']} records "
        f"({summary['n_train']} train / {summary['n_val']} val) to {values['out']}"
    )
    return 0


def _cmd_train(args) -> int:
    values, provenance = _resolve(args, TRAIN_OPTS)
    if values["desk-scale"] and provenance["epochs"] == "default":
        values["epochs"] = 30
        provenance["epochs"] = "preset"
    try:
        config = TrainConfig(
            epochs=values["epochs"],
            batch_size=values["batch"],
            lr=values["lr"],
            lr_decay=values["lr-decay"],
            seed=values["seed"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    train_noisy, train_clean, val_noisy, val_clean, header = load_training_arrays(
        values["data"]
    )
    model = init_model(seed=values["seed"])
    best, history = train_denoiser(
        model, train_noisy, train_clean, val_noisy, val_clean, config
    )
    write_model(values["out"], best)
    history_path = values["out"] + ".history.csv"
    with open(history_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["epoch", "lr", "train_loss", "val_loss"])
        for row in history:
            writer.writerow(
                [
                    row["epoch"],
                    f"{row['lr']:.17g}",
                    f"{row['train_loss']:.17g}",
                    f"{row['val_loss']:.17g}",
                ]
            )
    write_manifest(
        values["out"] + ".manifest.json",
        _manifest(
            "train",
            values,
            provenance,
            {
                "dataset_header": {
                    k: header.get(k)
                    for k in ("count", "line_length", "snr_min", "snr_max", "seed")
                },
                "result": best.training_meta,
                "outputs": {"model": values["out"], "history": history_path},
            },
        ),
    )
    meta = best.training_meta
    print(
        f"trained {config.epochs} epochs; best epoch {meta['best_epoch']} "
        f"(val loss {meta['best_val_loss']:.6g}); wrote {values['out']}"
    )
    return 0


def _cmd_reconstruct(args) -> int:
    values, provenance = _resolve(args, RECONSTRUCT_OPTS)
    if values["denoiser"] not in ("identity", "cnn1d"):
        raise UsageError(f"unknown denoiser {values['denoiser']!r}")
    if values["denoiser"] == "cnn1d" and values["model"] is None:
        raise UsageError("--model is required with --denoiser cnn1d")
    if values["pattern"] not in ("cartesian1d", "random2d", "full"):
        raise UsageError(f"unknown pattern {values['pattern']!r}")

    phantom = _make_phantom(values["phantom"], values["size"], values["zero-phase"])
    h, w = phantom.image.shape
    mask_seed, noise_seed = _derived_seeds(values["seed"], 2)
    maps = simulate_coil_maps(h, w, values["coils"])
    mask = make_mask_for(
        values["pattern"], h, w, values["rate"], values["center-fraction"], mask_seed
    )
    y = forward(phantom.image, maps, mask)
    y = add_measurement_noise(y, mask, NoiseSpec(values["snr"], noise_seed))

    model = read_model(values["model"]) if values["denoiser"] == "cnn1d" else None
    cfg = ReconConfig(
        gamma=values["gamma"],
        max_iters=values["iters"],
        tol=values["tol"],
        denoiser=values["denoiser"],
        model=model,
    )
    result = pnp_reconstruct(y, maps, mask, cfg)
    baseline = zero_filled(y, maps, mask)

    out_dir = values["out-dir"]
    os.makedirs(out_dir, exist_ok=True)
    ref_mag = np.abs(phantom.image)
    ref_peak = float(ref_mag.max())
    paths = {
        "reference": os.path.join(out_dir, "reference.cimg"),
        "zero_filled": os.path.join(out_dir, "zero_filled.cimg"),
        "recon": os.path.join(out_dir, "recon.cimg"),
        "mask": os.path.join(out_dir, "mask.mask"),
        "telemetry": os.path.join(out_dir, "telemetry.csv"),
    }
    write_complex_image(paths["reference"], phantom.image, meta=phantom.descriptor)
    write_complex_image(
        paths["zero_filled"], baseline, meta={"method": "zero_filled"}
    )
    write_complex_image(
        paths["recon"],
        result.image,
        meta={
            "method": f"pnp-{values['denoiser']}",
            "iters_run": result.iters_run,
            "stop_reason": result.stop_reason,
        },
    )
    write_mask(paths["mask"], mask)
    write_pgm(os.path.join(out_dir, "reference.pgm"), ref_mag)
    write_pgm(
        os.path.join(out_dir, "zero_filled.pgm"), np.abs(baseline), peak=ref_peak
    )
    write_pgm(os.path.join(out_dir, "recon.pgm"), np.abs(result.image), peak=ref_peak)
    write_pgm(
        os.path.join(out_dir, "recon_error.pgm"),
        error_map(phantom.image, result.image),
        peak=ref_peak,
    )
    with open(paths["telemetry"], "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["iter", "residual", "relative_change"])
        for k, res, change in result.residual_history:
            writer.writerow([k, f"{res:.17g}", f"{change:.17g}"])

    psnr_zf = psnr(phantom.image, baseline)
    psnr_recon = psnr(phantom.image, result.image)
    write_manifest(
        os.path.join(out_dir, "manifest.json"),
        _manifest(
            "reconstruct",
            values,
            provenance,
            {
                "derived_seeds": {"mask": mask_seed, "noise": noise_seed},
                "phantom": phantom.descriptor,
                "achieved_rate": mask.achieved_rate,
                "result": {
                    "iters_run": result.iters_run,
                    "stop_reason": result.stop_reason,
                    "psnr_zero_filled_db": psnr_zf,
                    "psnr_recon_db": psnr_recon,
                },
                "outputs": paths,
            },
        ),
    )
    print(f"zero_filled psnr {psnr_zf:.4f} dB" if math.isfinite(psnr_zf)
          else "zero_filled psnr inf dB")
    print(
        f"pnp-{values['denoiser']} psnr "
        + (f"{psnr_recon:.4f}" if math.isfinite(psnr_recon) else "inf")
        + f" dB after {result.iters_run} iters ({result.stop_reason})"
    )
    return 0


def _cmd_sweep(args) -> int:
    values, provenance = _resolve(args, SWEEP_OPTS)
    methods = values["methods"]
    for method in methods:
        if method not in METHODS:
            raise UsageError(f"unknown method {method!r}; expected {METHODS}")
    if "pnp-cnn1d" in methods and values["model"] is None:
        raise UsageError("--model is required when methods include pnp-cnn1d")
    for pattern in values["patterns"]:
        if pattern not in DEFAULT_PATTERN_RATES:
            raise UsageError(f"unknown pattern {pattern!r}")

    grid = []
    for pattern in values["patterns"]:
        rates = values["rates"] or DEFAULT_PATTERN_RATES[pattern]
        grid.extend((pattern, rate) for rate in rates)

    cases = []
    used_ids: set[str] = set()
    for spec in values["cases"]:
        ph = _make_phantom(spec, values["size"], zero_phase=False)
        if spec == "shepp":
            case_id = "shepp"
        elif spec.startswith("synthetic:"):
            case_id = "synthetic" + spec.split(":", 1)[1]
        else:
            base = os.path.splitext(os.path.basename(spec.split(":", 1)[1]))[0]
            case_id = base.replace(" ", "_") or "file"
        while case_id in used_ids:
            case_id += "x"
        used_ids.add(case_id)
        cases.append((case_id, ph))

    model = read_model(values["model"]) if values["model"] is not None else None
    out_dir = values["out-dir"]
    os.makedirs(out_dir, exist_ok=True)
    report = run_sweep(
        cases,
        grid=grid,
        methods=methods,
        seeds=values["seeds"],
        coils=values["coils"],
        max_iters=values["iters"],
        model=model,
        threads=values["threads"],
        out_dir=out_dir,
    )
    report_path = os.path.join(out_dir, "report.csv")
    write_report(report, report_path)
    write_manifest(
        os.path.join(out_dir, "manifest.json"),
        _manifest(
            "sweep",
            values,
            provenance,
            {
                "grid": [[p, r] for p, r in grid],
                "cases": [cid for cid, _ in cases],
                "outputs": {"report": report_path},
                "n_rows": len(report.rows),
                "n_errors": sum(1 for r in report.rows if r.get("error")),
            },
        ),
    )
    for agg in report.aggregates:
        mean = agg["mean_psnr"]
        mean_text = f"{mean:.4f}" if math.isfinite(mean) else "inf"
        print(
            f"{agg['pattern']} rate {agg['rate']:.2f} {agg['method']}: "
            f"{mean_text} +- {agg['std_psnr']:.4f} dB (n={agg['n']})"
        )
    failures = [r for r in report.rows if r.get("error")]
    if failures:
        print(f"{len(failures)} cell(s) recorded errors; see report", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pnpmri",
        description="Plug-and-play MRI reconstruction with a synthetically "
        "trained 1D denoiser.",
    )
    parser.add_argument("--version", action="version", version=f"pnpmri {__version__}")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for name, opts, handler, description in (
        ("gen-data", GEN_DATA_OPTS, _cmd_gen_data, "generate paired 1D training data"),
        ("train", TRAIN_OPTS, _cmd_train, "train the 1D CNN denoiser"),
        ("reconstruct", RECONSTRUCT_OPTS, _cmd_reconstruct,
         "reconstruct a phantom from undersampled k-space"),
        ("sweep", SWEEP_OPTS, _cmd_sweep, "run the pattern-by-rate evaluation grid"),
    ):
        sub = subparsers.add_parser(name, help=description, description=description)
        sub.add_argument("--config", default=None, help="key = value config file")
        for opt in opts:
            if opt.is_flag:
                sub.add_argument(
                    "--" + opt.name,
                    action="store_const",
                    const=True,
                    default=None,
                    help=opt.help,
                )
            else:
                sub.add_argument(
                    "--" + opt.name, default=None, metavar="V", help=opt.help
                )
        sub.set_defaults(handler=handler)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        if code is None:
            return 0
        return code if isinstance(code, int) else 2
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure: report and exit 1
        print(f"failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
