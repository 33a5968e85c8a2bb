"""Acceptance checks for the whole pipeline, one test per criterion.

Each test prints a single [ACCEPTANCE] PASS/FAIL line through the capture
so the run log always shows the verdict and the measured numbers. The
heavyweight desk-scale artifacts (dataset and trained model) come from the
session fixtures in conftest.py and are shared between criteria.
"""

import json
import os
import time

import numpy as np
import numpy.testing as npt

from pnpmri.cli import main as cli_main
from pnpmri.core import inner_product, l2_norm, make_rng
from pnpmri.denoiser import denoise_batch, init_model
from pnpmri.evaluate import DEFAULT_GRID, METHODS, make_mask_for, psnr, run_sweep
from pnpmri.fileio import (
    read_complex_image,
    read_dataset,
    read_mask,
    read_model,
    read_pgm,
    write_complex_image,
    write_dataset,
    write_mask,
    write_model,
    write_pgm,
)
from pnpmri.forward_model import (
    NoiseSpec,
    add_measurement_noise,
    adjoint,
    estimate_op_norm,
    forward,
    simulate_coil_maps,
)
from pnpmri.fourier import fft2c
from pnpmri.phantom import shepp_logan, synthetic_phantom
from pnpmri.reconstruct import ReconConfig, pnp_reconstruct
from pnpmri.synthdata import (
    DatasetConfig,
    MagnitudeSource,
    build_dataset,
    load_training_arrays,
    make_pair,
)
from pnpmri.training import gradients


def _verdict(capsys, name, ok, detail):
    with capsys.disabled():
        print(f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


def _random_config(rng):
    h = int(rng.integers(16, 65))
    w = int(rng.integers(16, 65))
    coils = int(rng.integers(1, 9))
    pattern = ("cartesian1d", "random2d")[int(rng.integers(2))]
    rate = float(rng.uniform(0.25, 0.5))
    seed = int(rng.integers(0, 2**31))
    mask = make_mask_for(pattern, h, w, rate, 0.08, seed)
    maps = simulate_coil_maps(h, w, coils)
    return maps, mask


def test_adjoint_correctness(capsys):
    rng = make_rng(20260825)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        maps, mask = _random_config(rng)
        coils, h, w = maps.shape
        x = rng.standard_normal((h, w)) + 1j * rng.standard_normal((h, w))
        y = rng.standard_normal((coils, h, w)) + 1j * rng.standard_normal(
            (coils, h, w)
        )
        ax = forward(x, maps, mask)
        aty = adjoint(y, maps, mask)
        gap = abs(inner_product(ax, y) - inner_product(x, aty))
        bound = 1e-10 * (l2_norm(ax) * l2_norm(y))
        worst = max(worst, gap / bound * 1e-10)
        assert gap <= bound
    elapsed = time.perf_counter() - start
    ok = elapsed < 10.0
    _verdict(
        capsys,
        "adjoint-correctness",
        ok,
        f"100 configs, worst relative gap {worst:.2e} <= 1e-10, {elapsed:.1f}s",
    )


def _dft2c_bruteforce(x):
    h, w = x.shape
    ch, cw = h // 2, w // 2
    out = np.zeros((h, w), dtype=np.complex128)
    for ky in range(h):
        for kx in range(w):
            acc = 0.0 + 0.0j
            for jy in range(h):
                for jx in range(w):
                    phase = -2j * np.pi * (
                        (ky - ch) * (jy - ch) / h + (kx - cw) * (jx - cw) / w
                    )
                    acc += x[jy, jx] * np.exp(phase)
            out[ky, kx] = acc / np.sqrt(h * w)
    return out


def test_unitarity_and_parseval(capsys):
    rng = make_rng(77)
    worst = 0.0
    for _ in range(1000):
        h = int(rng.integers(2, 33))
        w = int(rng.integers(2, 33))
        x = rng.standard_normal((h, w)) + 1j * rng.standard_normal((h, w))
        drift = abs(l2_norm(fft2c(x)) - l2_norm(x)) / l2_norm(x)
        worst = max(worst, drift)
        assert drift <= 1e-12

    worst_dft = 0.0
    for h, w in ((2, 2), (3, 3), (4, 5), (5, 4), (7, 8), (8, 8)):
        x = rng.standard_normal((h, w)) + 1j * rng.standard_normal((h, w))
        gap = float(np.max(np.abs(fft2c(x) - _dft2c_bruteforce(x))))
        worst_dft = max(worst_dft, gap)
        assert gap <= 1e-10
    _verdict(
        capsys,
        "unitarity-parseval",
        True,
        f"1000 inputs, worst norm drift {worst:.2e} <= 1e-12; "
        f"brute DFT gap {worst_dft:.2e} <= 1e-10",
    )


def test_one_step_exact_recovery(capsys):
    mask = make_mask_for("full", 64, 64, 1.0, 0.08, 0)
    maps = simulate_coil_maps(64, 64, 1)
    config = ReconConfig(gamma=1.0, max_iters=10, tol=1e-8, denoiser="identity")

    flat = np.full((64, 64), 0.7 - 0.2j)
    result = pnp_reconstruct(forward(flat, maps, mask), maps, mask, config)
    flat_psnr = psnr(flat, result.image)
    assert result.iters_run == 2
    assert result.stop_reason == "tolerance"
    assert flat_psnr == float("inf")

    shepp = shepp_logan(32, 32)
    mask32 = make_mask_for("full", 32, 32, 1.0, 0.08, 0)
    maps32 = simulate_coil_maps(32, 32, 1)
    res32 = pnp_reconstruct(forward(shepp.image, maps32, mask32), maps32, mask32, config)
    shepp_psnr = psnr(shepp.image, res32.image)
    assert res32.iters_run == 2
    assert res32.stop_reason == "tolerance"
    assert shepp_psnr > 240.0
    _verdict(
        capsys,
        "one-step-exact-recovery",
        True,
        f"flat phantom PSNR {flat_psnr}, stop at iteration 2 by tolerance; "
        f"shepp PSNR {shepp_psnr:.0f} dB",
    )


def test_spectral_bound(capsys):
    rng = make_rng(4242)
    worst = 0.0
    for _ in range(20):
        maps, mask = _random_config(rng)
        est = estimate_op_norm(maps, mask, iters=30, seed=int(rng.integers(2**31)))
        worst = max(worst, est**2)
        assert est**2 <= 1.0 + 1e-8
    _verdict(
        capsys,
        "spectral-bound",
        True,
        f"20 configs, largest normal-operator estimate {worst:.12f} <= 1 + 1e-8",
    )


def test_gradient_correctness(capsys):
    start = time.perf_counter()
    model = init_model(channels=(2, 8, 2), kernel_size=3, seed=9)
    rng = make_rng(10)
    noisy = rng.standard_normal((6, 24)) + 1j * rng.standard_normal((6, 24))
    clean = rng.standard_normal((6, 24)) + 1j * rng.standard_normal((6, 24))
    _, grads = gradients(model, noisy, clean)

    slots = []
    for li, layer in enumerate(model.layers):
        slots.extend(("w", li, idx) for idx in range(layer.weights.size))
        slots.extend(("b", li, idx) for idx in range(layer.bias.size))
    n_check = max(12, int(np.ceil(0.01 * len(slots))))
    picks = rng.choice(len(slots), size=n_check, replace=False)

    h = 1e-5
    worst = 0.0
    for pick in picks:
        kind, li, idx = slots[int(pick)]
        arr = model.layers[li].weights if kind == "w" else model.layers[li].bias
        flat = arr.reshape(-1)
        keep = flat[idx]
        flat[idx] = keep + h
        up, _ = gradients(model, noisy, clean)
        flat[idx] = keep - h
        down, _ = gradients(model, noisy, clean)
        flat[idx] = keep
        fd = (up - down) / (2 * h)
        grad = (grads[li][0] if kind == "w" else grads[li][1]).reshape(-1)[idx]
        rel = abs(fd - grad) / max(abs(fd), abs(grad), 1e-8)
        worst = max(worst, rel)
        assert rel <= 1e-4
    elapsed = time.perf_counter() - start
    ok = elapsed < 60.0
    _verdict(
        capsys,
        "gradient-correctness",
        ok,
        f"{n_check}/{len(slots)} parameters, worst relative gap {worst:.2e} "
        f"<= 1e-4, {elapsed:.1f}s",
    )


def _aggregate_snr_db(clean, corrupted):
    signal = float(np.sum(np.abs(clean) ** 2))
    noise = float(np.sum(np.abs(corrupted - clean) ** 2))
    return 10.0 * np.log10(signal / noise)


def test_denoiser_efficacy_desk(capsys, desk_dataset, desk_model):
    model = read_model(desk_model["path"])
    _, _, _, val_clean, _ = load_training_arrays(desk_dataset["path"])

    rng = make_rng(12345)
    noisy = np.empty_like(val_clean)
    for i in range(val_clean.shape[0]):
        noisy[i] = make_pair(val_clean[i], 15.0, rng).noisy
    denoised = denoise_batch(model, noisy)

    snr_in = _aggregate_snr_db(val_clean, noisy)
    snr_out = _aggregate_snr_db(val_clean, denoised)
    gain = snr_out - snr_in
    ok = gain >= 3.0
    _verdict(
        capsys,
        "denoiser-efficacy-desk",
        ok,
        f"{val_clean.shape[0]} val lines at 15 dB: {snr_in:.2f} -> {snr_out:.2f} dB, "
        f"gain {gain:.2f} >= 3 dB; training took {desk_model['seconds']:.0f}s",
    )


def test_reconstruction_ordering(capsys, desk_model):
    start = time.perf_counter()
    model = read_model(desk_model["path"])
    cases = [
        ("shepp", shepp_logan(256, 256)),
        ("synthetic_1", synthetic_phantom(256, 256, seed=1)),
        ("synthetic_2", synthetic_phantom(256, 256, seed=2)),
    ]
    report = run_sweep(
        cases,
        methods=METHODS,
        seeds=(0,),
        coils=8,
        max_iters=40,
        model=model,
    )
    cells = {}
    for row in report.rows:
        assert not row.get("error"), row
        key = (row["case_id"], row["pattern"], row["rate"])
        cells.setdefault(key, {})[row["method"]] = row["psnr_db"]
    assert len(cells) == len(cases) * len(DEFAULT_GRID)

    min_margin_zf = float("inf")
    min_margin_id = float("inf")
    for key, scores in sorted(cells.items()):
        margin_zf = scores["pnp-cnn1d"] - scores["zero_filled"]
        margin_id = scores["pnp-cnn1d"] - scores["pnp-identity"]
        min_margin_zf = min(min_margin_zf, margin_zf)
        min_margin_id = min(min_margin_id, margin_id)
        assert margin_zf >= 1.0, (key, scores)
        assert margin_id >= 1.0, (key, scores)
    elapsed = time.perf_counter() - start
    _verdict(
        capsys,
        "reconstruction-ordering",
        True,
        f"{len(cells)} cells: min margin over zero_filled {min_margin_zf:.2f} dB, "
        f"over pnp-identity {min_margin_id:.2f} dB, both >= 1 dB; {elapsed:.0f}s",
    )


def test_monotone_data_consistency(capsys):
    phantom = shepp_logan(64, 64)
    maps = simulate_coil_maps(64, 64, 4)
    worst_increase = 0.0
    for pattern, rate in DEFAULT_GRID:
        mask = make_mask_for(pattern, 64, 64, rate, 0.08, 0)
        y = forward(phantom.image, maps, mask)
        config = ReconConfig(gamma=1.0, max_iters=50, tol=0.0, denoiser="identity")
        result = pnp_reconstruct(y, maps, mask, config)
        residuals = [entry[1] for entry in result.residual_history]
        diffs = np.diff(residuals)
        worst_increase = max(worst_increase, float(diffs.max()))
        assert np.all(diffs <= 1e-12), (pattern, rate)
    _verdict(
        capsys,
        "monotone-data-consistency",
        True,
        f"{len(DEFAULT_GRID)} cells x 50 iterations, worst residual increase "
        f"{worst_increase:.2e} <= 1e-12",
    )


def test_snr_calibration(capsys):
    worst = 0.0
    mask = make_mask_for("full", 1000, 1000, 1.0, 0.08, 0)
    rng = make_rng(55)
    kspace = (
        rng.standard_normal((1, 1000, 1000)) + 1j * rng.standard_normal((1, 1000, 1000))
    )
    for requested in (5.0, 15.0, 40.0):
        noisy = add_measurement_noise(kspace, mask, NoiseSpec(requested, 7))
        measured = _aggregate_snr_db(kspace, noisy)
        worst = max(worst, abs(measured - requested))
        assert abs(measured - requested) <= 0.1

    line = rng.standard_normal(1_000_000) + 1j * rng.standard_normal(1_000_000)
    for requested in (5.0, 15.0, 40.0):
        record = make_pair(line, requested, make_rng(8))
        measured = _aggregate_snr_db(record.clean, record.noisy)
        worst = max(worst, abs(measured - requested))
        assert abs(measured - requested) <= 0.1
    _verdict(
        capsys,
        "snr-calibration",
        True,
        f"measurement and training noise at 5/15/40 dB over 1e6 samples, "
        f"worst offset {worst:.4f} dB <= 0.1 dB",
    )


def test_sweep_determinism(capsys, desk_model, tmp_path):
    args = [
        "sweep",
        "--cases",
        "shepp",
        "--patterns",
        "cartesian1d,random2d",
        "--rates",
        "0.35",
        "--methods",
        "zero_filled,pnp-identity,pnp-cnn1d",
        "--size",
        "64",
        "--coils",
        "4",
        "--iters",
        "20",
        "--seeds",
        "0",
        "--model",
        desk_model["path"],
        "--out-dir",
    ]
    dirs = [tmp_path / "first", tmp_path / "second"]
    for out_dir in dirs:
        assert cli_main(args + [str(out_dir)]) == 0
    capsys.readouterr()

    names = sorted(os.listdir(dirs[0]))
    assert names == sorted(os.listdir(dirs[1]))
    compared = 0
    for name in names:
        if name == "manifest.json":
            continue  # stores the differing --out-dir value
        with open(dirs[0] / name, "rb") as fa, open(dirs[1] / name, "rb") as fb:
            assert fa.read() == fb.read(), name
        compared += 1
    assert "report.csv" in names
    assert any(name.endswith(".pgm") for name in names)
    _verdict(
        capsys,
        "sweep-determinism",
        True,
        f"two identical runs, {compared} output files byte-identical "
        f"(CSV report and {sum(1 for n in names if n.endswith('.pgm'))} images)",
    )


def test_format_round_trips(capsys, tmp_path):
    rng = make_rng(31)
    checked = []

    image = rng.standard_normal((9, 7)) + 1j * rng.standard_normal((9, 7))
    p1, p2 = tmp_path / "a.cimg", tmp_path / "b.cimg"
    write_complex_image(p1, image, meta={"note": "round trip"})
    back, header = read_complex_image(p1)
    write_complex_image(p2, back, meta=header["meta"])
    assert p1.read_bytes() == p2.read_bytes()
    npt.assert_array_equal(back, image)
    checked.append("image")

    stack = rng.standard_normal((3, 6, 5)) + 1j * rng.standard_normal((3, 6, 5))
    s1, s2 = tmp_path / "a_stack.cimg", tmp_path / "b_stack.cimg"
    write_complex_image(s1, stack)
    back, header = read_complex_image(s1)
    write_complex_image(s2, back)
    assert s1.read_bytes() == s2.read_bytes()
    checked.append("k-space stack")

    mask = make_mask_for("cartesian1d", 16, 12, 0.5, 0.125, 3)
    m1, m2 = tmp_path / "a.mask", tmp_path / "b.mask"
    write_mask(m1, mask)
    write_mask(m2, read_mask(m1))
    assert m1.read_bytes() == m2.read_bytes()
    checked.append("mask")

    source = MagnitudeSource(kind="procedural", height=320, width=320)
    config = DatasetConfig(total=20, line_length=32, seed=11)
    d1, d2 = tmp_path / "a.dset", tmp_path / "b.dset"
    build_dataset(source, config, d1)
    records, header = read_dataset(d1)
    write_dataset(d2, records, info=header)
    assert d1.read_bytes() == d2.read_bytes()
    checked.append("dataset")

    model = init_model(channels=(2, 6, 2), kernel_size=3, seed=2)
    model.training_meta.update({"best_epoch": 3, "best_val_loss": 0.0123})
    n1, n2 = tmp_path / "a.dnzr", tmp_path / "b.dnzr"
    write_model(n1, model)
    write_model(n2, read_model(n1))
    assert n1.read_bytes() == n2.read_bytes()
    checked.append("model")

    magnitude = rng.uniform(0.0, 2.0, size=(8, 5))
    g1, g2 = tmp_path / "a.pgm", tmp_path / "b.pgm"
    write_pgm(g1, magnitude)
    back, _ = read_pgm(g1)
    write_pgm(g2, back)
    assert g1.read_bytes() == g2.read_bytes()
    with open(str(g1) + ".json", "rb") as fa, open(str(g2) + ".json", "rb") as fb:
        assert fa.read() == fb.read()
    checked.append("pgm")

    _verdict(
        capsys,
        "format-round-trips",
        True,
        "write-read-write bit-exact for " + ", ".join(checked),
    )
