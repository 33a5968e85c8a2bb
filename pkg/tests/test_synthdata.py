import json

import numpy as np
import numpy.testing as npt
import pytest

from pnpmri.core import make_rng
from pnpmri.fileio import read_dataset
from pnpmri.synthdata import (
    PHASE_TRUNCATION_SIZES,
    DatasetConfig,
    MagnitudeSource,
    build_dataset,
    extract_lines,
    load_split,
    load_training_arrays,
    make_pair,
    procedural_magnitude,
    random_phase_map,
    split_counts,
)


def test_procedural_magnitude_in_unit_range():
    rng = make_rng(0)
    for _ in range(100):
        img = procedural_magnitude(32, 32, rng)
        assert img.min() >= 0.0 and img.max() <= 1.0


def test_procedural_magnitude_deterministic():
    a = procedural_magnitude(64, 64, make_rng(3))
    b = procedural_magnitude(64, 64, make_rng(3))
    npt.assert_array_equal(a, b)


def test_procedural_magnitude_frozen_mean():
    # Pin the generator call sequence.
    img = procedural_magnitude(64, 64, make_rng(0))
    assert float(img.mean()) == pytest.approx(0.3635990545767358, abs=1e-12)


def test_procedural_magnitude_has_structure():
    rng = make_rng(1)
    means = [float(procedural_magnitude(32, 32, rng).std()) for _ in range(20)]
    assert min(means) > 0.01


def test_procedural_magnitude_rejects_tiny_grids():
    with pytest.raises(ValueError):
        procedural_magnitude(4, 32, make_rng(0))


def test_phase_map_unit_magnitude():
    for k in PHASE_TRUNCATION_SIZES:
        pmap = random_phase_map(48, 48, k, make_rng(k))
        npt.assert_allclose(np.abs(pmap), 1.0, atol=1e-12)


def test_phase_map_deterministic():
    a = random_phase_map(32, 32, 3, make_rng(5))
    b = random_phase_map(32, 32, 3, make_rng(5))
    npt.assert_array_equal(a, b)


def test_phase_map_rejects_bad_truncation():
    with pytest.raises(ValueError):
        random_phase_map(32, 32, 6, make_rng(0))
    with pytest.raises(ValueError):
        random_phase_map(32, 32, 1, make_rng(0))


def test_phase_smoothness_grows_with_truncation():
    # Tighter truncation must give smoother phase: compare mean pixel-to-
    # pixel variation between truncation 2 and truncation 5 across seeds.
    def roughness(pmap):
        return float(
            np.mean(np.abs(np.diff(pmap, axis=0)))
            + np.mean(np.abs(np.diff(pmap, axis=1)))
        )

    wins = 0
    for s in range(100):
        r2 = roughness(random_phase_map(64, 64, 2, make_rng(1000 + s)))
        r5 = roughness(random_phase_map(64, 64, 5, make_rng(2000 + s)))
        wins += r2 < r5
    assert wins >= 95


def test_extract_lines_magnitude_matches_source():
    rng = make_rng(2)
    mag = procedural_magnitude(32, 48, rng)
    pmap = random_phase_map(32, 48, 3, rng)
    lines, rows = extract_lines(mag, pmap, 40, make_rng(9), 12, return_rows=True)
    assert lines.shape == (12, 40)
    col0 = (48 - 40) // 2
    for line, row in zip(lines, rows):
        npt.assert_allclose(np.abs(line), mag[row, col0 : col0 + 40], atol=1e-12)


def test_extract_lines_deterministic():
    mag = procedural_magnitude(32, 32, make_rng(4))
    pmap = random_phase_map(32, 32, 3, make_rng(4))
    a = extract_lines(mag, pmap, 32, make_rng(7), 5)
    b = extract_lines(mag, pmap, 32, make_rng(7), 5)
    npt.assert_array_equal(a, b)


def test_extract_lines_rejects_wide_lines():
    mag = np.ones((16, 16))
    pmap = np.ones((16, 16), dtype=np.complex128)
    with pytest.raises(ValueError):
        extract_lines(mag, pmap, 17, make_rng(0), 1)


def test_make_pair_noise_power_at_40db():
    # Unit-power line at 40 dB: per-sample noise power 1e-4.
    clean = np.ones(100_000, dtype=np.complex128)
    rec = make_pair(clean, 40.0, make_rng(0))
    noise_power = float(np.mean(np.abs(rec.noisy - rec.clean) ** 2))
    sigma = 1e-4 / np.sqrt(clean.size)
    assert abs(noise_power - 1e-4) <= 5 * sigma
    assert rec.snr_db == 40.0


def test_make_pair_keeps_clean_untouched():
    rng = make_rng(1)
    clean = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    rec = make_pair(clean, 10.0, make_rng(2))
    npt.assert_array_equal(rec.clean, clean)
    assert np.any(rec.noisy != clean)


def test_make_pair_rejects_zero_power():
    with pytest.raises(ValueError, match="zero power"):
        make_pair(np.zeros(32, dtype=np.complex128), 20.0, make_rng(0))


def test_make_pair_empirical_snr_tenth_db():
    rng = make_rng(3)
    clean = rng.standard_normal(100_000) + 1j * rng.standard_normal(100_000)
    rec = make_pair(clean, 15.0, make_rng(4))
    p_sig = float(np.mean(np.abs(clean) ** 2))
    p_noise = float(np.mean(np.abs(rec.noisy - clean) ** 2))
    assert abs(10 * np.log10(p_sig / p_noise) - 15.0) <= 0.1


def test_noise_independent_of_signal():
    # Correlation between |clean| and noise magnitude should be near zero.
    rng = make_rng(5)
    mags = []
    noises = []
    for _ in range(200):
        clean = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        rec = make_pair(clean, 10.0, rng)
        mags.append(np.abs(clean))
        noises.append(np.abs(rec.noisy - clean))
    mags = np.concatenate(mags)
    noises = np.concatenate(noises)
    corr = np.corrcoef(mags, noises)[0, 1]
    assert abs(corr) < 0.05


def test_dataset_config_validation():
    with pytest.raises(ValueError):
        DatasetConfig(total=0)
    with pytest.raises(ValueError):
        DatasetConfig(total=10, snr_min=30.0, snr_max=20.0)
    with pytest.raises(ValueError):
        DatasetConfig(total=10, train_fraction=1.5)


def test_split_counts_arithmetic():
    assert split_counts(640000, 0.9) == (576000, 64000)
    assert split_counts(20000, 0.9) == (18000, 2000)
    assert split_counts(200, 0.9) == (180, 20)


def test_build_dataset_split_arithmetic(tmp_path):
    source = MagnitudeSource(height=64, width=64)
    config = DatasetConfig(total=200, line_length=32, lines_per_image=50, seed=1)
    out = tmp_path / "ds.bin"
    summary = build_dataset(source, config, out)
    assert summary["n_train"] == 180 and summary["n_val"] == 20
    split = load_split(out)
    assert len(split["train"]) == 180 and len(split["val"]) == 20
    indices = sorted(split["train"] + split["val"])
    assert indices == list(range(200))


def test_build_dataset_round_trip(tmp_path):
    source = MagnitudeSource(height=32, width=32)
    config = DatasetConfig(total=40, line_length=32, lines_per_image=20, seed=7)
    out = tmp_path / "ds.bin"
    build_dataset(source, config, out)
    records, header = read_dataset(out)
    assert header["count"] == 40
    assert header["line_length"] == 32
    assert records.shape == (40,)
    assert records["clean"].shape == (40, 32)
    assert np.all(np.isfinite(records["noisy"].view(np.float64)))
    assert records["snr_db"].min() >= 5.0 and records["snr_db"].max() <= 40.0


def test_build_dataset_byte_identical_rebuild(tmp_path):
    source = MagnitudeSource(height=32, width=32)
    config = DatasetConfig(total=30, line_length=24, lines_per_image=10, seed=3)
    a = tmp_path / "a.bin"
    b = tmp_path / "b.bin"
    build_dataset(source, config, a)
    build_dataset(source, config, b)
    assert a.read_bytes() == b.read_bytes()
    assert (
        (tmp_path / "a.bin.split.json").read_bytes()
        == (tmp_path / "b.bin.split.json").read_bytes()
    )


def test_build_dataset_different_seeds_differ(tmp_path):
    source = MagnitudeSource(height=32, width=32)
    a = tmp_path / "a.bin"
    b = tmp_path / "b.bin"
    build_dataset(source, DatasetConfig(total=20, line_length=16, lines_per_image=10, seed=0), a)
    build_dataset(source, DatasetConfig(total=20, line_length=16, lines_per_image=10, seed=1), b)
    assert a.read_bytes() != b.read_bytes()


def test_build_dataset_provenance_against_file_source(tmp_path):
    # With a file-backed magnitude the provenance string lets each clean
    # line be reassembled from the source image directly.
    rng = make_rng(11)
    images = [rng.uniform(0.1, 1.0, size=(24, 24)) for _ in range(2)]
    source = MagnitudeSource(kind="files", images=tuple(images))
    config = DatasetConfig(total=12, line_length=16, lines_per_image=6, seed=5)
    out = tmp_path / "ds.bin"
    build_dataset(source, config, out)
    records, _ = read_dataset(out)
    split = load_split(out)
    col0 = (24 - 16) // 2
    for idx, tag in enumerate(split["provenance"]):
        img_idx, row, col = (int(p) for p in tag.split(":"))
        assert col == col0
        expected = images[img_idx][row, col0 : col0 + 16]
        npt.assert_allclose(np.abs(records["clean"][idx]), expected, atol=1e-12)


def test_build_dataset_snr_statistics(tmp_path):
    source = MagnitudeSource(height=64, width=64)
    config = DatasetConfig(
        total=100_000, line_length=32, lines_per_image=1000, seed=0
    )
    out = tmp_path / "big.bin"
    build_dataset(source, config, out)
    records, _ = read_dataset(out)
    snrs = records["snr_db"]
    assert snrs.min() >= 5.0
    assert snrs.max() <= 40.0
    assert 21.0 <= float(snrs.mean()) <= 24.0


def test_load_training_arrays_partition(tmp_path):
    source = MagnitudeSource(height=32, width=32)
    config = DatasetConfig(total=50, line_length=20, lines_per_image=25, seed=2)
    out = tmp_path / "ds.bin"
    build_dataset(source, config, out)
    tr_n, tr_c, va_n, va_c, header = load_training_arrays(out)
    assert tr_n.shape == (45, 20) and va_n.shape == (5, 20)
    assert tr_c.shape == tr_n.shape and va_c.shape == va_n.shape
    assert header["count"] == 50
    # Train and validation rows together are exactly the stored records.
    records, _ = read_dataset(out)
    split = load_split(out)
    npt.assert_array_equal(tr_c, records["clean"][split["train"]])
    npt.assert_array_equal(va_c, records["clean"][split["val"]])


def test_magnitude_source_validation():
    with pytest.raises(ValueError):
        MagnitudeSource(kind="nope")
    with pytest.raises(ValueError):
        MagnitudeSource(kind="files", images=())
    with pytest.raises(ValueError):
        MagnitudeSource(kind="files", images=(np.full((8, 8), 2.0),))
    with pytest.raises(ValueError):
        MagnitudeSource(height=4, width=400)


def test_split_manifest_is_sorted_json(tmp_path):
    source = MagnitudeSource(height=32, width=32)
    out = tmp_path / "ds.bin"
    build_dataset(source, DatasetConfig(total=10, line_length=16, lines_per_image=5, seed=0), out)
    raw = (tmp_path / "ds.bin.split.json").read_text()
    parsed = json.loads(raw)
    assert list(parsed) == sorted(parsed)
    assert parsed["rng"] == "pcg64"
    assert parsed["n_train"] + parsed["n_val"] == parsed["total"]
