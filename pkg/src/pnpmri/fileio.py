"""On-disk formats: complex images, masks, line datasets, denoiser models.

Every binary file starts with an 8-byte magic (4-byte type tag plus 4-byte
format version), then a little-endian u32 header length, then a compact
JSON header with sorted keys, then the raw payload. Complex payloads are
interleaved little-endian f64 pairs (header dtype "c64"), model weights are
little-endian f64, masks are 0/1 bytes, all row-major. Nothing in a file
depends on when it was written, so rebuilding from the same inputs
reproduces it byte for byte.

Grayscale exports use binary PGM (P5) with a JSON sidecar recording how the
magnitudes were scaled into 0..255, which is enough to undo the scaling on
read.
"""

from __future__ import annotations

import csv
import json
import os
import struct

import numpy as np

from .core import RNG_ALGORITHM
from .denoiser import Conv1dLayer, DenoiserModel
from .sampling import SamplingMask

MAGIC_IMAGE = b"CIMG"
MAGIC_MASK = b"MASK"
MAGIC_DATASET = b"DSET"
MAGIC_MODEL = b"DNZR"
FORMAT_VERSION = b"v001"


class FileFormatError(Exception):
    """Raised for wrong magic, unsupported version, or corrupt payloads."""


def _encode_header(header: dict) -> bytes:
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _write_block(path, magic: bytes, header: dict, payload: bytes) -> None:
    header_bytes = _encode_header(header)
    with open(path, "wb") as f:
        f.write(magic + FORMAT_VERSION)
        f.write(struct.pack("<I", len(header_bytes)))
        f.write(header_bytes)
        f.write(payload)


def _read_block(path, magic: bytes, kind: str) -> tuple[dict, bytes]:
    with open(path, "rb") as f:
        head = f.read(8)
        if len(head) < 8:
            raise FileFormatError(f"{os.fspath(path)}: too short to be a {kind} file")
        tag, version = head[:4], head[4:]
        if tag != magic:
            raise FileFormatError(
                f"{os.fspath(path)}: not a {kind} file "
                f"(tag {tag.decode('latin1')!r}, expected {magic.decode()!r})"
            )
        if version != FORMAT_VERSION:
            raise FileFormatError(
                f"{os.fspath(path)}: {kind} format version "
                f"{version.decode('latin1')!r} is not supported, this build "
                f"reads {FORMAT_VERSION.decode()!r}"
            )
        raw_len = f.read(4)
        if len(raw_len) < 4:
            raise FileFormatError(f"{os.fspath(path)}: truncated header length")
        (header_len,) = struct.unpack("<I", raw_len)
        header_bytes = f.read(header_len)
        if len(header_bytes) != header_len:
            raise FileFormatError(f"{os.fspath(path)}: truncated header")
        try:
            header = json.loads(header_bytes.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise FileFormatError(f"{os.fspath(path)}: bad header JSON: {exc}") from exc
        payload = f.read()
    return header, payload


def _expect_payload(path, payload: bytes, nbytes: int, kind: str) -> None:
    if len(payload) != nbytes:
        raise FileFormatError(
            f"{os.fspath(path)}: {kind} payload is {len(payload)} bytes, "
            f"expected {nbytes}"
        )


def write_complex_image(path, image: np.ndarray, meta: dict | None = None) -> None:
    """Write a complex image (h, w) or k-space stack (coils, h, w)."""
    image = np.asarray(image, dtype=np.complex128)
    if image.ndim not in (2, 3):
        raise ValueError(f"expected a 2D image or 3D stack, got shape {image.shape}")
    header = {
        "dtype": "c64",
        "layout": "row-major",
        "shape": [int(s) for s in image.shape],
        "rng": RNG_ALGORITHM,
        "meta": meta or {},
    }
    if image.ndim == 3:
        header["coils"] = int(image.shape[0])
    payload = np.ascontiguousarray(image, dtype="<c16").tobytes()
    _write_block(path, MAGIC_IMAGE, header, payload)


def read_complex_image(path) -> tuple[np.ndarray, dict]:
    header, payload = _read_block(path, MAGIC_IMAGE, "complex image")
    if header.get("dtype") != "c64":
        raise FileFormatError(
            f"{os.fspath(path)}: unexpected image dtype {header.get('dtype')!r}"
        )
    shape = tuple(int(s) for s in header["shape"])
    if len(shape) not in (2, 3):
        raise FileFormatError(f"{os.fspath(path)}: bad image shape {shape}")
    count = int(np.prod(shape))
    _expect_payload(path, payload, count * 16, "image")
    image = np.frombuffer(payload, dtype="<c16").reshape(shape).astype(np.complex128)
    return image, header


def write_mask(path, mask: SamplingMask) -> None:
    header = {
        "layout": "row-major",
        "shape": [int(s) for s in mask.keep.shape],
        "pattern": mask.pattern,
        "target_rate": float(mask.target_rate),
        "achieved_rate": float(mask.achieved_rate),
        "center_fraction": float(mask.center_fraction),
        "seed": int(mask.seed),
        "rng": RNG_ALGORITHM,
    }
    payload = np.ascontiguousarray(mask.keep, dtype=np.uint8).tobytes()
    _write_block(path, MAGIC_MASK, header, payload)


def read_mask(path) -> SamplingMask:
    header, payload = _read_block(path, MAGIC_MASK, "sampling mask")
    h, w = (int(s) for s in header["shape"])
    _expect_payload(path, payload, h * w, "mask")
    keep = np.frombuffer(payload, dtype=np.uint8).reshape(h, w).copy()
    return SamplingMask(
        keep=keep,
        pattern=str(header["pattern"]),
        target_rate=float(header["target_rate"]),
        achieved_rate=float(header["achieved_rate"]),
        center_fraction=float(header["center_fraction"]),
        seed=int(header["seed"]),
    )


def dataset_dtype(line_length: int) -> np.dtype:
    """Structured record layout: f64 snr_db, then clean and noisy lines."""
    return np.dtype(
        [
            ("snr_db", "<f8"),
            ("clean", "<c16", (line_length,)),
            ("noisy", "<c16", (line_length,)),
        ]
    )


def write_dataset(path, records: np.ndarray, info: dict | None = None) -> None:
    """Write dataset records; ``info`` keys (snr range, seed, source
    descriptor and the like) are merged into the header."""
    if records.dtype.names != ("snr_db", "clean", "noisy"):
        raise ValueError(f"unexpected record fields {records.dtype.names}")
    line_length = records.dtype["clean"].shape[0]
    header = dict(info or {})
    header.update(
        {
            "count": int(records.shape[0]),
            "line_length": int(line_length),
            "rng": RNG_ALGORITHM,
        }
    )
    payload = np.ascontiguousarray(
        records.astype(dataset_dtype(line_length), copy=False)
    ).tobytes()
    _write_block(path, MAGIC_DATASET, header, payload)


def read_dataset(path) -> tuple[np.ndarray, dict]:
    """Read records back; the second return value is the full header."""
    header, payload = _read_block(path, MAGIC_DATASET, "line dataset")
    count = int(header["count"])
    line_length = int(header["line_length"])
    dt = dataset_dtype(line_length)
    _expect_payload(path, payload, count * dt.itemsize, "dataset")
    records = np.frombuffer(payload, dtype=dt).copy()
    return records, header


def write_model(path, model: DenoiserModel) -> None:
    header = {
        "arch": {
            "channels": [int(c) for c in model.channels],
            "kernel_size": int(model.kernel_size),
            "residual": bool(model.residual),
        },
        "training_meta": model.training_meta,
        "dtype": "f64",
        "rng": RNG_ALGORITHM,
    }
    chunks = []
    for layer in model.layers:
        chunks.append(np.ascontiguousarray(layer.weights, dtype="<f8").tobytes())
        chunks.append(np.ascontiguousarray(layer.bias, dtype="<f8").tobytes())
    _write_block(path, MAGIC_MODEL, header, b"".join(chunks))


def read_model(path) -> DenoiserModel:
    header, payload = _read_block(path, MAGIC_MODEL, "denoiser model")
    try:
        arch = header["arch"]
        channels = [int(c) for c in arch["channels"]]
        kernel = int(arch["kernel_size"])
        residual = bool(arch["residual"])
    except (KeyError, TypeError) as exc:
        raise FileFormatError(f"{os.fspath(path)}: bad model header: {exc}") from exc
    layers = []
    offset = 0
    for in_ch, out_ch in zip(channels[:-1], channels[1:]):
        n_weights = out_ch * in_ch * kernel
        end = offset + (n_weights + out_ch) * 8
        if end > len(payload):
            raise FileFormatError(f"{os.fspath(path)}: model payload truncated")
        weights = (
            np.frombuffer(payload, dtype="<f8", count=n_weights, offset=offset)
            .reshape(out_ch, in_ch, kernel)
            .astype(np.float64)
        )
        offset += n_weights * 8
        bias = np.frombuffer(payload, dtype="<f8", count=out_ch, offset=offset).astype(
            np.float64
        )
        offset += out_ch * 8
        layers.append(Conv1dLayer(weights=weights, bias=bias))
    if offset != len(payload):
        raise FileFormatError(
            f"{os.fspath(path)}: model payload has {len(payload) - offset} stray bytes"
        )
    return DenoiserModel(
        layers=layers,
        residual=residual,
        training_meta=header.get("training_meta", {}),
    )


def write_pgm(path, magnitude: np.ndarray, peak: float | None = None) -> None:
    """Export a magnitude image as 8-bit binary PGM plus a JSON sidecar.

    With ``peak=None`` the image is scaled by its own maximum (standalone
    export); passing a reference peak instead keeps several exports on a
    shared scale, with values above the peak clipped to white. The sidecar
    (same path with ``.json`` appended) records the mode and scale so the
    mapping can be undone.
    """
    mag = np.asarray(magnitude, dtype=np.float64)
    if mag.ndim != 2:
        raise ValueError(f"PGM export needs a 2D image, got shape {mag.shape}")
    if not np.all(np.isfinite(mag)) or np.any(mag < 0):
        raise ValueError("PGM export needs finite, nonnegative magnitudes")
    if peak is None:
        mode = "self-peak"
        self_peak = float(mag.max())
        scale = self_peak if self_peak > 0 else 1.0
    else:
        mode = "reference-peak"
        if not np.isfinite(peak) or peak <= 0:
            raise ValueError(f"reference peak must be positive, got {peak}")
        scale = float(peak)
    pixels = np.clip(np.round(mag / scale * 255.0), 0, 255).astype(np.uint8)
    h, w = mag.shape
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (w, h))
        f.write(pixels.tobytes())
    sidecar = {
        "normalization": {"mode": mode, "peak": scale},
        "shape": [int(h), int(w)],
    }
    write_manifest(os.fspath(path) + ".json", sidecar)


def read_pgm(path) -> tuple[np.ndarray, dict]:
    """Read a binary PGM back to float magnitudes, undoing the sidecar scale.

    Without a sidecar the pixel values are mapped to [0, 1].
    """
    with open(path, "rb") as f:
        tokens: list[bytes] = []
        while len(tokens) < 4:
            line = f.readline()
            if not line:
                raise FileFormatError(f"{os.fspath(path)}: truncated PGM header")
            tokens.extend(line.split(b"#", 1)[0].split())
        data = f.read()
    if tokens[0] != b"P5":
        raise FileFormatError(
            f"{os.fspath(path)}: not a binary PGM (magic {tokens[0]!r}, expected b'P5')"
        )
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if not 0 < maxval < 256:
        raise FileFormatError(f"{os.fspath(path)}: unsupported PGM maxval {maxval}")
    if len(data) < h * w:
        raise FileFormatError(f"{os.fspath(path)}: truncated PGM pixel data")
    pixels = np.frombuffer(data[: h * w], dtype=np.uint8).reshape(h, w)

    meta: dict = {}
    sidecar_path = os.fspath(path) + ".json"
    if os.path.exists(sidecar_path):
        meta = read_manifest(sidecar_path)
    peak = float(meta.get("normalization", {}).get("peak", 1.0))
    scale = peak if peak > 0 else 1.0
    return pixels.astype(np.float64) / maxval * scale, meta


def write_manifest(path, mapping: dict) -> None:
    """Deterministic JSON: sorted keys, two-space indent, trailing newline."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(mapping, sort_keys=True, indent=2))
        f.write("\n")


def read_manifest(path) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def _format_csv_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        if np.isnan(value):
            return "nan"
        if np.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.4f}"
    return str(value)


def write_report_csv(path, fieldnames: list[str], rows: list[dict]) -> None:
    """CSV with a fixed column order; floats as %.4f, infinities as inf."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_format_csv_value(row.get(name)) for name in fieldnames])
