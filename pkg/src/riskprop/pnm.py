"""Binary PGM/PPM reading and writing, plus atomic file writes."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

from riskprop.errors import InputError


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    """Write via a temp file in the same directory followed by a rename."""
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.chmod(tmp, 0o644)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def atomic_write_text(path: str | Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def encode_pgm16(values: np.ndarray) -> bytes:
    """16-bit binary graymap from floats in [0, 1]."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError("graymap needs a 2D array")
    q = np.floor(np.clip(values, 0.0, 1.0) * 65535 + 0.5).astype(">u2")
    h, w = values.shape
    return f"P5\n{w} {h}\n65535\n".encode("ascii") + q.tobytes()


def encode_ppm(rgb: np.ndarray) -> bytes:
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.dtype != np.uint8:
        raise ValueError("pixmap needs a (H, W, 3) uint8 array")
    h, w, _ = rgb.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + rgb.tobytes()


def write_pgm16(path: str | Path, values: np.ndarray) -> None:
    atomic_write_bytes(path, encode_pgm16(values))


def write_ppm(path: str | Path, rgb: np.ndarray) -> None:
    atomic_write_bytes(path, encode_ppm(rgb))


def _parse_header(data: bytes, path: Path) -> tuple[str, int, int, int, int]:
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise InputError(f"{path}: truncated PNM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace byte before the raster
    try:
        magic = tokens[0].decode("ascii")
        w, h, maxval = (int(t) for t in tokens[1:])
    except (UnicodeDecodeError, ValueError):
        raise InputError(f"{path}: malformed PNM header") from None
    if not 0 < maxval < 65536 or w <= 0 or h <= 0:
        raise InputError(f"{path}: invalid PNM dimensions or maxval")
    return magic, w, h, maxval, pos


def _read_raster(path: Path, magic_expected: str, channels: int) -> tuple[np.ndarray, int]:
    data = path.read_bytes()
    magic, w, h, maxval, pos = _parse_header(data, path)
    if magic != magic_expected:
        raise InputError(f"{path}: expected {magic_expected} file, got {magic}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    n = w * h * channels
    raw = data[pos : pos + n * dtype.itemsize]
    if len(raw) != n * dtype.itemsize:
        raise InputError(f"{path}: raster is truncated")
    arr = np.frombuffer(raw, dtype=dtype).reshape((h, w, channels) if channels > 1 else (h, w))
    return arr, maxval


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a binary graymap (8- or 16-bit) as floats in [0, 1]."""
    arr, maxval = _read_raster(Path(path), "P5", 1)
    return arr.astype(np.float64) / maxval


def read_ppm(path: str | Path) -> np.ndarray:
    """Read a binary pixmap as a (H, W, 3) uint8 array."""
    arr, maxval = _read_raster(Path(path), "P6", 3)
    if maxval == 255:
        return arr.astype(np.uint8)
    return np.floor(arr.astype(np.float64) * 255 / maxval + 0.5).astype(np.uint8)
