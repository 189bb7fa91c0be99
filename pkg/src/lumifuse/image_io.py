"""Bit-exact image file I/O: 8/16-bit RGB PNG and binary PPM (P6).

PNG encode/decode is delegated to OpenCV (the only pre-installed codec
that round-trips 16-bit RGB losslessly); PPM is implemented here. On load,
integer samples v with bit depth d map to v / (2^d - 1). On save, samples
are clamped to [0, 1] and quantized as round(v * (2^d - 1)) with halves
rounded away from zero, giving one bit-exact rule for golden-file tests.

The codec is chosen by file extension on save (`.png`, `.ppm`) and by
magic bytes on load.
"""

from __future__ import annotations

import os
from pathlib import Path

import cv2
import numpy as np

from .raster import Raster

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


class ImageFormatError(ValueError):
    """Unsupported or malformed image file."""


def quantize(data: np.ndarray, bit_depth: int) -> np.ndarray:
    """Clamp to [0, 1] and quantize to uint8/uint16 full scale."""
    if bit_depth not in (8, 16):
        raise ValueError(f"bit depth must be 8 or 16, got {bit_depth}")
    scale = float((1 << bit_depth) - 1)
    clamped = np.clip(data, 0.0, 1.0)
    # Inputs are nonnegative after the clamp, so floor(x + 0.5) rounds
    # halves away from zero.
    quantized = np.floor(clamped * scale + 0.5)
    return quantized.astype(np.uint8 if bit_depth == 8 else np.uint16)


def load_raster(path) -> Raster:
    """Load an 8/16-bit RGB PNG or binary P6 PPM as a [0, 1] raster."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise OSError(f"could not read image file {path}: {exc}") from exc
    if raw.startswith(_PNG_MAGIC):
        return _decode_png(raw, path)
    if raw.startswith(b"P6"):
        return _decode_ppm(raw, path)
    if raw[:2] in (b"P1", b"P2", b"P3", b"P4", b"P5"):
        raise ImageFormatError(
            f"{path}: only binary P6 PPM is supported, got {raw[:2].decode('ascii')}"
        )
    raise ImageFormatError(f"{path}: unsupported format (expected PNG or P6 PPM)")


def save_raster(img: Raster, path, bit_depth: int = 8) -> None:
    """Write a raster as PNG or PPM (chosen by extension) at the given depth."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".png":
        _encode_png(img, path, bit_depth)
    elif suffix == ".ppm":
        _encode_ppm(img, path, bit_depth)
    else:
        raise ImageFormatError(
            f"{path}: unsupported extension {suffix!r} (use .png or .ppm)"
        )


def _decode_png(raw: bytes, path: Path) -> Raster:
    arr = cv2.imdecode(np.frombuffer(raw, dtype=np.uint8), cv2.IMREAD_UNCHANGED)
    if arr is None:
        raise ImageFormatError(f"{path}: corrupt or undecodable PNG")
    if arr.ndim != 3 or arr.shape[2] != 3:
        channels = 1 if arr.ndim == 2 else arr.shape[2]
        raise ImageFormatError(f"{path}: expected 3 channels (RGB), got {channels}")
    if arr.dtype == np.uint8:
        maxval = 255.0
    elif arr.dtype == np.uint16:
        maxval = 65535.0
    else:
        raise ImageFormatError(f"{path}: unsupported PNG sample type {arr.dtype}")
    rgb = arr[:, :, ::-1].astype(np.float64)
    return Raster(rgb / maxval)


def _encode_png(img: Raster, path: Path, bit_depth: int) -> None:
    quantized = quantize(img.data, bit_depth)
    bgr = np.ascontiguousarray(quantized[:, :, ::-1])
    ok, encoded = cv2.imencode(".png", bgr)
    if not ok:
        raise OSError(f"could not encode PNG for {path}")
    _write_bytes(path, encoded.tobytes())


def _encode_ppm(img: Raster, path: Path, bit_depth: int) -> None:
    quantized = quantize(img.data, bit_depth)
    maxval = (1 << bit_depth) - 1
    header = f"P6\n{img.width} {img.height}\n{maxval}\n".encode("ascii")
    if bit_depth == 16:
        payload = quantized.astype(">u2").tobytes()
    else:
        payload = quantized.tobytes()
    _write_bytes(path, header + payload)


def _write_bytes(path: Path, blob: bytes) -> None:
    try:
        path.write_bytes(blob)
    except OSError as exc:
        raise OSError(f"could not write {path}: {exc}") from exc


def _decode_ppm(raw: bytes, path: Path) -> Raster:
    fields, offset = _read_ppm_header(raw, path)
    width, height, maxval = fields
    if maxval not in (255, 65535):
        raise ImageFormatError(f"{path}: PPM maxval must be 255 or 65535, got {maxval}")
    count = width * height * 3
    dtype = np.dtype(">u2") if maxval == 65535 else np.dtype(np.uint8)
    expected = count * dtype.itemsize
    body = raw[offset:offset + expected]
    if len(body) < expected:
        raise ImageFormatError(
            f"{path}: truncated PPM (expected {expected} sample bytes, got {len(body)})"
        )
    samples = np.frombuffer(body, dtype=dtype).astype(np.float64)
    return Raster(samples.reshape(height, width, 3) / float(maxval))


def _read_ppm_header(raw: bytes, path: Path):
    """Parse 'P6 <width> <height> <maxval>' allowing whitespace and # comments."""
    pos = 2  # past the magic
    values = []
    while len(values) < 3:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos] not in (0x0A, 0x0D):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        token = raw[start:pos]
        if not token.isdigit():
            raise ImageFormatError(f"{path}: corrupt PPM header near byte {start}")
        values.append(int(token))
    if pos >= len(raw):
        raise ImageFormatError(f"{path}: corrupt PPM header (no sample data)")
    pos += 1  # exactly one whitespace byte separates header and samples
    width, height, maxval = values
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: invalid PPM dimensions {width}x{height}")
    return (width, height, maxval), pos


def default_output_name(image_id: str) -> str:
    """Canonical on-disk name for a pipeline image: '<id>.png'."""
    if not image_id or os.sep in image_id or image_id != image_id.strip():
        raise ValueError(f"invalid image id {image_id!r}")
    return f"{image_id}.png"
