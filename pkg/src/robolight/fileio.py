"""Image serialization: PFM for HDR buffers, PNG for LDR and RAW containers.

PFM convention: header ``PF`` (color) / ``Pf`` (gray), dimensions line,
scale line (negative scale = little-endian), scanlines stored bottom to
top. We always write little-endian with scale -1.0.

RAW containers are 16-bit PNGs (grayscale for a CFA mosaic, RGB for
pre-demosaiced data) with a ``*.raw.json`` sidecar holding the sensor
metadata needed to decode them.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import cv2
import numpy as np

from .errors import ValidationError
from .hdr_core import LdrImage, RadianceImage


def atomic_write_bytes(path, payload: bytes) -> None:
    """Write-then-rename so readers never observe a partial file."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# PFM

def write_pfm(path, img: RadianceImage) -> None:
    data = img.data
    channels = data.shape[2]
    ident = b"PF" if channels == 3 else b"Pf"
    header = ident + b"\n" + f"{img.width} {img.height}".encode() + b"\n" + b"-1.0\n"
    flipped = np.ascontiguousarray(data[::-1], dtype="<f4")
    if channels == 1:
        flipped = flipped[:, :, 0]
    atomic_write_bytes(path, header + flipped.tobytes())


def read_pfm(path) -> RadianceImage:
    raw = Path(path).read_bytes()

    def take_line(offset):
        end = raw.index(b"\n", offset)
        return raw[offset:end].decode("ascii").strip(), end + 1

    ident, pos = take_line(0)
    if ident == "PF":
        channels = 3
    elif ident == "Pf":
        channels = 1
    else:
        raise ValidationError(f"not a PFM file: bad identifier {ident!r} in {path}")
    dims, pos = take_line(pos)
    parts = dims.split()
    if len(parts) != 2:
        raise ValidationError(f"malformed PFM dimensions line {dims!r} in {path}")
    width, height = int(parts[0]), int(parts[1])
    scale_line, pos = take_line(pos)
    scale = float(scale_line)
    dtype = "<f4" if scale < 0 else ">f4"
    count = width * height * channels
    pixels = np.frombuffer(raw, dtype=dtype, count=count, offset=pos)
    if pixels.size != count:
        raise ValidationError(f"PFM payload truncated in {path}")
    data = pixels.reshape(height, width, channels)[::-1].astype(np.float32)
    if abs(scale) not in (0.0, 1.0):
        data = data * np.float32(abs(scale))
    return RadianceImage(np.maximum(data, 0.0))


# ---------------------------------------------------------------------------
# PNG

def write_png8(path, img: LdrImage) -> None:
    ok, buf = cv2.imencode(".png", cv2.cvtColor(img.data, cv2.COLOR_RGB2BGR))
    if not ok:
        raise IOError(f"PNG encode failed for {path}")
    atomic_write_bytes(path, buf.tobytes())


def read_png8(path) -> LdrImage:
    arr = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if arr is None:
        raise IOError(f"cannot read PNG: {path}")
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
        raise ValidationError(f"expected 8-bit RGB PNG at {path}, got {arr.dtype} shape {arr.shape}")
    return LdrImage(cv2.cvtColor(arr, cv2.COLOR_BGR2RGB))


def write_png16(path, data: np.ndarray) -> None:
    """16-bit PNG, grayscale (H, W) or RGB (H, W, 3) uint16."""
    data = np.asarray(data)
    if data.dtype != np.uint16:
        raise ValidationError(f"16-bit PNG requires uint16 data, got {data.dtype}")
    if data.ndim == 3:
        if data.shape[2] != 3:
            raise ValidationError(f"16-bit color PNG must have 3 channels, got shape {data.shape}")
        data = cv2.cvtColor(data, cv2.COLOR_RGB2BGR)
    elif data.ndim != 2:
        raise ValidationError(f"unsupported 16-bit PNG shape {data.shape}")
    ok, buf = cv2.imencode(".png", data)
    if not ok:
        raise IOError(f"PNG encode failed for {path}")
    atomic_write_bytes(path, buf.tobytes())


def read_png16(path) -> np.ndarray:
    arr = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if arr is None:
        raise IOError(f"cannot read PNG: {path}")
    if arr.dtype != np.uint16:
        raise ValidationError(f"expected 16-bit PNG at {path}, got {arr.dtype}")
    if arr.ndim == 3:
        arr = cv2.cvtColor(arr, cv2.COLOR_BGR2RGB)
    return arr


# ---------------------------------------------------------------------------
# RAW container (16-bit PNG + sidecar JSON)

def raw_sidecar_path(png_path) -> Path:
    png_path = Path(png_path)
    return png_path.with_name(png_path.name[: -len(png_path.suffix)] + ".raw.json")


def write_raw_container(png_path, frame) -> None:
    write_png16(png_path, frame.data)
    meta = {
        "width": frame.width,
        "height": frame.height,
        "cfa": frame.cfa,
        "black_level": frame.black_level,
        "white_level": frame.white_level,
    }
    payload = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode() + b"\n"
    atomic_write_bytes(raw_sidecar_path(png_path), payload)


def read_raw_container(png_path):
    from .raw_pipeline import RawFrame

    sidecar = raw_sidecar_path(png_path)
    if not sidecar.exists():
        raise IOError(f"missing RAW sidecar: {sidecar}")
    meta = json.loads(sidecar.read_text())
    data = read_png16(png_path)
    frame = RawFrame(
        data=data,
        cfa=meta["cfa"],
        black_level=int(meta["black_level"]),
        white_level=int(meta["white_level"]),
    )
    if frame.width != int(meta["width"]) or frame.height != int(meta["height"]):
        raise ValidationError(
            f"RAW sidecar dimensions {meta['width']}x{meta['height']} do not match "
            f"PNG {frame.width}x{frame.height}: {png_path}")
    return frame
