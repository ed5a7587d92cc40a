"""Float EXR and 8-bit PNG image IO.

No EXR bindings are available in this environment, so a minimal codec for
the subset this pipeline emits is implemented directly: single-part
scanline files, uncompressed, float32 pixels, 1 or 3 channels. Files are
byte-deterministic for identical inputs.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image

_EXR_MAGIC = b"\x76\x2f\x31\x01"
_PIXEL_TYPE_FLOAT = 2


def _attr(name: str, type_name: str, payload: bytes) -> bytes:
    return (
        name.encode() + b"\x00"
        + type_name.encode() + b"\x00"
        + struct.pack("<i", len(payload))
        + payload
    )


def _channel_list(names: list[str]) -> bytes:
    out = b""
    for name in sorted(names):
        out += name.encode() + b"\x00"
        out += struct.pack("<i", _PIXEL_TYPE_FLOAT)
        out += struct.pack("<B3x", 0)
        out += struct.pack("<ii", 1, 1)
    return out + b"\x00"


def write_exr(path: str | Path, image: np.ndarray) -> None:
    """Write a float32 EXR: (H, W) as channel Y, (H, W, 3) as R/G/B."""
    img = np.asarray(image, dtype=np.float32)
    if img.ndim == 2:
        img = img[:, :, None]
        names = ["Y"]
    elif img.ndim == 3 and img.shape[2] == 3:
        names = ["R", "G", "B"]
    else:
        raise ValueError("EXR writer supports (H, W) or (H, W, 3) arrays")
    h, w, _ = img.shape
    order = sorted(range(len(names)), key=lambda i: names[i])

    header = _attr("channels", "chlist", _channel_list(names))
    header += _attr("compression", "compression", b"\x00")
    box = struct.pack("<iiii", 0, 0, w - 1, h - 1)
    header += _attr("dataWindow", "box2i", box)
    header += _attr("displayWindow", "box2i", box)
    header += _attr("lineOrder", "lineOrder", b"\x00")
    header += _attr("pixelAspectRatio", "float", struct.pack("<f", 1.0))
    header += _attr("screenWindowCenter", "v2f", struct.pack("<ff", 0.0, 0.0))
    header += _attr("screenWindowWidth", "float", struct.pack("<f", 1.0))
    header += b"\x00"

    preamble = _EXR_MAGIC + struct.pack("<i", 2) + header
    table_size = 8 * h
    block_size = 8 + 4 * w * len(names)
    first_block = len(preamble) + table_size

    with open(path, "wb") as fh:
        fh.write(preamble)
        for y in range(h):
            fh.write(struct.pack("<Q", first_block + y * block_size))
        for y in range(h):
            fh.write(struct.pack("<ii", y, 4 * w * len(names)))
            for ch in order:
                fh.write(img[y, :, ch].tobytes())


def _read_null_string(buf: bytes, pos: int) -> tuple[str, int]:
    end = buf.index(b"\x00", pos)
    return buf[pos:end].decode(), end + 1


def read_exr(path: str | Path) -> np.ndarray:
    """Read an EXR written by :func:`write_exr` (uncompressed float scanlines)."""
    data = Path(path).read_bytes()
    if data[:4] != _EXR_MAGIC:
        raise ValueError("not an EXR file")
    version = struct.unpack("<i", data[4:8])[0]
    if version & 0xFF != 2 or version & ~0x3FF:
        raise ValueError(f"unsupported EXR version field {version:#x}")
    pos = 8
    channels: list[str] = []
    data_window = None
    compression = None
    while True:
        if data[pos] == 0:
            pos += 1
            break
        name, pos = _read_null_string(data, pos)
        type_name, pos = _read_null_string(data, pos)
        size = struct.unpack("<i", data[pos : pos + 4])[0]
        pos += 4
        payload = data[pos : pos + size]
        pos += size
        if name == "channels":
            cpos = 0
            while payload[cpos] != 0:
                cname, cpos = _read_null_string(payload, cpos)
                ptype = struct.unpack("<i", payload[cpos : cpos + 4])[0]
                if ptype != _PIXEL_TYPE_FLOAT:
                    raise ValueError("only FLOAT channels are supported")
                cpos += 16
                channels.append(cname)
        elif name == "dataWindow":
            data_window = struct.unpack("<iiii", payload)
        elif name == "compression":
            compression = payload[0]
    if compression != 0:
        raise ValueError("only uncompressed EXR files are supported")
    if data_window is None or not channels:
        raise ValueError("missing EXR header attributes")
    x0, y0, x1, y1 = data_window
    w, h = x1 - x0 + 1, y1 - y0 + 1

    pos += 8 * h  # scanline offset table; blocks follow in order
    img = np.empty((h, w, len(channels)), dtype=np.float32)
    row_bytes = 4 * w
    for _ in range(h):
        y, size = struct.unpack("<ii", data[pos : pos + 8])
        pos += 8
        if size != row_bytes * len(channels):
            raise ValueError("unexpected scanline block size")
        for c in range(len(channels)):
            img[y - y0, :, c] = np.frombuffer(data[pos : pos + row_bytes], dtype=np.float32)
            pos += row_bytes
    if channels == ["Y"]:
        return img[:, :, 0]
    if channels == ["B", "G", "R"]:
        return img[:, :, ::-1]
    return img


def write_png(path: str | Path, image: np.ndarray) -> None:
    """Write uint8 directly or floats scaled from [0, 1] to 8 bits."""
    img = np.asarray(image)
    if img.dtype != np.uint8:
        img = np.clip(np.round(np.asarray(img, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(img).save(path)


def read_png(path: str | Path, as_float: bool = True) -> np.ndarray:
    img = np.asarray(Image.open(path))
    if as_float:
        return img.astype(np.float64) / 255.0
    return img
