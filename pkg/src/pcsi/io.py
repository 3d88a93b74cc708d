"""Image files and packet stream containers.

Packet streams hold one record per frame in one of four containers:

``bin``
    2-byte big-endian length prefix followed by the record bytes.
``hex``
    one lowercase hex record per line.
``base91``
    one base91-armored record per line (printable ASCII only).
``kiss``
    a KISS byte stream; flagged frames are stored without flags and
    checksum, exactly as a host hands them to a TNC.
"""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from . import framing as fr
from .image_model import Image
from .pdp import PdpError, base91_decode_bytes, base91_encode_bytes

STREAM_FORMATS = ("bin", "hex", "base91", "kiss")
_EXT_FORMATS = {".hex": "hex", ".txt": "hex", ".b91": "base91", ".kiss": "kiss"}
_NATIVE_IMAGE = {".ppm", ".pnm", ".pgm"}


class StreamError(ValueError):
    pass


def guess_format(path, fmt: str | None = None) -> str:
    if fmt:
        if fmt not in STREAM_FORMATS:
            raise StreamError(f"unknown stream format {fmt!r}")
        return fmt
    return _EXT_FORMATS.get(Path(path).suffix.lower(), "bin")


def write_stream(path, records, fmt: str | None = None) -> int:
    fmt = guess_format(path, fmt)
    records = [bytes(r) for r in records]
    if fmt == "bin":
        out = bytearray()
        for r in records:
            if len(r) > 0xFFFF:
                raise StreamError("record longer than 65535 bytes")
            out += len(r).to_bytes(2, "big") + r
        Path(path).write_bytes(bytes(out))
    elif fmt == "kiss":
        out = bytearray()
        for r in records:
            body = fr.frame_body(r) if _is_flagged(r) else r
            out += fr.kiss_wrap(body)
        Path(path).write_bytes(bytes(out))
    else:
        enc = bytes.hex if fmt == "hex" else base91_encode_bytes
        Path(path).write_text("".join(enc(r) + "\n" for r in records), "ascii")
    return len(records)


def _is_flagged(r: bytes) -> bool:
    return len(r) >= 4 and r[0] == fr.FLAG and r[-1] == fr.FLAG


def read_stream(path, fmt: str | None = None):
    """Return ``(records, rejected)``.

    ``rejected`` lists reason codes for text lines that could not be
    decoded; ``records`` holds the bytes of every readable record.
    """
    fmt = guess_format(path, fmt)
    try:
        if fmt in ("bin", "kiss"):
            data = Path(path).read_bytes()
        else:
            text = Path(path).read_text("ascii")
    except (OSError, UnicodeDecodeError) as exc:
        raise StreamError(f"cannot read {path}: {exc}") from None
    records, rejected = [], []
    if fmt == "bin":
        pos = 0
        while pos < len(data):
            if pos + 2 > len(data):
                raise StreamError("truncated length prefix")
            n = int.from_bytes(data[pos:pos + 2], "big")
            if pos + 2 + n > len(data):
                raise StreamError("truncated record")
            records.append(data[pos + 2:pos + 2 + n])
            pos += 2 + n
    elif fmt == "kiss":
        try:
            records = fr.kiss_split(data)
        except fr.FrameError:
            raise StreamError("malformed KISS stream") from None
    else:
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            try:
                records.append(bytes.fromhex(line) if fmt == "hex"
                               else base91_decode_bytes(line))
            except (ValueError, PdpError):
                rejected.append("hex" if fmt == "hex" else "base91")
    return records, rejected


# -- images -----------------------------------------------------------------

def _read_token(data: bytes, pos: int):
    while True:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] not in b"\r\n":
                pos += 1
            continue
        break
    start = pos
    while pos < len(data) and not data[pos:pos + 1].isspace():
        pos += 1
    return data[start:pos], pos


def read_pnm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    magic, pos = _read_token(data, 0)
    if magic not in (b"P6", b"P5"):
        raise ValueError(f"{path}: only binary PPM (P6) and PGM (P5) are supported")
    fields = []
    for _ in range(3):
        tok, pos = _read_token(data, pos)
        fields.append(int(tok))
    width, height, maxval = fields
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit images are supported")
    pos += 1  # single whitespace before raster
    depth = 3 if magic == b"P6" else 1
    n = width * height * depth
    raster = np.frombuffer(data[pos:pos + n], dtype=np.uint8)
    if raster.size != n:
        raise ValueError(f"{path}: truncated raster")
    raster = raster.reshape(height, width, depth)
    return np.repeat(raster, 3, axis=2) if depth == 1 else raster


def write_ppm(path, pixels: np.ndarray) -> None:
    h, w = pixels.shape[:2]
    Path(path).write_bytes(b"P6\n%d %d\n255\n" % (w, h)
                           + np.ascontiguousarray(pixels, np.uint8).tobytes())


def load_image(path) -> Image:
    """Load ``path`` as an RGB :class:`Image`.

    PPM/PGM are read natively; other formats need Pillow.
    """
    if Path(path).suffix.lower() in _NATIVE_IMAGE:
        return Image(read_pnm(path))
    try:
        from PIL import Image as PILImage
    except ImportError:
        raise ValueError(
            f"{path}: only PPM/PGM are supported without Pillow installed") from None
    with PILImage.open(path) as im:
        return Image(np.asarray(im.convert("RGB")))


def save_image(path, image: Image) -> None:
    if Path(path).suffix.lower() in _NATIVE_IMAGE or not Path(path).suffix:
        write_ppm(path, image.pixels)
        return
    from PIL import Image as PILImage
    PILImage.fromarray(np.asarray(image.pixels)).save(os.fspath(path))
