"""PDP payload codec and base91 text armor.

Wire layout (all multi-byte fields big-endian, samples packed MSB first)::

    image_id   u8
    rows / 16  u8
    cols / 16  u8
    packet_id  u16
    n_color    u8
    depth      u8     low 3 bits = bits per channel - 1
    n_color x (Y, Cb, Cr) samples, then n_grey x Y samples, then zero padding

The grey count is not on the wire; it is recovered from the payload length.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .image_model import Image, image_to_ycbcr, quantize_channel
from .pixel_sequence import (
    PDP_HEADER_LEN,
    TransmissionPlan,
    linear_to_rowcol,
    packet_slice,
)

_HEADER = struct.Struct(">BBBHBB")
assert _HEADER.size == PDP_HEADER_LEN


class PdpError(ValueError):
    """Malformed payload.

    ``reason`` is a short code: header, length, padding, range or base91.
    """

    def __init__(self, message: str, reason: str = "header"):
        super().__init__(message)
        self.reason = reason


@dataclass(frozen=True)
class PdpHeader:
    image_id: int
    rows16: int
    cols16: int
    packet_id: int
    n_color: int
    depth_code: int

    @classmethod
    def for_plan(cls, plan: TransmissionPlan, image_id: int, packet_id: int):
        return cls(image_id, plan.rows // 16, plan.cols // 16, packet_id,
                   plan.n_color, plan.bits - 1)

    @property
    def bits(self) -> int:
        return (self.depth_code & 0x07) + 1

    @property
    def rows(self) -> int:
        return self.rows16 * 16

    @property
    def cols(self) -> int:
        return self.cols16 * 16

    def pack(self) -> bytes:
        try:
            return _HEADER.pack(self.image_id, self.rows16, self.cols16,
                                self.packet_id, self.n_color, self.depth_code)
        except struct.error as exc:
            raise PdpError(f"header field out of range: {exc}") from None


@dataclass(frozen=True)
class PdpPayload:
    header: PdpHeader
    color_samples: tuple  # of (y, cb, cr) tuples
    grey_samples: tuple
    raw: bytes = field(default=b"", compare=False, repr=False)

    def to_bytes(self) -> bytes:
        """Pack without a plan.

        Unlike :func:`encode_pdp` this does not check that the receiver can
        infer the grey count; with ``bits`` or more padding bits it cannot.
        """
        h = self.header
        if h.n_color != len(self.color_samples):
            raise PdpError("header n_color disagrees with the colour samples")
        return _encode(h, self.color_samples, self.grey_samples)


def _pack_samples(values: Iterable[int], bits: int, nbits: int) -> bytes:
    acc = 0
    top = 1 << bits
    for v in values:
        if not 0 <= v < top:
            raise PdpError(f"sample {v} does not fit in {bits} bits", "range")
        acc = (acc << bits) | v
    pad = (-nbits) % 8
    return (acc << pad).to_bytes((nbits + pad) // 8, "big")


def encode_pdp(
    plan: TransmissionPlan,
    header: PdpHeader,
    color_samples: Sequence[Sequence[int]],
    grey_samples: Sequence[int],
) -> bytes:
    """Serialize one payload. Sample counts and depth must match ``plan``."""
    if len(color_samples) != plan.n_color or len(grey_samples) != plan.n_grey:
        raise PdpError(
            f"expected {plan.n_color} colour and {plan.n_grey} grey samples, got "
            f"{len(color_samples)} and {len(grey_samples)}", "range")
    if (header.n_color != plan.n_color or header.bits != plan.bits
            or (header.rows, header.cols) != (plan.rows, plan.cols)):
        raise PdpError("header does not agree with transmission plan")
    return _encode(header, color_samples, grey_samples)


def _encode(header, color_samples, grey_samples) -> bytes:
    if header.depth_code >> 3:
        raise PdpError("reserved depth bits must be zero")
    b = header.bits
    nbits = (3 * len(color_samples) + len(grey_samples)) * b
    flat = []
    for px in color_samples:
        if len(px) != 3:
            raise PdpError("colour samples must be (y, cb, cr) triples", "range")
        flat.extend(int(v) for v in px)
    flat.extend(int(v) for v in grey_samples)
    return header.pack() + _pack_samples(flat, b, nbits)


def decode_pdp(raw: bytes, pdp_len_hint: int | None = None) -> PdpPayload:
    raw = bytes(raw)
    if len(raw) < PDP_HEADER_LEN:
        raise PdpError(f"payload of {len(raw)} bytes is shorter than the header",
                       "length")
    if pdp_len_hint is not None and len(raw) != pdp_len_hint:
        raise PdpError(f"payload is {len(raw)} bytes, expected {pdp_len_hint}",
                       "length")
    header = PdpHeader(*_HEADER.unpack_from(raw))
    if header.rows16 == 0 or header.cols16 == 0:
        raise PdpError("image dimensions must be non-zero")
    b = header.bits
    avail = 8 * (len(raw) - PDP_HEADER_LEN)
    color_bits = header.n_color * 3 * b
    if color_bits > avail:
        raise PdpError(f"{header.n_color} colour pixels exceed the payload", "length")
    n_grey = (avail - color_bits) // b
    used = color_bits + n_grey * b
    pad = avail - used  # < bits by construction
    body = int.from_bytes(raw[PDP_HEADER_LEN:], "big")
    if body & ((1 << pad) - 1):
        raise PdpError("non-zero padding bits", "padding")
    body >>= pad
    mask = (1 << b) - 1
    n_vals = 3 * header.n_color + n_grey
    vals = [(body >> (b * (n_vals - 1 - i))) & mask for i in range(n_vals)]
    ncv = 3 * header.n_color
    color = tuple(tuple(vals[i:i + 3]) for i in range(0, ncv, 3))
    return PdpPayload(header, color, tuple(vals[ncv:]), raw=raw)


def build_payload(image: Image, plan: TransmissionPlan, image_id: int,
                  packet_id: int, *, _planes: np.ndarray | None = None) -> bytes:
    """Sample ``image`` for one packet and return the encoded payload."""
    if (image.height, image.width) != (plan.rows, plan.cols):
        raise ValueError("image size does not match the plan")
    planes = image_to_ycbcr(image) if _planes is None else _planes
    color_idx, grey_idx = packet_slice(plan, packet_id)
    r, c = linear_to_rowcol(color_idx, plan.rows, plan.cols)
    color = quantize_channel(planes[r, c, :], plan.bits)
    r, c = linear_to_rowcol(grey_idx, plan.rows, plan.cols)
    grey = quantize_channel(planes[r, c, 0], plan.bits)
    header = PdpHeader.for_plan(plan, image_id, packet_id)
    return encode_pdp(plan, header, color.tolist(), grey.tolist())


def packetize(image: Image, plan: TransmissionPlan, image_id: int = 0,
              packet_ids: Iterable[int] | None = None) -> list[bytes]:
    """Payloads for ``packet_ids`` (default: one full pass over the image)."""
    if packet_ids is None:
        packet_ids = range(plan.packets_per_pass)
    planes = image_to_ycbcr(image)
    return [build_payload(image, plan, image_id, pid, _planes=planes)
            for pid in packet_ids]


# -- base91 -----------------------------------------------------------------

_B91_OFFSET = 33
_B91_MAX = 33 + 90  # '{'


def base91_encode(bits: str) -> str:
    """Armor a bitstring (a str of '0'/'1') as printable ASCII 33..123."""
    out = []
    n = len(bits)
    pos = 0
    while n - pos >= 13:
        v = int(bits[pos:pos + 13], 2)
        out += (chr(v // 91 + _B91_OFFSET), chr(v % 91 + _B91_OFFSET))
        pos += 13
    rest = n - pos
    if rest >= 7:
        v = int(bits[pos:].ljust(13, "0"), 2)
        out += (chr(v // 91 + _B91_OFFSET), chr(v % 91 + _B91_OFFSET))
    elif rest:
        out.append(chr(int(bits[pos:].ljust(6, "0"), 2) + _B91_OFFSET))
    return "".join(out)


def base91_length(nbits: int) -> int:
    full, rest = divmod(nbits, 13)
    return 2 * full + (2 if rest >= 7 else 1 if rest else 0)


def base91_decode(text: str, nbits: int) -> str:
    if len(text) != base91_length(nbits):
        raise PdpError(
            f"{len(text)} characters cannot hold exactly {nbits} bits", "base91")
    codes = []
    for ch in text:
        o = ord(ch)
        if not _B91_OFFSET <= o <= _B91_MAX:
            raise PdpError(f"character {ch!r} outside the base91 alphabet", "base91")
        codes.append(o - _B91_OFFSET)
    out = []
    full, rest = divmod(nbits, 13)
    pairs = full + (1 if rest >= 7 else 0)
    for i in range(pairs):
        v = codes[2 * i] * 91 + codes[2 * i + 1]
        if v >= 1 << 13:
            raise PdpError(f"group value {v} exceeds 13 bits", "base91")
        out.append(format(v, "013b"))
    if 1 <= rest < 7:
        v = codes[-1]
        if v >= 1 << 6:
            raise PdpError(f"trailing value {v} exceeds 6 bits", "base91")
        out.append(format(v, "06b"))
    return "".join(out)[:nbits]


def bytes_to_bits(data: bytes) -> str:
    return "".join(format(b, "08b") for b in data)


def bits_to_bytes(bits: str) -> bytes:
    if len(bits) % 8:
        raise ValueError("bitstring length must be a multiple of 8")
    return int(bits, 2).to_bytes(len(bits) // 8, "big") if bits else b""


def base91_encode_bytes(data: bytes) -> str:
    return base91_encode(bytes_to_bits(data))


def base91_decode_bytes(text: str, nbytes: int | None = None) -> bytes:
    """Inverse of :func:`base91_encode_bytes`.

    The encoded length is strictly increasing in the byte count, so
    ``nbytes`` can be inferred when not given.
    """
    if nbytes is None:
        nbytes = max(0, (len(text) * 13) // 16 - 1)
        while base91_length(8 * nbytes) < len(text):
            nbytes += 1
    return bits_to_bytes(base91_decode(text, 8 * nbytes))
