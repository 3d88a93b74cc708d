"""Byte-level frames that carry PDP payloads.

Two framings are supported:

* AX.25 UI frames: ``7E | dest | src | digis | 03 F0 | pdp | FCS | 7E`` with the
  FCS computed as CRC-16/X-25 and sent low byte first.
* SSDV-style frames: ``7E | 'v' | base-40 callsign (u32 BE) | pdp | CRC | 7E``
  with a CRC-16/CCITT-FALSE over identifier, callsign and payload, sent
  big-endian.

HDLC bit stuffing is not applied; these are the bytes a KISS host sees.
:func:`frame_body` strips flags and checksum for handing a frame to a TNC.
"""
from __future__ import annotations

import binascii
import enum
import re
from dataclasses import dataclass

from .pixel_sequence import MAX_PDP_LEN

FLAG = 0x7E
AX25_CONTROL_UI = 0x03
AX25_PID_NONE = 0xF0
AX25_MAX_DIGIS = 8
SSDV_PACKET_ID = 0x76

KISS_FEND = 0xC0
KISS_FESC = 0xDB
KISS_TFEND = 0xDC
KISS_TFESC = 0xDD


class FrameError(ValueError):
    """Frame rejected. ``reason`` is one of: crc, frame, callsign, length."""

    def __init__(self, message: str, reason: str = "frame"):
        super().__init__(message)
        self.reason = reason


class Framing(str, enum.Enum):
    AX25 = "ax25"
    SSDV = "ssdv"
    RAW = "raw"


# -- CRC --------------------------------------------------------------------

class CrcVariant(str, enum.Enum):
    X25 = "x25"
    CCITT_FALSE = "ccitt-false"


def _x25_table():
    table = []
    for byte in range(256):
        crc = byte
        for _ in range(8):
            crc = (crc >> 1) ^ 0x8408 if crc & 1 else crc >> 1
        table.append(crc)
    return tuple(table)


_X25_TABLE = _x25_table()


def crc16(data: bytes, variant: CrcVariant | str = CrcVariant.X25) -> int:
    variant = CrcVariant(variant)
    if variant is CrcVariant.CCITT_FALSE:
        return binascii.crc_hqx(data, 0xFFFF)
    crc = 0xFFFF
    for b in data:
        crc = (crc >> 8) ^ _X25_TABLE[(crc ^ b) & 0xFF]
    return crc ^ 0xFFFF


# -- AX.25 ------------------------------------------------------------------

_CALLSIGN_RE = re.compile(r"[A-Z0-9]{1,6}")


@dataclass(frozen=True)
class Ax25Address:
    callsign: str
    ssid: int = 0

    def __post_init__(self):
        if not _CALLSIGN_RE.fullmatch(self.callsign):
            raise FrameError(f"invalid AX.25 callsign {self.callsign!r}", "callsign")
        if not 0 <= self.ssid <= 15:
            raise FrameError(f"SSID {self.ssid} outside [0, 15]", "callsign")

    @classmethod
    def parse(cls, text: str) -> "Ax25Address":
        call, _, ssid = text.strip().upper().partition("-")
        try:
            return cls(call, int(ssid) if ssid else 0)
        except ValueError:
            raise FrameError(f"invalid address {text!r}", "callsign") from None

    def encode(self, last: bool = False, command: bool = False) -> bytes:
        call = self.callsign.ljust(6).encode("ascii")
        ssid = 0x60 | (self.ssid << 1) | (0x80 if command else 0) | int(last)
        return bytes(c << 1 for c in call) + bytes([ssid])

    @classmethod
    def decode(cls, data: bytes) -> "Ax25Address":
        if len(data) != 7:
            raise FrameError("address field must be 7 bytes")
        if any(c & 1 for c in data[:6]):
            raise FrameError("extension bit set inside callsign")
        call = bytes(c >> 1 for c in data[:6]).decode("ascii", "replace").rstrip(" ")
        return cls(call, (data[6] >> 1) & 0x0F)

    def __str__(self):
        return self.callsign if not self.ssid else f"{self.callsign}-{self.ssid}"


@dataclass(frozen=True)
class Ax25Frame:
    dest: Ax25Address
    src: Ax25Address
    digis: tuple = ()
    pdp: bytes = b""

    @property
    def overhead(self) -> int:
        return 20 + 7 * len(self.digis)


def _check_payload(pdp: bytes):
    if len(pdp) > MAX_PDP_LEN:
        raise FrameError(f"payload of {len(pdp)} bytes exceeds {MAX_PDP_LEN}",
                         "length")


def _ax25_body(dest, src, digis, pdp) -> bytes:
    digis = tuple(digis)
    if len(digis) > AX25_MAX_DIGIS:
        raise FrameError(f"at most {AX25_MAX_DIGIS} digipeaters", "frame")
    _check_payload(pdp)
    addrs = [dest, src, *digis]
    out = bytearray()
    for i, a in enumerate(addrs):
        out += a.encode(last=i == len(addrs) - 1, command=i == 0)
    out += bytes([AX25_CONTROL_UI, AX25_PID_NONE])
    out += pdp
    return bytes(out)


def encode_ax25(dest: Ax25Address, src: Ax25Address, digis=(), pdp: bytes = b"") -> bytes:
    body = _ax25_body(dest, src, digis, bytes(pdp))
    fcs = crc16(body, CrcVariant.X25)
    return bytes([FLAG]) + body + fcs.to_bytes(2, "little") + bytes([FLAG])


def decode_ax25(data: bytes, *, with_fcs: bool = True) -> Ax25Frame:
    """Parse an AX.25 UI frame.

    With ``with_fcs=False`` the input is a bare body as exchanged over KISS
    (no flags, no FCS).
    """
    data = bytes(data)
    if with_fcs:
        if len(data) < 20 or data[0] != FLAG or data[-1] != FLAG:
            raise FrameError("missing HDLC flags or frame too short")
        body, fcs = data[1:-3], int.from_bytes(data[-3:-1], "little")
        if crc16(body, CrcVariant.X25) != fcs:
            raise FrameError("FCS mismatch", "crc")
    else:
        body = data
    addrs = []
    pos = 0
    while True:
        if pos + 7 > len(body):
            raise FrameError("truncated address field")
        chunk = body[pos:pos + 7]
        addrs.append(Ax25Address.decode(chunk))
        pos += 7
        if chunk[6] & 1:
            break
    if len(addrs) < 2 or len(addrs) > 2 + AX25_MAX_DIGIS:
        raise FrameError(f"bad address count {len(addrs)}")
    if body[pos:pos + 2] != bytes([AX25_CONTROL_UI, AX25_PID_NONE]):
        raise FrameError("not a UI frame without layer 3")
    pdp = body[pos + 2:]
    _check_payload(pdp)
    return Ax25Frame(addrs[0], addrs[1], tuple(addrs[2:]), pdp)


# -- base-40 callsigns ------------------------------------------------------

BASE40_ALPHABET = "\0" + "0123456789" + "ABCDEFGHIJKLMNOPQRSTUVWXYZ" + "-/ "
_BASE40_CODE = {ch: i for i, ch in enumerate(BASE40_ALPHABET) if i}
BASE40_LIMIT = 40 ** 6


def base40_encode(callsign: str) -> int:
    if len(callsign) > 6:
        raise FrameError(f"callsign {callsign!r} longer than 6 characters", "callsign")
    value = 0
    for ch in callsign:
        code = _BASE40_CODE.get(ch)
        if code is None:
            raise FrameError(f"character {ch!r} not encodable in base-40", "callsign")
        value = value * 40 + code
    return value


def base40_decode(value: int) -> str:
    if not 0 <= value < BASE40_LIMIT:
        raise FrameError(f"base-40 value {value} out of range", "callsign")
    chars = []
    while value:
        value, code = divmod(value, 40)
        if code == 0:
            raise FrameError("embedded terminator in base-40 callsign", "callsign")
        chars.append(BASE40_ALPHABET[code])
    return "".join(reversed(chars))


# -- SSDV-style -------------------------------------------------------------

@dataclass(frozen=True)
class SsdvFrame:
    callsign: str
    pdp: bytes


def _ssdv_body(callsign: str, pdp: bytes) -> bytes:
    _check_payload(pdp)
    return bytes([SSDV_PACKET_ID]) + base40_encode(callsign).to_bytes(4, "big") + pdp


def encode_ssdv_style(callsign: str, pdp: bytes) -> bytes:
    body = _ssdv_body(callsign, bytes(pdp))
    crc = crc16(body, CrcVariant.CCITT_FALSE)
    return bytes([FLAG]) + body + crc.to_bytes(2, "big") + bytes([FLAG])


def decode_ssdv_style(data: bytes, *, with_fcs: bool = True) -> SsdvFrame:
    data = bytes(data)
    if with_fcs:
        if len(data) < 9 or data[0] != FLAG or data[-1] != FLAG:
            raise FrameError("missing HDLC flags or frame too short")
        body, crc = data[1:-3], int.from_bytes(data[-3:-1], "big")
        if crc16(body, CrcVariant.CCITT_FALSE) != crc:
            raise FrameError("CRC mismatch", "crc")
    else:
        body = data
    if len(body) < 5 or body[0] != SSDV_PACKET_ID:
        raise FrameError("missing SSDV-style packet identifier")
    callsign = base40_decode(int.from_bytes(body[1:5], "big"))
    pdp = body[5:]
    _check_payload(pdp)
    return SsdvFrame(callsign, pdp)


def frame_body(frame: bytes) -> bytes:
    """Strip HDLC flags and the two checksum bytes (what KISS carries)."""
    if len(frame) < 4 or frame[0] != FLAG or frame[-1] != FLAG:
        raise FrameError("not a flagged frame")
    return bytes(frame[1:-3])


def add_checksum(body: bytes) -> bytes:
    """Rebuild a full frame from a KISS body, as a TNC would on transmit."""
    if body[:1] == bytes([SSDV_PACKET_ID]):
        crc = crc16(body, CrcVariant.CCITT_FALSE).to_bytes(2, "big")
    else:
        crc = crc16(body, CrcVariant.X25).to_bytes(2, "little")
    return bytes([FLAG]) + bytes(body) + crc + bytes([FLAG])


# -- KISS -------------------------------------------------------------------

def kiss_wrap(body: bytes, port: int = 0) -> bytes:
    esc = (bytes(body)
           .replace(bytes([KISS_FESC]), bytes([KISS_FESC, KISS_TFESC]))
           .replace(bytes([KISS_FEND]), bytes([KISS_FESC, KISS_TFEND])))
    return bytes([KISS_FEND, (port & 0x0F) << 4]) + esc + bytes([KISS_FEND])


def _kiss_unescape(data: bytes) -> bytes:
    out = bytearray()
    it = iter(data)
    for b in it:
        if b == KISS_FESC:
            nxt = next(it, None)
            if nxt == KISS_TFEND:
                out.append(KISS_FEND)
            elif nxt == KISS_TFESC:
                out.append(KISS_FESC)
            else:
                raise FrameError("malformed KISS escape")
        elif b == KISS_FEND:
            raise FrameError("unescaped FEND inside KISS frame")
        else:
            out.append(b)
    return bytes(out)


def kiss_unwrap(data: bytes) -> bytes:
    """Inverse of :func:`kiss_wrap` for a single data frame."""
    data = bytes(data)
    if len(data) < 3 or data[0] != KISS_FEND or data[-1] != KISS_FEND:
        raise FrameError("KISS frame must be delimited by FEND")
    if data[1] & 0x0F:
        raise FrameError(f"unsupported KISS command {data[1]:#04x}")
    return _kiss_unescape(data[2:-1])


def kiss_split(stream: bytes) -> list[bytes]:
    """Bodies of every data frame in a KISS byte stream."""
    frames = []
    for chunk in bytes(stream).split(bytes([KISS_FEND])):
        if not chunk:
            continue
        if chunk[0] & 0x0F:
            continue  # non-data command
        frames.append(_kiss_unescape(chunk[1:]))
    return frames


# -- helpers used by the pipeline -------------------------------------------

def frame_pdp(pdp: bytes, framing=Framing.AX25, *, source="PCSI", dest="PCSI",
              digis=()) -> bytes:
    framing = Framing(framing)
    if framing is Framing.RAW:
        _check_payload(pdp)
        return bytes(pdp)
    if framing is Framing.SSDV:
        return encode_ssdv_style(str(source), pdp)
    as_addr = lambda a: a if isinstance(a, Ax25Address) else Ax25Address.parse(a)
    return encode_ax25(as_addr(dest), as_addr(source),
                       [as_addr(d) for d in digis], pdp)


def detect_framing(record: bytes, *, with_fcs: bool = True) -> Framing:
    """Guess how ``record`` is framed; payloads that look unframed are RAW.

    Bodies without checksum (KISS) are ambiguous when unframed, so the
    structural checks are stricter there.
    """
    if with_fcs:
        if len(record) >= 9 and record[0] == FLAG and record[-1] == FLAG:
            return Framing.SSDV if record[1] == SSDV_PACKET_ID else Framing.AX25
        return Framing.RAW
    try:
        decode_ax25(record, with_fcs=False)
        return Framing.AX25
    except FrameError:
        pass
    try:
        decode_ssdv_style(record, with_fcs=False)
        return Framing.SSDV
    except FrameError:
        return Framing.RAW


def extract_pdp(record: bytes, framing="auto", *, with_fcs: bool = True) -> bytes:
    """Validate the framing of ``record`` and return its payload bytes."""
    framing = (detect_framing(record, with_fcs=with_fcs) if framing == "auto"
               else Framing(framing))
    if framing is Framing.AX25:
        return decode_ax25(record, with_fcs=with_fcs).pdp
    if framing is Framing.SSDV:
        return decode_ssdv_style(record, with_fcs=with_fcs).pdp
    _check_payload(record)
    return bytes(record)
