"""Lossy channel simulation and link-efficiency analytics."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .framing import Framing
from .pixel_sequence import MAX_PDP_LEN, PDP_HEADER_LEN

MIN_PDP_LEN = PDP_HEADER_LEN + 1

# frame bytes around the payload
FRAMING_OVERHEAD = {Framing.AX25: 20, Framing.SSDV: 9}

# bit length of the reference full-size AX.25 frame in the loss -> BER rule
LOSS_REFERENCE_BITS = 2192


@dataclass(frozen=True)
class ChannelModel:
    ber: float = 0.0
    loss: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.ber < 1.0:
            raise ValueError(f"ber must be in [0, 1), got {self.ber}")
        if not 0.0 <= self.loss <= 1.0:
            raise ValueError(f"loss must be in [0, 1], got {self.loss}")
        if not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must fit in 64 bits")


def apply_channel(frames: Iterable[bytes], model: ChannelModel):
    """Drop and corrupt frames.

    Returns a list of ``(frame_bytes, dropped)``; dropped frames are returned
    unchanged with ``dropped=True``. Uses its own PCG64 stream seeded from
    ``model.seed``, so results depend only on the seed and frame order.
    """
    rng = np.random.Generator(np.random.PCG64(model.seed))
    out = []
    for frame in frames:
        frame = bytes(frame)
        if rng.random() < model.loss:
            out.append((frame, True))
            continue
        if model.ber > 0 and frame:
            flips = rng.random(8 * len(frame)) < model.ber
            if flips.any():
                mask = np.packbits(flips)
                frame = (np.frombuffer(frame, np.uint8) ^ mask).tobytes()
        out.append((frame, False))
    return out


def _framing(framing) -> Framing:
    framing = Framing(framing)
    if framing not in FRAMING_OVERHEAD:
        raise ValueError(f"no efficiency model for {framing.value} framing")
    return framing


def net_efficiency(x: int, ber: float, framing=Framing.AX25) -> float:
    """Fraction of channel bits that deliver pixel data, for PDP length ``x``.

    ``(x - 7) / (x + h) * (1 - ber) ** (8 * (x + h))`` with ``h`` the framing
    overhead in bytes.
    """
    if x < MIN_PDP_LEN:
        raise ValueError(f"pdp length must be at least {MIN_PDP_LEN}")
    h = FRAMING_OVERHEAD[_framing(framing)]
    return (x - PDP_HEADER_LEN) / (x + h) * math.exp(8 * (x + h) * math.log1p(-ber))


def ber_from_loss(loss_percent: float) -> float:
    """BER implied by a packet loss percentage on a full-size AX.25 frame."""
    if not 0 <= loss_percent < 100:
        raise ValueError("packet loss must be in [0, 100)")
    return -math.expm1(math.log1p(-loss_percent / 100) / LOSS_REFERENCE_BITS)


def frame_survival(ber: float, frame_bits: int) -> float:
    return math.exp(frame_bits * math.log1p(-ber))


PDP_RANGE = range(MIN_PDP_LEN, MAX_PDP_LEN + 1)


def optimal_pdp(ber: float, framing=Framing.AX25) -> tuple[int, float]:
    """Best PDP length by exhaustive scan; ties go to the larger length."""
    if not 0 <= ber < 1:
        raise ValueError("ber must be in [0, 1)")
    best = max(PDP_RANGE, key=lambda x: (net_efficiency(x, ber, framing), x))
    return best, net_efficiency(best, ber, framing)


@dataclass(frozen=True)
class EfficiencyPoint:
    pdp_len: int
    framing: Framing
    ber: float
    efficiency: float


def efficiency_curves(bers: Sequence[float], framings=(Framing.SSDV, Framing.AX25)):
    return [EfficiencyPoint(x, Framing(f), ber, net_efficiency(x, ber, f))
            for f in framings for ber in bers for x in PDP_RANGE]


CSV_COLUMNS = ("framing", "pdp_len", "ber", "efficiency")


def write_curves_csv(points: Iterable[EfficiencyPoint], fh) -> int:
    w = csv.writer(fh)
    w.writerow(CSV_COLUMNS)
    n = 0
    for p in points:
        w.writerow((p.framing.value, p.pdp_len, repr(p.ber), f"{p.efficiency:.10g}"))
        n += 1
    return n
