"""Pseudo-random pixel ordering shared by transmitter and receiver.

Both ends run the same linear congruential generator (GCC constants, seed 1)
through a Fisher-Yates shuffle of the linear pixel indices. A packet with id
``k`` carries the ``P`` consecutive permutation entries starting at ``k * P``
(modulo the pixel count). Pixels are indexed column-major: linear index
``k`` is row ``k % rows``, column ``k // rows``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .image_model import check_dimensions

LCG_MULTIPLIER = 1103515245
LCG_INCREMENT = 12345
LCG_MODULUS = 1 << 31
LCG_SEED = 1

PDP_HEADER_LEN = 7
MAX_PDP_LEN = 256


class PlanError(ValueError):
    pass


def lcg_next(state: int) -> tuple[int, int]:
    """Advance the generator once; returns ``(new_state, output)``."""
    nxt = (LCG_MULTIPLIER * state + LCG_INCREMENT) % LCG_MODULUS
    return nxt, nxt


class Lcg:
    def __init__(self, seed: int = LCG_SEED):
        if not 0 <= seed < LCG_MODULUS:
            raise ValueError("seed out of range")
        self.state = seed

    def __iter__(self):
        return self

    def __next__(self) -> int:
        self.state, out = lcg_next(self.state)
        return out


@lru_cache(maxsize=16)
def _permutation(total: int) -> np.ndarray:
    order = list(range(total))
    state = LCG_SEED
    a, c, m = LCG_MULTIPLIER, LCG_INCREMENT, LCG_MODULUS
    for i in range(total - 1, 0, -1):
        state = (a * state + c) % m
        j = state % (i + 1)
        order[i], order[j] = order[j], order[i]
    arr = np.asarray(order, dtype=np.int64)
    arr.setflags(write=False)
    return arr


def build_permutation(rows: int, cols: int) -> np.ndarray:
    """Transmission order of the ``rows * cols`` linear pixel indices.

    The returned array is cached and read-only.
    """
    total = rows * cols
    if total < 1:
        raise ValueError("image must contain at least one pixel")
    return _permutation(total)


def linear_to_rowcol(k, rows: int, cols: int):
    if isinstance(k, np.ndarray):
        if np.any((k < 0) | (k >= rows * cols)):
            raise IndexError("pixel index out of range")
    elif not 0 <= k < rows * cols:
        raise IndexError(f"pixel index {k} out of range for {rows}x{cols}")
    return k % rows, k // rows


def rowcol_to_linear(row, col, rows: int):
    return row + col * rows


@dataclass(frozen=True)
class TransmissionPlan:
    """Per-image constants every packet of that image shares."""

    rows: int
    cols: int
    bits: int
    n_color: int
    n_grey: int

    def __post_init__(self):
        check_dimensions(self.cols, self.rows)
        if not 1 <= self.bits <= 8:
            raise PlanError(f"bits per channel must be in [1, 8], got {self.bits}")
        if self.n_color < 0 or self.n_grey < 0 or self.pixels_per_packet < 1:
            raise PlanError("a packet must carry at least one pixel")
        if self.n_color > 255:
            raise PlanError("n_color does not fit the uint8 header field")
        if self.pdp_len > MAX_PDP_LEN:
            raise PlanError(
                f"payload needs {self.pdp_len} bytes, limit is {MAX_PDP_LEN}"
            )
        if self.padding_bits >= self.bits:
            # the receiver infers n_grey from the payload length
            raise PlanError(
                f"{self.padding_bits} padding bits would be read back as extra "
                f"grey pixels at {self.bits} bits per sample"
            )

    @property
    def pixels_per_packet(self) -> int:
        return self.n_color + self.n_grey

    @property
    def total_pixels(self) -> int:
        return self.rows * self.cols

    @property
    def sample_bits(self) -> int:
        return (3 * self.n_color + self.n_grey) * self.bits

    @property
    def pdp_len(self) -> int:
        return PDP_HEADER_LEN + math.ceil(self.sample_bits / 8)

    @property
    def padding_bits(self) -> int:
        return 8 * (self.pdp_len - PDP_HEADER_LEN) - self.sample_bits

    @property
    def packets_per_pass(self) -> int:
        """Packets needed to send every pixel at least once."""
        return math.ceil(self.total_pixels / self.pixels_per_packet)


def make_plan(
    rows: int,
    cols: int,
    *,
    pdp_size: int = MAX_PDP_LEN,
    bits: int = 4,
    n_color: int | None = None,
    n_grey: int | None = None,
    color_fraction: float = 0.25,
) -> TransmissionPlan:
    """Choose pixel counts that fill a payload of at most ``pdp_size`` bytes.

    Unspecified counts are filled greedily: ``n_color`` defaults to the
    largest value keeping the colour/grey ratio at ``color_fraction`` and
    ``n_grey`` then takes the remaining room.
    """
    if not PDP_HEADER_LEN < pdp_size <= MAX_PDP_LEN:
        raise PlanError(f"pdp size must be in [{PDP_HEADER_LEN + 1}, {MAX_PDP_LEN}]")
    if not 1 <= bits <= 8:
        raise PlanError(f"bits per channel must be in [1, 8], got {bits}")
    room = 8 * (pdp_size - PDP_HEADER_LEN)
    if n_color is None:
        if n_grey is not None:
            n_color = (room - n_grey * bits) // (3 * bits)
        elif color_fraction <= 0:
            n_color = 0
        else:
            # one colour pixel costs 3 samples, each grey pixel 1
            per_color = 3 + (1 - color_fraction) / color_fraction
            n_color = int(room // (per_color * bits))
        n_color = max(0, min(n_color, 255))
    if n_grey is None:
        n_grey = max(0, (room - 3 * n_color * bits) // bits)
    plan = TransmissionPlan(rows, cols, bits, n_color, n_grey)
    if plan.pdp_len > pdp_size:
        raise PlanError(
            f"{n_color} colour + {n_grey} grey pixels at {bits} bits need "
            f"{plan.pdp_len} bytes, more than {pdp_size}"
        )
    return plan


def packet_slice(plan: TransmissionPlan, packet_id: int):
    """Linear pixel indices carried by ``packet_id``: ``(color, grey)``."""
    if not 0 <= packet_id <= 0xFFFF:
        raise ValueError("packet id must fit in uint16")
    perm = build_permutation(plan.rows, plan.cols)
    total = plan.total_pixels
    p = plan.pixels_per_packet
    start = (packet_id * p) % total
    idx = perm[(start + np.arange(p)) % total]
    return idx[: plan.n_color], idx[plan.n_color:]
