"""Compressed-sensing image reconstruction.

Each of the Y, Cb and Cr planes is recovered independently by minimizing

    sum over received pixels n of (IDCT(X)_n - b_n)**2  +  C * sum |X|

over the orthonormal 2-D DCT coefficients ``X``. The minimizer is found with a
monotone accelerated proximal-gradient method (MFISTA). Pixel values live on
the 0..255 scale so ``C`` in the 3..5 range is meaningful.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import fft
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .image_model import Image, dequantize_channel, ycbcr_to_image
from .pdp import PdpError, PdpPayload
from .pixel_sequence import TransmissionPlan, packet_slice

log = logging.getLogger(__name__)

# gradient of the data term is 2 * DCT(mask * (IDCT(X) - b)); its Lipschitz
# constant is 2 because the masked orthonormal operator has norm <= 1
LIPSCHITZ = 2.0


def dct2d(channel) -> np.ndarray:
    return fft.dctn(np.asarray(channel, dtype=float), type=2, norm="ortho")


def idct2d(coef) -> np.ndarray:
    return fft.idctn(np.asarray(coef, dtype=float), type=2, norm="ortho")


def soft_threshold(x: np.ndarray, t: float) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


@dataclass(frozen=True)
class SolverConfig:
    C: float = 4.0
    max_iters: int = 500
    tol: float = 1e-6
    accelerated: bool = True
    step: float = 1.0 / LIPSCHITZ

    def __post_init__(self):
        if self.C < 0:
            raise ValueError("C must be non-negative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not 0 < self.step <= 1.0 / LIPSCHITZ:
            raise ValueError(f"step must be in (0, {1.0 / LIPSCHITZ}]")


def _dense_samples(samples, shape):
    """``samples`` -> (mask, values) arrays of ``shape``.

    ``samples`` is a mapping of column-major linear index to value, or a pair
    of (indices, values) sequences; later duplicates win.
    """
    rows, cols = shape
    if isinstance(samples, Mapping):
        idx = np.fromiter(samples.keys(), dtype=np.int64, count=len(samples))
        val = np.fromiter(samples.values(), dtype=float, count=len(samples))
    else:
        idx, val = (np.asarray(a) for a in samples)
        idx = idx.astype(np.int64).ravel()
        val = val.astype(float).ravel()
    if idx.size != val.size:
        raise ValueError("indices and values differ in length")
    if idx.size and (idx.min() < 0 or idx.max() >= rows * cols):
        raise IndexError("sample index outside the image")
    mask = np.zeros(rows * cols, dtype=bool)
    b = np.zeros(rows * cols)
    mask[idx] = True
    b[idx] = val  # sequential assignment: last write wins
    return mask.reshape(shape, order="F"), b.reshape(shape, order="F")


def objective(X, samples, C: float, shape=None) -> float:
    X = np.asarray(X, dtype=float)
    mask, b = _dense_samples(samples, X.shape if shape is None else shape)
    return _objective(X, mask, b, C)


def _objective(X, mask, b, C):
    r = (idct2d(X) - b)[mask]
    return float(r @ r + C * np.abs(X).sum())


def smooth_gradient(X, mask, b) -> np.ndarray:
    """Gradient of the squared-error term with respect to ``X``."""
    return 2.0 * dct2d(mask * (idct2d(X) - b))


@dataclass
class _Result:
    coef: np.ndarray
    history: list = field(default_factory=list)
    converged: bool = False

    @property
    def n_iter(self):
        return len(self.history) - 1


def _mfista(mask, b, cfg: SolverConfig) -> _Result:
    step, thresh = cfg.step, cfg.C * cfg.step
    x = np.zeros(mask.shape)
    fx = _objective(x, mask, b, cfg.C)
    res = _Result(x, [fx])
    y, t = x, 1.0
    for _ in range(cfg.max_iters):
        z = soft_threshold(y - step * smooth_gradient(y, mask, b), thresh)
        fz = _objective(z, mask, b, cfg.C)
        accepted = fz <= fx
        x_new, f_new = (z, fz) if accepted else (x, fx)
        if cfg.accelerated:
            t_new = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
            y = x_new + (t / t_new) * (z - x_new) + ((t - 1.0) / t_new) * (x_new - x)
            t = t_new
        else:
            y = x_new
        decrease = fx - f_new
        x, fx = x_new, f_new
        res.history.append(fx)
        if accepted and decrease <= cfg.tol * max(abs(fx), 1e-300):
            res.converged = True
            break
    res.coef = x
    return res


class DctBasisPursuit(RegressorMixin, BaseEstimator):
    """Fill in a raster from scattered pixel samples by L1 fitting in the DCT domain.

    ``fit`` takes integer ``(row, col)`` coordinates and the observed values;
    ``predict`` returns the reconstruction at any coordinates. The full
    raster is available as ``image_`` after fitting.

    Parameters
    ----------
    shape : tuple of int
        Raster size ``(rows, cols)``.
    C : float
        Weight of the L1 penalty.
    max_iter : int
    tol : float
        Stop once an iteration lowers the objective by less than ``tol``
        relative to its value.
    accelerated : bool
        Use momentum (MFISTA); otherwise plain ISTA. Both are monotone.
    clip : tuple or None
        Range the output raster is clamped to.
    """

    def __init__(self, shape=None, C=4.0, max_iter=500, tol=1e-6,
                 accelerated=True, clip=(0.0, 255.0)):
        self.shape = shape
        self.C = C
        self.max_iter = max_iter
        self.tol = tol
        self.accelerated = accelerated
        self.clip = clip

    def _shape(self):
        if self.shape is None or len(self.shape) != 2 or min(self.shape) < 1:
            raise ValueError("shape must be a (rows, cols) pair")
        return tuple(int(s) for s in self.shape)

    def _coords(self, X, rows, cols):
        X = check_array(X, dtype=np.int64)
        if X.shape[1] != 2:
            raise ValueError("X must hold (row, col) pairs")
        if (X < 0).any() or (X[:, 0] >= rows).any() or (X[:, 1] >= cols).any():
            raise IndexError("coordinates outside the raster")
        return X

    def fit(self, X, y):
        rows, cols = self._shape()
        X, y = check_X_y(X, y, dtype=None, y_numeric=True)
        X = self._coords(X, rows, cols)
        cfg = SolverConfig(C=self.C, max_iters=self.max_iter, tol=self.tol,
                           accelerated=self.accelerated)
        lin = X[:, 0] + X[:, 1] * rows
        mask, b = _dense_samples((lin, y), (rows, cols))
        res = _mfista(mask, b, cfg)
        if not res.converged:
            log.warning("basis pursuit stopped after %d iterations without "
                        "reaching tol=%g", res.n_iter, self.tol)
        self.coef_ = res.coef
        self.objective_history_ = np.asarray(res.history)
        self.n_iter_ = res.n_iter
        self.converged_ = res.converged
        img = idct2d(res.coef)
        if self.clip is not None:
            img = np.clip(img, *self.clip)
        self.image_ = img
        return self

    def predict(self, X):
        check_is_fitted(self, "image_")
        X = self._coords(X, *self.image_.shape)
        return self.image_[X[:, 0], X[:, 1]]


def solve_channel(samples, dims, cfg: SolverConfig | None = None) -> np.ndarray:
    """Reconstruct one ``dims``-shaped plane from sparse samples.

    ``samples`` maps column-major linear pixel index to value (or is an
    ``(indices, values)`` pair). The result is clamped to [0, 255].
    """
    cfg = cfg or SolverConfig()
    rows, cols = dims
    if isinstance(samples, Mapping):
        idx = np.fromiter(samples.keys(), dtype=np.int64, count=len(samples))
        val = np.fromiter(samples.values(), dtype=float, count=len(samples))
    else:
        idx, val = (np.ravel(np.asarray(a)) for a in samples)
    if idx.size == 0:
        raise ValueError("cannot reconstruct from zero samples")
    est = DctBasisPursuit(shape=(rows, cols), C=cfg.C, max_iter=cfg.max_iters,
                          tol=cfg.tol, accelerated=cfg.accelerated)
    coords = np.column_stack([idx % rows, idx // rows])
    return est.fit(coords, val).image_


class ReceivedPixelSet:
    """Pixel samples of one image accumulated across received packets.

    Values are stored dequantized (0..255). Re-received pixels overwrite
    earlier ones.
    """

    def __init__(self, plan: TransmissionPlan, image_id: int = 0):
        self.plan = plan
        self.image_id = image_id
        self.y: dict[int, int] = {}
        self.cb: dict[int, int] = {}
        self.cr: dict[int, int] = {}
        self.packet_ids: set[int] = set()
        self.n_packets = 0

    @classmethod
    def from_payload(cls, payload: PdpPayload) -> "ReceivedPixelSet":
        h = payload.header
        plan = TransmissionPlan(h.rows, h.cols, h.bits, h.n_color,
                                len(payload.grey_samples))
        rx = cls(plan, h.image_id)
        rx.add(payload)
        return rx

    @property
    def dims(self):
        return self.plan.rows, self.plan.cols

    def add(self, payload: PdpPayload) -> None:
        h, plan = payload.header, self.plan
        if (h.image_id != self.image_id or (h.rows, h.cols) != self.dims
                or h.bits != plan.bits or h.n_color != plan.n_color
                or len(payload.grey_samples) != plan.n_grey):
            raise PdpError("payload does not match this image's plan")
        color_idx, grey_idx = packet_slice(plan, h.packet_id)
        b = plan.bits
        for k, (y, cb, cr) in zip(color_idx.tolist(), payload.color_samples):
            self.y[k] = dequantize_channel(y, b)
            self.cb[k] = dequantize_channel(cb, b)
            self.cr[k] = dequantize_channel(cr, b)
        for k, y in zip(grey_idx.tolist(), payload.grey_samples):
            self.y[k] = dequantize_channel(y, b)
            # a later grey-only copy of a colour pixel keeps the old chroma
        self.packet_ids.add(h.packet_id)
        self.n_packets += 1

    def coverage(self) -> float:
        return len(self.y) / self.plan.total_pixels


def reconstruct(rx: ReceivedPixelSet, cfg: SolverConfig | None = None) -> Image:
    if not rx.packet_ids or not rx.y:
        raise ValueError("no packets received")
    cfg = cfg or SolverConfig()
    dims = rx.dims
    planes = [solve_channel(rx.y, dims, cfg)]
    for chroma in (rx.cb, rx.cr):
        if chroma:
            planes.append(solve_channel(chroma, dims, cfg))
        else:
            planes.append(np.full(dims, 128.0))
    return ycbcr_to_image(np.stack(planes, axis=-1))


def psnr(a: Image, b: Image) -> float:
    """Peak signal-to-noise ratio in dB over all RGB samples (inf if equal)."""
    pa, pb = np.asarray(a.pixels, float), np.asarray(b.pixels, float)
    if pa.shape != pb.shape:
        raise ValueError(f"image sizes differ: {pa.shape} vs {pb.shape}")
    mse = np.mean((pa - pb) ** 2)
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / mse)
