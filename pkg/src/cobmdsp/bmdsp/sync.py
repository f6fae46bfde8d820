"""Frame synchronization on the signed CAZAC blocks of Preamble B."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from ..errors import InputShapeError, SyncFailure
from ..metrics import pmnr
from ..preambles import PreambleB
from ..sigcore import DualPolBurst


@dataclass(frozen=True)
class SyncResult:
    position: tuple  # index of the first Preamble B symbol, per polarization
    peak: float
    pmnr_db: float
    pol: int = 0  # polarization with the stronger peak
    offset: int = 0  # stream index of metric[0]
    metric: np.ndarray = field(default=None, repr=False, compare=False)  # (2, n) for X and Y

    @property
    def start(self) -> int:
        """Preamble B position taken from the stronger polarization."""
        return int(self.position[self.pol])

    def to_dict(self) -> dict:
        return {"position": list(self.position), "peak": self.peak, "pmnr_db": self.pmnr_db, "pol": self.pol}


def correlation(r: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Normalized correlation ``M(n) = 2 sum r(n+i) b*(i) / sum |r(n+i)|^2`` for every full window."""
    lb = len(b)
    if len(r) < lb:
        raise InputShapeError("stream shorter than one Preamble B block")
    num = fftconvolve(r, np.conj(b[::-1]), mode="valid")
    c = np.concatenate([[0.0], np.cumsum(np.abs(r) ** 2)])
    den = c[lb:] - c[:-lb]
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.where(den > 0, 2 * num / den, 0)
    return m


def timing_metric(r: np.ndarray, b: np.ndarray, signs) -> np.ndarray:
    """``P(n) = |s0 M(n) + s1 M(n + L) + s2 M(n + 2L)|^2``."""
    lb = len(b)
    m = correlation(r, b)
    n = len(m) - 2 * lb
    if n <= 0:
        raise InputShapeError("stream shorter than the assembled Preamble B")
    acc = signs[0] * m[:n] + signs[1] * m[lb : lb + n] + signs[2] * m[2 * lb : 2 * lb + n]
    return np.abs(acc) ** 2


def structural_lags(lb: int) -> tuple:
    """Offsets from the peak where the shifted correlations overlap the preamble itself.

    At ``+-2 L_B`` the sign patterns leave a deterministic |2|^2 sidelobe
    against a |6|^2 peak; ``+-L_B`` cancel ideally but sit on the same
    preamble structure. Neither is noise, so PMNR skips them.
    """
    return (-2 * lb, -lb, lb, 2 * lb)


def frame_sync(
    burst: DualPolBurst,
    pre_b: PreambleB,
    expected: int | None = None,
    search: int = 256,
    exclusion: int = 2,
    min_pmnr_db: float = 6.0,
) -> SyncResult:
    """Locate Preamble B in a symbol-rate burst.

    Only ``expected +- search`` symbols are scanned when ``expected`` is given.
    PMNR is reported for the stronger polarization; if it falls under
    ``min_pmnr_db`` the burst is rejected.
    """
    data = burst.stack()
    lo = 0 if expected is None else max(0, expected - search)
    hi = data.shape[1] if expected is None else min(data.shape[1], expected + search + 3 * pre_b.lb)
    seg = data[:, lo:hi]
    px = timing_metric(seg[0], pre_b.bx, pre_b.sign_x)
    py = timing_metric(seg[1], pre_b.by, pre_b.sign_y)
    metric = np.stack([px, py])
    peaks = np.argmax(metric, axis=1)
    best = int(np.argmax(metric[[0, 1], peaks]))
    peak_val = float(metric[best, peaks[best]])
    if not peak_val > 0:
        raise SyncFailure("timing metric has no positive peak")
    pmnr_db = pmnr(metric[best], int(peaks[best]), exclusion, structural_lags(pre_b.lb))
    if pmnr_db < min_pmnr_db:
        raise SyncFailure(f"timing-metric PMNR {pmnr_db:.1f} dB is below {min_pmnr_db} dB")
    return SyncResult(tuple(int(p + lo) for p in peaks), peak_val, pmnr_db, best, lo, metric)
