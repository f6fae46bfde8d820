"""2x2 MIMO equalizer with beat-clocked, delayed DD-LMS adaptation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from ..errors import ConvergenceFailure, InputShapeError
from ..sigcore import QAM16, QamGrid
from .chanest import ChanEstimate
from .loop import LoopConfig

DIVERGENCE_FACTOR = 10.0
DIVERGENCE_BEATS = 10


@dataclass(frozen=True)
class EqualizerResult:
    symbols: np.ndarray  # (2, n_out)
    mse_trajectory: np.ndarray  # per beat, phase-referenced
    taps: np.ndarray  # final (2, 2, n_taps) impulse responses, delay -n_taps/2 at index 0


def taps_to_time(est: ChanEstimate) -> np.ndarray:
    """Per-bin response to a centred impulse response: index m holds delay ``m - n/2``."""
    return np.fft.fftshift(np.fft.ifft(est.taps, axis=-1), axes=-1)


def taps_to_freq(taps: np.ndarray) -> np.ndarray:
    return np.fft.fft(np.fft.ifftshift(taps, axes=-1), axis=-1)


def _filter(x: np.ndarray, taps: np.ndarray, start: int, count: int) -> np.ndarray:
    """Outputs ``start .. start+count`` of ``y_p(k) = sum_q sum_m taps[p,q,m] x_q(k + n/2 - m)``.

    ``x`` is already zero-padded by ``n/2`` on the left and ``n/2`` on the
    right, so padded index ``k + n/2`` is input ``k``.
    """
    n = taps.shape[-1]
    seg = x[:, start + 1 : start + count + n]
    out = np.zeros((2, count), dtype=complex)
    for p in range(2):
        for q in range(2):
            out[p] += fftconvolve(seg[q], taps[p, q], mode="valid")
    return out


def _gradient(x: np.ndarray, err: np.ndarray, start: int, n: int) -> np.ndarray:
    """``sum_k e_p(k) conj(x_q(k + n/2 - m))`` for every tap m."""
    count = err.shape[1]
    seg = x[:, start + 1 : start + count + n]
    grad = np.empty((2, 2, n), dtype=complex)
    for p in range(2):
        for q in range(2):
            # correlation of the error with the input, reversed onto the tap axis
            grad[p, q] = fftconvolve(np.conj(seg[q]), err[p][::-1], mode="valid")[::-1]
    return grad


def mimo_equalize(
    stream: np.ndarray,
    init: ChanEstimate,
    loop: LoopConfig | None = None,
    grid: QamGrid = QAM16,
    start: int = 0,
    n_out: int | None = None,
    known: np.ndarray | None = None,
    phase: np.ndarray | None = None,
) -> EqualizerResult:
    """Equalize ``n_out`` symbols of a 1-SPS (2, n) ``stream`` starting at ``start``.

    Taps start from ``init`` and are held for one beat at a time. After each
    beat a DD-LMS gradient is formed against the reference: ``known`` symbols
    where given (NaN marks unknown positions), hard decisions elsewhere. The
    reference is rotated by ``phase`` (per pol and output index) so that the
    taps need not follow the carrier phase. A gradient formed at beat ``b``
    changes the taps from beat ``b + eq_delay_beats + 1`` on.
    """
    loop = loop or LoopConfig()
    stream = np.asarray(stream)
    if stream.ndim != 2 or stream.shape[0] != 2:
        raise InputShapeError("stream must have shape (2, n)")
    n_out = stream.shape[1] - start if n_out is None else n_out
    taps = taps_to_time(init).astype(complex)
    n = taps.shape[-1]
    half = n // 2
    x = np.zeros((2, stream.shape[1] + n), dtype=complex)
    x[:, half : half + stream.shape[1]] = stream
    # window the input to the requested range so edge taps see zeros outside it
    lo, hi = max(0, start - half), min(stream.shape[1], start + n_out + half)
    x[:, half : half + lo] = 0
    x[:, half + hi :] = 0

    beat = loop.beat_symbols
    n_beats = int(np.ceil(n_out / beat))
    power = np.mean(np.abs(stream[:, start : start + n_out]) ** 2)
    step = loop.ddlms_mu / max(power, 1e-300)
    rot = np.ones((2, n_out)) if phase is None else np.exp(1j * np.asarray(phase)[:, :n_out])

    out = np.empty((2, n_out), dtype=complex)
    mse = np.empty(n_beats)
    pending = {}
    above = 0
    for b in range(n_beats):
        j0 = b * beat
        cnt = min(beat, n_out - j0)
        y = _filter(x, taps, start + j0, cnt)
        out[:, j0 : j0 + cnt] = y
        derot = y * np.conj(rot[:, j0 : j0 + cnt])
        ref = grid.slice(derot)
        if known is not None:
            kn = known[:, j0 : j0 + cnt]
            ref = np.where(np.isnan(kn), ref, kn)
        err = (ref - derot) * rot[:, j0 : j0 + cnt]
        mse[b] = float(np.mean(np.abs(err) ** 2))
        if loop.eq_enabled:
            pending[b + loop.eq_delay_beats] = _gradient(x, err, start + j0, n)
            if b in pending:
                taps = taps + step * pending.pop(b)
        ref_mse = float(np.median(mse[: min(b + 1, 5)]))  # the first beats set the yardstick
        above = above + 1 if mse[b] > DIVERGENCE_FACTOR * ref_mse else 0
        if above >= DIVERGENCE_BEATS or not np.isfinite(mse[b]):
            raise ConvergenceFailure(f"equalizer MSE diverged at beat {b}")
    return EqualizerResult(out, mse, taps)
