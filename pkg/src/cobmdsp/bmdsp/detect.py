"""Burst detection and coarse frequency offset from the Preamble A tones."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import NoBurstFound
from ..sigcore import DspParams, DualPolBurst


@dataclass(frozen=True)
class Detection:
    index: int  # first sample of Preamble A
    coarse_df_hz: float
    score: float  # fraction of window energy found on the tone lines
    tone_freqs_hz: tuple  # detected (-Rs/2, -Rs/4, +Rs/4, +Rs/2) lines


def tone_line_freqs(params: DspParams) -> np.ndarray:
    return np.array([-0.5, -0.25, 0.25, 0.5]) * params.rs


def _window_spectra(stream: DualPolBurst, starts: np.ndarray, w: int, n_dft: int) -> np.ndarray:
    data = stream.stack()
    frames = sliding_window_view(data, w, axis=1)[:, starts, :]  # (2, nwin, w)
    spec = np.fft.fft(frames, n=n_dft, axis=-1)
    return np.sum(np.abs(spec) ** 2, axis=0)  # (nwin, n_dft), SOP invariant


def _comb_scores(power: np.ndarray, energy: np.ndarray, params: DspParams, w: int, max_shift: int):
    n = power.shape[1]
    lines = np.round(tone_line_freqs(params) * n / params.fs).astype(int)
    shifts = np.arange(-max_shift, max_shift + 1)
    idx = (lines[:, None] + shifts[None, :]) % n
    score = power[:, idx].sum(axis=1)  # (nwin, nshift)
    best = np.argmax(score, axis=1)
    conc = score[np.arange(len(best)), best] / np.maximum(w * energy, 1e-300)
    return conc, shifts[best]


def _refine_lines(power_row: np.ndarray, shift: int, params: DspParams) -> np.ndarray:
    """Parabolic peak interpolation around each comb line."""
    n = power_row.size
    lines = np.round(tone_line_freqs(params) * n / params.fs).astype(int) + shift
    freqs = []
    for b in lines:
        lo, c, hi = power_row[(b - 1) % n], power_row[b % n], power_row[(b + 1) % n]
        lo, c, hi = np.log(lo + 1e-300), np.log(c + 1e-300), np.log(hi + 1e-300)
        den = lo - 2 * c + hi
        delta = 0.5 * (lo - hi) / den if den < 0 else 0.0
        freqs.append((b + np.clip(delta, -0.5, 0.5)) * params.fs / n)
    return np.array(freqs)


def detect_frame(
    stream: DualPolBurst,
    params: DspParams,
    window_symbols: int = 128,
    start: int = 0,
    threshold: float = 0.5,
    max_offset_hz: float | None = None,
) -> Detection:
    """Find the first Preamble A at or after ``start`` and its carrier offset.

    A window of ``window_symbols`` slides over the stream; each window is
    zero-padded to ``params.n_dft`` and matched against the four tone lines
    over a range of frequency shifts. The window whose energy is most
    concentrated on the lines marks the arrival, and the mean displacement of
    the interpolated lines is the coarse offset.
    """
    sps = params.sps
    w = window_symbols * sps
    hop = max(sps, w // 4)
    n_dft = max(params.n_dft, w)
    if max_offset_hz is None:
        max_offset_hz = 0.2 * params.rs
    max_shift = int(max_offset_hz * n_dft / params.fs)

    last = len(stream) - w
    if last < start:
        raise NoBurstFound("stream shorter than one detection window")
    energy_all = np.abs(stream.x) ** 2 + np.abs(stream.y) ** 2
    csum = np.concatenate([[0.0], np.cumsum(energy_all)])

    starts = np.arange(start, last + 1, hop)
    power = _window_spectra(stream, starts, w, n_dft)
    conc, _ = _comb_scores(power, csum[starts + w] - csum[starts], params, w, max_shift)
    hits = np.flatnonzero(conc > threshold)
    if hits.size == 0:
        raise NoBurstFound(f"no window after sample {start} holds the Preamble A tones")

    # the tone region spans about w/hop windows after the first hit
    first = hits[0]
    span = slice(first, min(first + 2 * (w // hop) + 1, len(starts)))
    coarse_best = starts[span][np.argmax(conc[span])]

    fine = np.arange(max(start, coarse_best - hop), min(last, coarse_best + hop) + 1, sps)
    pw = _window_spectra(stream, fine, w, n_dft)
    c2, s2 = _comb_scores(pw, csum[fine + w] - csum[fine], params, w, max_shift)
    k = int(np.argmax(c2))
    freqs = _refine_lines(pw[k], int(s2[k]), params)
    coarse = float(np.mean(freqs - tone_line_freqs(params)))
    return Detection(int(fine[k]), coarse, float(c2[k]), tuple(float(f) for f in freqs))
