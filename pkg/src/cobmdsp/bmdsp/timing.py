"""Godard timing recovery with a beat-clocked, delayed PI loop."""

from __future__ import annotations

import numpy as np

from ..errors import ConvergenceFailure
from ..sigcore import DspParams, DualPolBurst
from .loop import LoopConfig

_HALF = 16  # interpolator half-length in samples
_KAISER_BETA = 8.0


def interpolate(samples: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """Kaiser-windowed sinc interpolation of ``samples`` (..., N) at fractional positions."""
    positions = np.asarray(positions, dtype=float)
    base = np.floor(positions).astype(int)
    frac = positions - base
    offs = np.arange(-_HALF + 1, _HALF + 1)
    d = frac[:, None] - offs[None, :]
    win = np.i0(_KAISER_BETA * np.sqrt(np.clip(1 - (d / _HALF) ** 2, 0, None))) / np.i0(_KAISER_BETA)
    h = np.sinc(d) * win
    idx = base[:, None] + offs[None, :]
    valid = (idx >= 0) & (idx < samples.shape[-1])
    taps = samples[..., np.clip(idx, 0, samples.shape[-1] - 1)] * valid
    return np.sum(taps * h, axis=-1)


def godard_ted(block: np.ndarray, params: DspParams) -> float:
    """Timing error in symbols from the spectral correlation around +-Rs/2.

    ``block`` has shape (pols, n) at two samples per symbol. The excess-band
    product ``X(f) X*(f + Rs)`` for f near -Rs/2 rotates by ``2*pi*tau``.
    """
    n = block.shape[-1]
    # a Hann window removes the bias that block-edge leakage puts on the rotation
    spec = np.fft.fft(block * np.hanning(n), axis=-1)
    shift = int(round(params.rs / params.fs * n))
    center = -int(round(params.rs / 2 / params.fs * n))
    half = max(1, int(np.ceil(params.rolloff / 2 * params.rs / params.fs * n)))
    k = center + np.arange(-half, half + 1)
    acc = np.sum(spec[..., k % n] * np.conj(spec[..., (k + shift) % n]))
    return float(np.angle(acc) / (2 * np.pi))


def timing_recover(
    burst: DualPolBurst,
    params: DspParams,
    tau_init: float | None = 0.0,
    loop: LoopConfig | None = None,
    n_symbols: int | None = None,
    tau_limit: float = 2.0,
):
    """Resample a 2-SPS burst to one sample per symbol.

    Symbol ``k`` is taken at sample ``sps * (k + tau)``, where ``tau`` starts
    at ``tau_init`` and is driven by the Godard detector once per beat. An
    error measured at beat ``b`` only acts from beat ``b + tr_delay_beats``.

    Returns the 1-SPS burst and the per-beat tau trajectory.
    """
    loop = loop or LoopConfig()
    sps = params.sps
    data = burst.stack()
    tau0 = 0.0 if tau_init is None else float(tau_init)
    max_sym = int((len(burst) - _HALF) / sps - abs(tau0) - 1)
    n_symbols = max_sym if n_symbols is None else min(n_symbols, max_sym)
    beat = loop.beat_symbols
    n_beats = int(np.ceil(n_symbols / beat))

    if not loop.tr_enabled:
        pos = sps * (np.arange(n_symbols) + tau0)
        out = interpolate(data, pos)
        return DualPolBurst(out[0], out[1], params.rs), np.full(n_beats, tau0)

    out = np.empty((2, n_symbols), dtype=complex)
    traj = np.empty(n_beats)
    errors = np.zeros(n_beats)
    acc = integ = 0.0
    half_steps = np.arange(2 * beat) / 2.0
    for b in range(n_beats):
        tau = tau0 + acc
        if not np.isfinite(tau) or abs(tau) > tau_limit:
            raise ConvergenceFailure(f"timing loop left +-{tau_limit} symbols at beat {b}")
        traj[b] = tau
        k0 = b * beat
        cnt = min(beat, n_symbols - k0)
        pos = sps * (k0 + half_steps[: 2 * cnt] + tau)
        fine = interpolate(data, pos)
        out[:, k0 : k0 + cnt] = fine[:, ::2]
        errors[b] = godard_ted(fine, params) if cnt == beat else 0.0
        lag = b - loop.tr_delay_beats
        if lag >= 0:
            integ += loop.tr_ki * errors[lag]
            acc += loop.tr_kp * errors[lag] + integ
    return DualPolBurst(out[0], out[1], params.rs), traj
