"""Front-end blocks: carrier derotation, matched filtering, dispersion compensation."""

from __future__ import annotations

import numpy as np

from ..channel import cd_phase
from ..sigcore import DspParams, DualPolBurst, matched_filter


def derotate(burst: DualPolBurst, delta_f: float, start_index: int = 0) -> DualPolBurst:
    """Remove a carrier offset; ``start_index`` keeps the phase continuous across slices."""
    n = np.arange(start_index, start_index + len(burst))
    rot = np.exp(-2j * np.pi * delta_f * n / burst.fs)
    return DualPolBurst(burst.x * rot, burst.y * rot, burst.fs)


def matched_filter_burst(burst: DualPolBurst, params: DspParams, span: int = 32) -> DualPolBurst:
    return DualPolBurst(matched_filter(burst.x, params, span), matched_filter(burst.y, params, span), burst.fs)


def cdc(burst: DualPolBurst, fiber_km: float, disp_ps_nm_km: float = 17.0, lambda_nm: float = 1550.0) -> DualPolBurst:
    """Frequency-domain inverse of the fiber dispersion response."""
    if fiber_km == 0:
        return burst
    h = np.exp(-1j * cd_phase(len(burst), burst.fs, fiber_km, disp_ps_nm_km, lambda_nm))
    return DualPolBurst.from_array(np.fft.ifft(np.fft.fft(burst.stack(), axis=1) * h, axis=1), burst.fs)


def retime(burst: DualPolBurst, tau_symbols: float, rs: float) -> DualPolBurst:
    """Advance a burst by ``tau_symbols`` with a linear-phase FFT filter (static retiming).

    The timing loop uses a short time-domain interpolator instead, since its
    delay changes every beat.
    """
    if tau_symbols == 0:
        return burst
    f = np.fft.fftfreq(len(burst), 1.0 / burst.fs)
    h = np.exp(2j * np.pi * f * tau_symbols / rs)
    return DualPolBurst.from_array(np.fft.ifft(np.fft.fft(burst.stack(), axis=1) * h, axis=1), burst.fs)
