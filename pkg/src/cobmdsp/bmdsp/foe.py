"""Fine carrier-offset estimation from the periodic Preamble A."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError, EstimationUnreliable
from ..sigcore import DspParams, DualPolBurst

REFINE_LAG = 32  # symbols; a common period of both Preamble A patterns


def _lag_product(data: np.ndarray, lag: int) -> complex:
    """Sum of r*(n) r(n + lag) over every n with n + lag inside the segment."""
    if data.shape[-1] <= lag:
        raise EstimationUnreliable("segment shorter than the correlation lag")
    return complex(np.sum(np.conj(data[..., :-lag]) * data[..., lag:]))


def phase_slope(data: np.ndarray, lag: int, fs: float) -> float:
    """Frequency in Hz from the mean phase advance over ``lag`` samples."""
    return float(fs / (2 * np.pi * lag) * np.angle(_lag_product(data, lag)))


def fine_foe(
    pre_a_rx: DualPolBurst,
    params: DspParams,
    period: int = 2,
    refine_lag: int | None = REFINE_LAG,
    pols: str = "x",
    margin_symbols: int = 8,
) -> float:
    """Residual carrier offset in Hz.

    The first estimate uses lag ``period`` symbols (2 for the X pattern,
    unambiguous over +-Rs/4). When ``refine_lag`` is set, a second estimate at
    that lag resolves the remaining offset with a proportionally smaller
    variance; the first estimate picks the correct branch of its ambiguity.
    ``pols`` is ``"x"``, ``"y"`` or ``"both"``.
    """
    if period <= 0:
        raise ConfigurationError("period must be positive")
    sps = int(round(pre_a_rx.fs / params.rs))
    if pols == "x":
        data = pre_a_rx.x[None, :]
    elif pols == "y":
        data = pre_a_rx.y[None, :]
    elif pols == "both":
        data = pre_a_rx.stack()
    else:
        raise ConfigurationError(f"unknown polarization selector {pols!r}")
    if pols != "x" and period % 4:
        raise ConfigurationError("the Y pattern repeats every 4 symbols; use a period that is a multiple of 4")
    m = margin_symbols * sps
    data = data[:, m : data.shape[1] - m] if data.shape[1] > 2 * m else data

    coarse = phase_slope(data, period * sps, pre_a_rx.fs)
    if not refine_lag:
        return coarse
    lag = refine_lag * sps
    derot = data * np.exp(-2j * np.pi * coarse * np.arange(data.shape[1]) / pre_a_rx.fs)
    return coarse + phase_slope(derot, lag, pre_a_rx.fs)
