"""Pilot-aided carrier phase recovery."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InputShapeError
from ..preambles import FrameLayout

SLIP_THRESHOLD = np.pi / 2


@dataclass(frozen=True)
class CprResult:
    symbols: np.ndarray  # (2, total) phase-corrected frame
    phase: np.ndarray  # (2, total) removed phase in rad
    pilot_phase: np.ndarray  # (2, n_pilot) unwrapped phase at the pilots
    warnings: list = field(default_factory=list)


def pilot_phase(symbols: np.ndarray, layout: FrameLayout, pilots: np.ndarray, smooth: int = 1):
    """Unwrapped phase at each pilot, shape (2, n_pilot), and cycle-slip warnings.

    ``smooth`` > 1 averages the complex pilot products over that many
    neighbouring pilots before taking the angle.
    """
    symbols = np.asarray(symbols)
    if symbols.shape != (2, layout.total):
        raise InputShapeError(f"expected shape (2, {layout.total}), got {symbols.shape}")
    if pilots.shape != (2, layout.n_pilot):
        raise InputShapeError("pilot array does not match the layout")
    prod = symbols[:, layout.pilot_indices()] * np.conj(pilots)
    if smooth > 1:
        kernel = np.ones(smooth)
        num = np.stack([np.convolve(p, kernel, mode="same") for p in prod])
        cnt = np.convolve(np.ones(prod.shape[1]), kernel, mode="same")
        prod = num / cnt
    raw = np.angle(prod)
    phase = np.unwrap(raw, axis=1)
    warnings = []
    jumps = np.abs(np.diff(phase, axis=1))
    for pol, idx in zip(*np.nonzero(jumps > SLIP_THRESHOLD)):
        warnings.append(f"possible cycle slip on pol {'XY'[pol]} between pilots {idx} and {idx + 1}")
    return phase, warnings


def interpolate_phase(pilot_ph: np.ndarray, layout: FrameLayout) -> np.ndarray:
    """Linear interpolation of pilot phases onto every frame index (held flat outside the pilots)."""
    idx = layout.pilot_indices()
    k = np.arange(layout.total)
    return np.stack([np.interp(k, idx, p) for p in pilot_ph])


def pilot_cpr(symbols: np.ndarray, layout: FrameLayout, pilots: np.ndarray, smooth: int = 1) -> CprResult:
    """Rotate out the pilot-interpolated carrier phase of a frame-aligned (2, total) stream."""
    ph, warnings = pilot_phase(symbols, layout, pilots, smooth)
    full = interpolate_phase(ph, layout)
    return CprResult(np.asarray(symbols) * np.exp(-1j * full), full, ph, warnings)
