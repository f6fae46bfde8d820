"""One-tap polarization (SOP) estimation and recovery from the Preamble A tones."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..channel import jones_matrix
from ..errors import EstimationUnreliable
from ..sigcore import DspParams, DualPolBurst

THETA_GRID = 1024


@dataclass(frozen=True)
class SopEstimate:
    alpha_hat: float
    theta_hat: float
    tone_powers: dict = field(default_factory=dict)


def tone_amplitudes(segment: DualPolBurst, params: DspParams, margin_symbols: int = 16) -> np.ndarray:
    """Complex line amplitudes, shape (pol, line) for lines (-Rs/2, +Rs/2, -Rs/4, +Rs/4).

    Only the central part of the segment is used so that filter transients at
    the preamble edges stay out of the measurement.
    """
    sps = params.sps
    m = margin_symbols * sps
    data = segment.stack()[:, m : len(segment) - m]
    usable = (data.shape[1] // (4 * sps)) * 4 * sps  # whole Y periods keep lines orthogonal
    data = data[:, :usable]
    n = np.arange(usable)
    freqs = np.array([-0.5, 0.5, -0.25, 0.25]) * params.rs
    basis = np.exp(-2j * np.pi * np.outer(n, freqs) / params.fs)
    return data @ basis


def _split(amps: np.ndarray):
    rx2, ry2 = amps[0, :2], amps[1, :2]
    rx4, ry4 = amps[0, 2:], amps[1, 2:]
    return rx2, ry2, rx4, ry4


def power_sum(amps: np.ndarray, alpha: float, thetas: np.ndarray) -> np.ndarray:
    """|S_X(Rs/2)|^2 + |S_Y(Rs/4)|^2 after inverse-Jones recovery, for each theta."""
    rx2, ry2, rx4, ry4 = _split(amps)
    a, b = np.sqrt(1 - alpha), np.sqrt(alpha)
    e = np.exp(1j * np.asarray(thetas))[:, None]
    sx2 = a * rx2[None, :] + b * e * ry2[None, :]
    sy4 = -b * np.conj(e) * rx4[None, :] + a * ry4[None, :]
    return np.sum(np.abs(sx2) ** 2, axis=1) + np.sum(np.abs(sy4) ** 2, axis=1)


def _refine_sinusoid(thetas: np.ndarray, values: np.ndarray) -> float:
    """Exact peak of A + B cos(t) + C sin(t) through three samples."""
    m = np.column_stack([np.ones(3), np.cos(thetas), np.sin(thetas)])
    _, b, c = np.linalg.solve(m, values)
    return float(np.arctan2(c, b))


def estimate_sop(
    pre_a_rx: DualPolBurst, params: DspParams, margin_symbols: int = 16, min_tone_fraction: float = 0.3
) -> SopEstimate:
    amps = tone_amplitudes(pre_a_rx, params, margin_symbols)
    rx2, ry2, rx4, ry4 = _split(amps)
    p = {
        "x_rs2": float(np.sum(np.abs(rx2) ** 2)),
        "x_rs4": float(np.sum(np.abs(rx4) ** 2)),
        "y_rs2": float(np.sum(np.abs(ry2) ** 2)),
        "y_rs4": float(np.sum(np.abs(ry4) ** 2)),
    }
    sps = params.sps
    m = margin_symbols * sps
    used = ((len(pre_a_rx) - 2 * m) // (4 * sps)) * 4 * sps
    seg = pre_a_rx.stack()[:, m : m + used]
    energy = np.sum(np.abs(seg) ** 2)
    total = sum(p.values())
    if used <= 0 or total < min_tone_fraction * used * energy:
        raise EstimationUnreliable("Preamble A tones are below the noise floor")

    alpha = (p["y_rs2"] + p["x_rs4"]) / total
    grid = 2 * np.pi * np.arange(THETA_GRID) / THETA_GRID
    curve = power_sum(amps, alpha, grid)
    k = int(np.argmax(curve))
    idx = np.array([k - 1, k, k + 1]) % THETA_GRID
    local = grid[k] + np.array([-1, 0, 1]) * (2 * np.pi / THETA_GRID)
    theta = _refine_sinusoid(local, curve[idx]) if alpha > 0 else grid[k]
    return SopEstimate(float(alpha), float(np.mod(theta, 2 * np.pi)), p)


def recover_sop(burst: DualPolBurst, est: SopEstimate) -> DualPolBurst:
    """Multiply by the inverse (conjugate-transpose) Jones matrix."""
    j_inv = jones_matrix(est.alpha_hat, est.theta_hat).conj().T
    return DualPolBurst.from_array(j_inv @ burst.stack(), burst.fs)
