"""Parametric impairment model for the burst upstream.

Impairments are applied in physical order: polarization rotation, fiber
dispersion, sampling delay, laser offset and phase noise, and finally
receiver noise (added over the assembled TDMA stream).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .errors import ConfigurationError
from .sigcore import DualPolBurst

C_LIGHT = 299_792_458.0


class ChannelConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float = Field(0.0, ge=0.0, le=1.0, description="power split ratio")
    theta: float = Field(0.0, ge=0.0, lt=2 * np.pi, description="relative phase, rad")
    delta_f: float = Field(0.0, description="carrier frequency offset, Hz")
    tau: float = Field(0.0, gt=-0.5, le=0.5, description="sampling offset, symbols")
    fiber_km: float = Field(20.0, ge=0.0)
    disp_ps_nm_km: float = Field(17.0, ge=0.0)
    lambda_nm: float = Field(1550.0, gt=0.0)
    linewidth_hz: float = Field(200e3, ge=0.0)
    snr_db: float = Field(float("inf"), description="per-polarization SNR at the simulation rate")
    guard_ns: float = Field(45.0, ge=0.0)
    gain_db: float = Field(0.0, description="burst amplitude offset")

    @field_validator("snr_db")
    @classmethod
    def _snr_not_nan(cls, v: float) -> float:
        if np.isnan(v):
            raise ValueError("snr_db must not be NaN")
        return v


def jones_matrix(alpha: float, theta: float) -> np.ndarray:
    if not 0.0 <= alpha <= 1.0:
        raise ConfigurationError(f"alpha must lie in [0, 1], got {alpha}")
    a, b = np.sqrt(1.0 - alpha), np.sqrt(alpha)
    return np.array([[a, -b * np.exp(1j * theta)], [b * np.exp(-1j * theta), a]])


def apply_jones(burst: DualPolBurst, alpha: float, theta: float) -> DualPolBurst:
    return DualPolBurst.from_array(jones_matrix(alpha, theta) @ burst.stack(), burst.fs)


def cd_phase(n: int, fs: float, fiber_km: float, disp_ps_nm_km: float, lambda_nm: float) -> np.ndarray:
    """Phase of the fiber all-pass response on an FFT grid of ``n`` bins."""
    d = disp_ps_nm_km * 1e-6  # ps/(nm km) -> s/m^2
    lam = lambda_nm * 1e-9
    f = np.fft.fftfreq(n, 1.0 / fs)
    return -np.pi * d * lam**2 * fiber_km * 1e3 / C_LIGHT * f**2


def apply_cd(
    burst: DualPolBurst, fiber_km: float, disp_ps_nm_km: float = 17.0, lambda_nm: float = 1550.0
) -> DualPolBurst:
    if fiber_km == 0:
        return burst
    h = np.exp(1j * cd_phase(len(burst), burst.fs, fiber_km, disp_ps_nm_km, lambda_nm))
    return DualPolBurst.from_array(np.fft.ifft(np.fft.fft(burst.stack(), axis=1) * h, axis=1), burst.fs)


def phase_noise(n: int, linewidth_hz: float, fs: float, rng: np.random.Generator) -> np.ndarray:
    """Wiener phase with per-sample increment variance ``2*pi*linewidth/fs``."""
    if linewidth_hz == 0:
        return np.zeros(n)
    steps = rng.normal(0.0, np.sqrt(2 * np.pi * linewidth_hz / fs), n)
    steps[0] = 0.0
    return np.cumsum(steps)


def apply_cfo_pn(
    burst: DualPolBurst, delta_f: float, linewidth_hz: float = 0.0, rng_seed: int | None = 0
) -> DualPolBurst:
    if delta_f == 0 and linewidth_hz == 0:
        return burst
    n = np.arange(len(burst))
    phi = 2 * np.pi * delta_f * n / burst.fs
    phi = phi + phase_noise(len(burst), linewidth_hz, burst.fs, np.random.default_rng(rng_seed))
    rot = np.exp(1j * phi)
    return DualPolBurst(burst.x * rot, burst.y * rot, burst.fs)


def apply_frac_delay(burst: DualPolBurst, tau_symbols: float, rs: float = 32e9) -> DualPolBurst:
    """Delay by ``tau_symbols`` symbol periods with a linear-phase FFT filter."""
    if tau_symbols == 0:
        return burst
    f = np.fft.fftfreq(len(burst), 1.0 / burst.fs)
    h = np.exp(-2j * np.pi * f * tau_symbols / rs)
    return DualPolBurst.from_array(np.fft.ifft(np.fft.fft(burst.stack(), axis=1) * h, axis=1), burst.fs)


def add_awgn(
    burst: DualPolBurst, snr_db: float, rng_seed: int | None = 0, ref_power: float | None = None
) -> DualPolBurst:
    """Add circular Gaussian noise at ``snr_db`` per polarization.

    ``ref_power`` is the per-polarization signal power the SNR refers to;
    by default it is measured on the input.
    """
    if np.isinf(snr_db) and snr_db > 0:
        return burst
    p = burst.power() / 2 if ref_power is None else ref_power
    if not p > 0:
        raise ConfigurationError("cannot set an SNR on a zero-power signal")
    var = p / 10 ** (snr_db / 10)
    rng = np.random.default_rng(rng_seed)
    noise = (rng.standard_normal((2, len(burst))) + 1j * rng.standard_normal((2, len(burst)))) * np.sqrt(var / 2)
    return DualPolBurst.from_array(burst.stack() + noise, burst.fs)


def impair_burst(burst: DualPolBurst, cfg: ChannelConfig, rs: float, seed: int = 0) -> DualPolBurst:
    """Everything except noise, in propagation order."""
    out = apply_jones(burst, cfg.alpha, cfg.theta)
    out = apply_cd(out, cfg.fiber_km, cfg.disp_ps_nm_km, cfg.lambda_nm)
    out = apply_frac_delay(out, cfg.tau, rs)
    return apply_cfo_pn(out, cfg.delta_f, cfg.linewidth_hz, seed)


@dataclass
class UplinkScene:
    stream: DualPolBurst
    configs: list
    starts: list = field(default_factory=list)  # sample index where each burst begins
    lengths: list = field(default_factory=list)
    guard_samples: int = 0


def assemble_uplink(
    bursts: list,
    configs: list,
    guard_ns: float | None = None,
    rs: float = 32e9,
    seed: int = 0,
    impair: bool = True,
) -> UplinkScene:
    """Build ``[guard | burst1 | guard | burst2 | ... | guard]`` and add receiver noise.

    Each burst gets its own channel realization and gain. The noise floor is
    fixed by the first burst's ``snr_db`` relative to its power at 0 dB gain,
    so a burst with a -3 dB gain sees a 3 dB lower SNR.
    """
    if not bursts:
        raise ConfigurationError("at least one burst is required")
    if len(bursts) != len(configs):
        raise ConfigurationError("one ChannelConfig per burst is required")
    fs = bursts[0].fs
    guard_ns = configs[0].guard_ns if guard_ns is None else guard_ns
    guard = int(round(guard_ns * 1e-9 * fs))

    pieces, starts, lengths = [], [], []
    ref_power = None
    pos = guard
    for i, (b, cfg) in enumerate(zip(bursts, configs)):
        if b.fs != fs:
            raise ConfigurationError("all bursts must share one sample rate")
        out = impair_burst(b, cfg, rs, seed=seed * 1000 + i) if impair else b
        if ref_power is None:
            ref_power = out.power() / 2
        out_arr = out.stack() * 10 ** (cfg.gain_db / 20)
        pieces.append(np.zeros((2, guard), dtype=complex))
        pieces.append(out_arr)
        starts.append(pos)
        lengths.append(len(b))
        pos += len(b) + guard
    if guard:
        pieces.append(np.zeros((2, guard), dtype=complex))
    stream = DualPolBurst.from_array(np.hstack(pieces), fs)
    stream = add_awgn(stream, configs[0].snr_db, rng_seed=seed * 1000 + 999, ref_power=ref_power)
    return UplinkScene(stream, list(configs), starts, lengths, guard)
