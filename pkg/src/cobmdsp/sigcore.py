"""Signal containers and shared numerical primitives.

Conventions used across the package:

* ``dft`` is unscaled, ``idft`` carries the ``1/N`` factor.
* Shaped streams place symbol ``k`` at sample ``k * k_os``; filter group
  delay is removed so receiver indices line up with transmitter indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy import signal as sps

from .errors import ConfigurationError, InputShapeError

__all__ = [
    "PolStream",
    "DualPolBurst",
    "DspParams",
    "QamGrid",
    "QAM16",
    "qam16_map",
    "qam16_demap",
    "rrc_taps",
    "rrc_shape",
    "matched_filter",
    "resample",
    "dft",
    "idft",
]


@dataclass(frozen=True)
class PolStream:
    samples: np.ndarray
    fs: float

    def __post_init__(self):
        if not self.fs > 0:
            raise ConfigurationError(f"sample rate must be positive, got {self.fs}")
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=complex))

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class DualPolBurst:
    """Two aligned complex streams (X and Y polarization) at a common rate."""

    x: np.ndarray
    y: np.ndarray
    fs: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=complex)
        y = np.asarray(self.y, dtype=complex)
        if x.shape != y.shape or x.ndim != 1:
            raise InputShapeError(f"polarizations differ in shape: {x.shape} vs {y.shape}")
        if not self.fs > 0:
            raise ConfigurationError(f"sample rate must be positive, got {self.fs}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_array(cls, arr: np.ndarray, fs: float) -> "DualPolBurst":
        arr = np.asarray(arr)
        if arr.ndim != 2 or arr.shape[0] != 2:
            raise InputShapeError(f"expected shape (2, N), got {arr.shape}")
        return cls(arr[0], arr[1], fs)

    def stack(self) -> np.ndarray:
        return np.vstack([self.x, self.y])

    def __len__(self) -> int:
        return len(self.x)

    def pol(self, name: str) -> PolStream:
        return PolStream({"x": self.x, "y": self.y}[name.lower()], self.fs)

    def segment(self, start: int, stop: int) -> "DualPolBurst":
        return DualPolBurst(self.x[start:stop], self.y[start:stop], self.fs)

    def power(self) -> float:
        return float(np.mean(np.abs(self.x) ** 2 + np.abs(self.y) ** 2))


class DspParams(BaseModel):
    """Symbol rate, oversampling, DFT size and pulse roll-off."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    rs: float = Field(32e9, gt=0, description="symbol rate in Baud")
    k_os: float = Field(2.0, ge=2, description="samples per symbol")
    n_dft: int = Field(1024, gt=0)
    rolloff: float = Field(0.1, gt=0, lt=1)

    @field_validator("n_dft")
    @classmethod
    def _power_of_two(cls, v: int) -> int:
        if v & (v - 1):
            raise ValueError(f"n_dft must be a power of two, got {v}")
        return v

    @property
    def fs(self) -> float:
        return self.rs * self.k_os

    @property
    def sps(self) -> int:
        """Integer samples per symbol; shaping and timing need this."""
        k = int(round(self.k_os))
        if abs(k - self.k_os) > 1e-12:
            raise ConfigurationError(f"k_os={self.k_os} is not an integer")
        return k


class QamGrid:
    """Gray-labeled square 16QAM with unit mean power.

    Label bits ``b3 b2 b1 b0`` (MSB first) split as two Gray-coded PAM-4
    rails: the two high bits select the in-phase level and the two low bits
    the quadrature level.
    """

    _PAM = np.array([-3.0, -1.0, 3.0, 1.0])  # index = 2-bit Gray label

    def __init__(self):
        self.order = 16
        labels = np.arange(16)
        i_level = self._PAM[labels >> 2]
        q_level = self._PAM[labels & 3]
        self.points = (i_level + 1j * q_level) / np.sqrt(10.0)

    @cached_property
    def outer_qpsk(self) -> np.ndarray:
        """Four corner points, used as pilots."""
        return self.points[np.isclose(np.abs(self.points), np.abs(self.points).max())]

    def decide(self, symbols: np.ndarray) -> np.ndarray:
        """Nearest-point labels; ties go to the smaller label."""
        symbols = np.asarray(symbols, dtype=complex)
        flat = symbols.reshape(-1)
        labels = np.empty(flat.size, dtype=np.int64)
        chunk = 1 << 16
        for s in range(0, flat.size, chunk):
            d = np.abs(flat[s : s + chunk, None] - self.points[None, :])
            labels[s : s + chunk] = np.argmin(d, axis=1)
        return labels.reshape(symbols.shape)

    def slice(self, symbols: np.ndarray) -> np.ndarray:
        return self.points[self.decide(symbols)]


QAM16 = QamGrid()


def qam16_map(bits: np.ndarray, grid: QamGrid = QAM16) -> np.ndarray:
    bits = np.asarray(bits).astype(np.int64).reshape(-1)
    if bits.size % 4:
        raise InputShapeError(f"bit count {bits.size} is not divisible by 4")
    if bits.size and (bits.min() < 0 or bits.max() > 1):
        raise InputShapeError("bits must be 0 or 1")
    groups = bits.reshape(-1, 4)
    labels = groups @ np.array([8, 4, 2, 1])
    return grid.points[labels]


def qam16_demap(symbols: np.ndarray, grid: QamGrid = QAM16) -> np.ndarray:
    labels = grid.decide(np.asarray(symbols).reshape(-1))
    return ((labels[:, None] >> np.array([3, 2, 1, 0])) & 1).reshape(-1).astype(np.int8)


def rrc_taps(rolloff: float, span: int, sps: int) -> np.ndarray:
    """Unit-energy root-raised-cosine impulse response of ``span*sps + 1`` taps."""
    if span < 16 or span % 2:
        raise ConfigurationError(f"RRC span must be even and >= 16, got {span}")
    beta = rolloff
    t = np.arange(-span * sps // 2, span * sps // 2 + 1) / sps
    h = np.empty_like(t)
    center = np.isclose(t, 0.0)
    edge = np.isclose(np.abs(4 * beta * t), 1.0)
    rest = ~(center | edge)
    h[center] = 1.0 - beta + 4 * beta / np.pi
    h[edge] = beta / np.sqrt(2) * (
        (1 + 2 / np.pi) * np.sin(np.pi / (4 * beta)) + (1 - 2 / np.pi) * np.cos(np.pi / (4 * beta))
    )
    tr = t[rest]
    h[rest] = (
        np.sin(np.pi * tr * (1 - beta)) + 4 * beta * tr * np.cos(np.pi * tr * (1 + beta))
    ) / (np.pi * tr * (1 - (4 * beta * tr) ** 2))
    h *= np.kaiser(h.size, 1.0)  # mild taper: ISI stays below -40 dB
    return h / np.sqrt(np.sum(h**2))


def _fir_same(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    # taps are odd-length and symmetric: center tap sits at len//2
    full = sps.fftconvolve(x, taps)
    d = len(taps) // 2
    return full[d : d + len(x)]


def rrc_shape(symbols: np.ndarray, params: DspParams, span: int = 32) -> PolStream:
    """Upsample to ``params.fs`` and pulse-shape with an RRC filter."""
    k = params.sps
    taps = rrc_taps(params.rolloff, span, k)
    up = np.zeros(len(symbols) * k, dtype=complex)
    up[::k] = symbols
    return PolStream(_fir_same(up, taps), params.fs)


def matched_filter(samples: np.ndarray, params: DspParams, span: int = 32) -> np.ndarray:
    """RRC matched filter; shaping then matching yields unit gain at symbol instants."""
    taps = rrc_taps(params.rolloff, span, params.sps)
    return _fir_same(np.asarray(samples, dtype=complex), taps)


def resample(stream: PolStream, new_fs: float) -> PolStream:
    """Band-limited rational resampling (polyphase, Kaiser-windowed)."""
    if not (stream.fs > 0 and new_fs > 0):
        raise ConfigurationError("sample rates must be positive")
    ratio = Fraction(new_fs / stream.fs).limit_denominator(64)
    if ratio.numerator > 64 or abs(float(ratio) - new_fs / stream.fs) > 1e-12 * new_fs / stream.fs:
        raise ConfigurationError(f"rate ratio {new_fs}/{stream.fs} is not a small rational p/q <= 64/64")
    if ratio == 1:
        return PolStream(stream.samples.copy(), stream.fs)
    p, q = ratio.numerator, ratio.denominator
    out = sps.resample_poly(stream.samples, p, q, window=("kaiser", 10.0))
    return PolStream(out, new_fs)


def dft(block: np.ndarray, n: int | None = None) -> np.ndarray:
    block = np.asarray(block, dtype=complex)
    if n is not None and block.shape[-1] != n:
        raise InputShapeError(f"block length {block.shape[-1]} != n_dft {n}")
    return np.fft.fft(block, axis=-1)


def idft(spectrum: np.ndarray, n: int | None = None) -> np.ndarray:
    spectrum = np.asarray(spectrum, dtype=complex)
    if n is not None and spectrum.shape[-1] != n:
        raise InputShapeError(f"spectrum length {spectrum.shape[-1]} != n_dft {n}")
    return np.fft.ifft(spectrum, axis=-1)
