"""Preamble, pilot and burst-frame construction.

Frame layout per polarization::

    | Preamble A (128) | Preamble B (3 x L_B) | pilot + 31 payload | ... | pilot + 5 payload |

Preamble A carries the clock tones: X is ``(-1)^n`` (lines at +-Rs/2) and Y is
the period-4 pattern ``[1, 1, -1, -1]`` (lines at +-Rs/4). Both are real,
unit-modulus and exactly periodic, so each tone shows up as a symmetric pair
around the carrier once the burst is pulse-shaped.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigurationError, InputShapeError
from .sigcore import QAM16, DualPolBurst, QamGrid, qam16_demap, qam16_map, rrc_shape

SIGN_X = (1, 1, -1)
SIGN_Y = (-1, 1, 1)


@dataclass(frozen=True)
class PreambleA:
    x_symbols: np.ndarray
    y_symbols: np.ndarray
    period_x: int = 2
    period_y: int = 4


@dataclass(frozen=True)
class PreambleB:
    bx: np.ndarray
    by: np.ndarray
    sign_x: tuple = SIGN_X
    sign_y: tuple = SIGN_Y

    @property
    def lb(self) -> int:
        return len(self.bx)

    @property
    def assembled_x(self) -> np.ndarray:
        return np.concatenate([s * self.bx for s in self.sign_x])

    @property
    def assembled_y(self) -> np.ndarray:
        return np.concatenate([s * self.by for s in self.sign_y])

    def blocks(self) -> np.ndarray:
        """Transmitted blocks as an array of shape (2, 3, L_B)."""
        return np.stack(
            [
                np.stack([s * self.bx for s in self.sign_x]),
                np.stack([s * self.by for s in self.sign_y]),
            ]
        )


@dataclass(frozen=True)
class FrameLayout:
    n_pre_a: int = 128
    lb: int = 64
    pilot_block: int = 32
    n_payload: int = 32400

    @property
    def n_pre_b(self) -> int:
        return 3 * self.lb

    @property
    def n_preamble(self) -> int:
        return self.n_pre_a + self.n_pre_b

    @property
    def n_pilot(self) -> int:
        return math.ceil(self.n_payload / (self.pilot_block - 1))

    @property
    def total(self) -> int:
        return self.n_preamble + self.n_payload + self.n_pilot

    def duration(self, rs: float) -> float:
        return self.total / rs

    def pilot_indices(self) -> np.ndarray:
        return self.n_preamble + self.pilot_block * np.arange(self.n_pilot)

    def payload_indices(self) -> np.ndarray:
        body = np.arange(self.n_preamble, self.total)
        mask = np.ones(body.size, dtype=bool)
        mask[self.pilot_indices() - self.n_preamble] = False
        return body[mask]

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(n_pre_b=self.n_pre_b, n_pilot=self.n_pilot, total=self.total)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "FrameLayout":
        layout = cls(**{k: d[k] for k in ("n_pre_a", "lb", "pilot_block", "n_payload") if k in d})
        for derived in ("n_pre_b", "n_pilot", "total"):
            if derived in d and d[derived] != getattr(layout, derived):
                raise ConfigurationError(f"layout field {derived}={d[derived]} is inconsistent")
        return layout


@dataclass(frozen=True)
class PilotSource:
    """Deterministic pilot sequence shared by transmitter and receiver."""

    seed: int = 2024
    grid: QamGrid = field(default=QAM16, repr=False, compare=False)

    def symbols(self, n: int) -> np.ndarray:
        idx = np.random.default_rng(self.seed).integers(0, 4, size=(2, n))
        return self.grid.outer_qpsk[idx]


@dataclass(frozen=True)
class Frame:
    symbols: np.ndarray  # (2, total)
    layout: FrameLayout
    pilots: np.ndarray  # (2, n_pilot)
    payload_bits: np.ndarray  # (2, 4 * n_payload)


def gen_preamble_a(params=None, n_symbols: int = 128) -> PreambleA:
    # params is accepted for interface symmetry; the symbol pattern is rate-free
    n = np.arange(n_symbols)
    x = np.where(n % 2 == 0, 1.0, -1.0).astype(complex)
    y = np.where((n % 4) < 2, 1.0, -1.0).astype(complex)
    return PreambleA(x, y)


def gen_cazac(length: int = 64, seed: int = 1) -> np.ndarray:
    """Even-length Zadoff-Chu sequence ``exp(-j*pi*u*n^2/N)``."""
    if length % 2:
        raise ConfigurationError("only even-length CAZAC sequences are supported")
    if math.gcd(seed, length) != 1:
        raise ConfigurationError(f"CAZAC root {seed} is not coprime with length {length}")
    n = np.arange(length)
    return np.exp(-1j * np.pi * seed * n * n / length)


def build_preamble_b(u_x: int = 1, u_y: int | None = None, lb: int = 64) -> PreambleB:
    """Signed CAZAC blocks; the Y root defaults to ``lb - 1``, the conjugate of root 1.

    Roots such as 3 leave partial-correlation sidelobes at about ``lb/3`` that
    cost several dB of sync margin on Y.
    """
    u_y = lb - 1 if u_y is None else u_y
    if u_x == u_y:
        raise ConfigurationError("X and Y CAZAC roots must differ")
    return PreambleB(gen_cazac(lb, u_x), gen_cazac(lb, u_y))


def _split_bits(payload_bits: np.ndarray, n_payload: int) -> np.ndarray:
    bits = np.asarray(payload_bits)
    per_pol = 4 * n_payload
    if bits.size != 2 * per_pol:
        raise InputShapeError(f"expected {2 * per_pol} payload bits, got {bits.size}")
    return bits.reshape(2, per_pol).astype(np.int8)


def build_frame(
    payload_bits: np.ndarray,
    pre_a: PreambleA | None = None,
    pre_b: PreambleB | None = None,
    pilots: PilotSource | None = None,
    layout: FrameLayout | None = None,
) -> Frame:
    pre_a = pre_a or gen_preamble_a()
    pre_b = pre_b or build_preamble_b()
    pilots = pilots or PilotSource()
    layout = layout or FrameLayout(n_pre_a=len(pre_a.x_symbols), lb=pre_b.lb)
    if layout.n_pre_a != len(pre_a.x_symbols) or layout.lb != pre_b.lb:
        raise ConfigurationError("layout does not match the supplied preambles")

    bits = _split_bits(payload_bits, layout.n_payload)
    out = np.zeros((2, layout.total), dtype=complex)
    out[0, : layout.n_pre_a] = pre_a.x_symbols
    out[1, : layout.n_pre_a] = pre_a.y_symbols
    out[0, layout.n_pre_a : layout.n_preamble] = pre_b.assembled_x
    out[1, layout.n_pre_a : layout.n_preamble] = pre_b.assembled_y
    pil = pilots.symbols(layout.n_pilot)
    out[:, layout.pilot_indices()] = pil
    payload_idx = layout.payload_indices()
    for p in range(2):
        out[p, payload_idx] = qam16_map(bits[p])
    return Frame(out, layout, pil, bits)


def random_payload(layout: FrameLayout, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2, size=(2, 4 * layout.n_payload), dtype=np.int8)


def deserialize(symbols: np.ndarray, layout: FrameLayout) -> np.ndarray:
    """Hard-demap the payload of a frame-aligned (2, total) symbol array to bits."""
    symbols = np.asarray(symbols)
    if symbols.shape != (2, layout.total):
        raise InputShapeError(f"expected shape (2, {layout.total}), got {symbols.shape}")
    idx = layout.payload_indices()
    return np.stack([qam16_demap(symbols[p, idx]) for p in range(2)])


def shape_frame(frame: Frame, params, span: int = 32) -> DualPolBurst:
    """Pulse-shape both polarizations of a frame at ``params.fs``."""
    return DualPolBurst(
        rrc_shape(frame.symbols[0], params, span).samples,
        rrc_shape(frame.symbols[1], params, span).samples,
        params.fs,
    )
