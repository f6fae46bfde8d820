"""BER, PMNR and sweep statistics, plus the reference solvers the tests rely on."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special, stats

from .errors import InputShapeError, SingularOracle, UndefinedMetric

FEC_LIMIT = 2.4e-2
FIRST_N_BITS = 20000


@dataclass(frozen=True)
class BerRecord:
    bits_compared: int
    bit_errors: int
    ber: float
    ber_first_20k: float
    error_positions: np.ndarray = field(repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "bits_compared": self.bits_compared,
            "bit_errors": self.bit_errors,
            "ber": self.ber,
            "ber_first_20k": self.ber_first_20k,
            "n_error_positions": int(self.error_positions.size),
        }


def ber(tx_bits, rx_bits, first_n: int | None = FIRST_N_BITS) -> BerRecord:
    """Exact bit comparison.

    For 2-D inputs each row is one polarization's bit stream and the
    ``first_n`` window is taken from the start of every row; for 1-D inputs it
    is the first ``first_n`` bits.
    """
    tx = np.asarray(tx_bits)
    rx = np.asarray(rx_bits)
    if tx.shape != rx.shape:
        raise InputShapeError(f"bit arrays differ in shape: {tx.shape} vs {rx.shape}")
    if tx.size == 0 or tx.ndim > 2:
        raise InputShapeError("expected a non-empty 1-D or 2-D bit array")
    wrong = np.atleast_2d(tx != rx)
    pos = np.flatnonzero(wrong)
    n = wrong.shape[1] if first_n is None else min(first_n, wrong.shape[1])
    window = wrong[:, :n]
    return BerRecord(tx.size, int(pos.size), pos.size / tx.size, float(window.mean()), pos)


def pmnr(metric, peak_index: int, exclusion: int = 2, lags=()) -> float:
    """Peak over the largest sample outside ``peak +- exclusion``, in dB.

    ``lags`` lists further offsets from the peak (each widened by
    ``exclusion``) that hold structural sidelobes rather than noise.
    """
    m = np.asarray(metric, dtype=float)
    if m.size <= 2 * exclusion + 1:
        raise InputShapeError("metric is not longer than the exclusion window")
    if not np.any(m > 0):
        raise UndefinedMetric("timing metric is identically zero")
    keep = np.ones(m.size, dtype=bool)
    for lag in (0, *lags):
        c = peak_index + lag
        keep[max(0, c - exclusion) : max(0, c + exclusion + 1)] = False
    if not keep.any():
        raise UndefinedMetric("no samples left outside the exclusion windows")
    noise = float(np.max(m[keep]))
    if m[peak_index] <= 0:
        raise UndefinedMetric("peak value is not positive")
    if noise <= 0:
        return math.inf
    return float(10 * np.log10(m[peak_index] / noise))


def ls_oracle(rx_blocks, tx_blocks, rtol: float = 1e-12) -> np.ndarray:
    """Per-bin least-squares 2x2 equalizer from stacked training blocks.

    ``rx_blocks`` and ``tx_blocks`` are time-domain arrays of shape
    (2, n_blocks, n_bins). Returns taps of shape (2, 2, n_bins) with
    ``taps[p, q]`` weighting received polarization q into output p.
    The normal equations are formed and inverted explicitly through the
    adjugate in extended precision, so that the reference stays accurate on
    ill-conditioned bins where double precision loses digits.
    """
    r = np.fft.fft(np.asarray(rx_blocks, dtype=complex), axis=-1)
    t = np.fft.fft(np.asarray(tx_blocks, dtype=complex), axis=-1)
    if r.shape != t.shape or r.ndim != 3 or r.shape[0] != 2:
        raise InputShapeError("blocks must have shape (2, n_blocks, n_bins)")
    r, t = r.astype(np.clongdouble), t.astype(np.clongdouble)
    n_bins = r.shape[-1]
    taps = np.empty((2, 2, n_bins), dtype=np.clongdouble)
    scale = np.mean(np.abs(r) ** 2) * r.shape[1]
    bad = []
    for k in range(n_bins):
        a = r[:, :, k].T  # rows are blocks, columns are received pols
        g = a.conj().T @ a
        det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
        if abs(det) <= rtol * scale**2:
            bad.append(k)
            continue
        g_inv = np.array([[g[1, 1], -g[0, 1]], [-g[1, 0], g[0, 0]]]) / det
        for p in range(2):
            taps[p, :, k] = g_inv @ (a.conj().T @ t[p, :, k])
    if bad:
        raise SingularOracle(f"normal equations are singular at {len(bad)} bins", bad)
    return taps.astype(complex)


def snr_for_ber(target: float = FEC_LIMIT, sps: int = 2) -> float:
    """Per-polarization SNR (dB at ``sps`` samples per symbol) where Gray 16QAM on AWGN reaches ``target``."""

    def ber16(esn0_db):
        g = 10 ** (esn0_db / 10)
        return 0.375 * special.erfc(np.sqrt(g / 10))  # (3/4) Q(sqrt(Es / 5N0))

    esn0 = optimize.brentq(lambda x: ber16(x) - target, -10.0, 40.0, xtol=1e-10)
    return float(esn0 - 10 * np.log10(sps))


def evm(rx, ref) -> float:
    """RMS error vector magnitude relative to the reference power."""
    rx, ref = np.asarray(rx), np.asarray(ref)
    return float(np.sqrt(np.mean(np.abs(rx - ref) ** 2) / np.mean(np.abs(ref) ** 2)))


@dataclass(frozen=True)
class SweepPoint:
    variable: str
    value: float
    seeds: tuple
    metric: str
    mean: float
    half_width: float  # 95 % normal-approximation half-width
    worst: float  # largest magnitude over seeds, or the minimum when higher is better
    n_failed: int = 0

    @classmethod
    def from_samples(
        cls, variable: str, value: float, seeds, metric: str, samples, higher_is_better: bool = False
    ) -> "SweepPoint":
        s = np.asarray(samples, dtype=float)
        if s.size == 0:
            raise InputShapeError("a sweep point needs at least one seed")
        ok = s[np.isfinite(s)]
        if ok.size == 0:
            return cls(variable, float(value), tuple(int(x) for x in seeds), metric, math.nan, math.nan, math.nan, s.size)
        worst = float(ok.min()) if higher_is_better else float(np.max(np.abs(ok)))
        hw = float(stats.norm.ppf(0.975) * ok.std(ddof=1) / np.sqrt(ok.size)) if ok.size > 1 else 0.0
        return cls(
            variable, float(value), tuple(int(x) for x in seeds), metric,
            float(ok.mean()), hw, worst, int(s.size - ok.size),
        )


def sweep_columns(metric_names) -> list:
    cols = ["kind", "variable", "value", "seed", "n_seeds", "failed"]
    for m in metric_names:
        cols += [m, f"{m}_ci95", f"{m}_worst"]
    return cols


def sweep_csv(samples, points, metric_names) -> str:
    """One ``sample`` row per point and seed, then one ``aggregate`` row per point.

    ``samples`` are dicts with ``variable``, ``value``, ``seed``, ``failed`` and
    one entry per metric; ``points`` maps each value to ``{metric: SweepPoint}``.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(sweep_columns(metric_names))
    for s in samples:
        row = ["sample", s["variable"], s["value"], s["seed"], "", int(s["failed"])]
        for m in metric_names:
            row += [s.get(m, math.nan), "", ""]
        w.writerow(row)
    for value, per_metric in points.items():
        first = next(iter(per_metric.values()))
        row = ["aggregate", first.variable, value, "", len(first.seeds), max(p.n_failed for p in per_metric.values())]
        for m in metric_names:
            p = per_metric[m]
            row += [p.mean, p.half_width, p.worst]
        w.writerow(row)
    return buf.getvalue()


def series_csv(values, index_name: str = "beat_index", value_name: str = "value") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow((index_name, value_name))
    for i, v in enumerate(np.asarray(values).ravel()):
        w.writerow((i, repr(float(v))))
    return buf.getvalue()
