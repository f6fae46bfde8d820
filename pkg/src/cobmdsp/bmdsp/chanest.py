"""Per-bin 2x2 channel estimation on the three Preamble B blocks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputShapeError, InternalConsistencyError, SingularEstimate

SINGULAR_RTOL = 1e-12
FORMS_RTOL = 1e-9


@dataclass(frozen=True)
class ChanEstimate:
    w_xx: np.ndarray
    w_xy: np.ndarray
    w_yx: np.ndarray
    w_yy: np.ndarray
    method: str

    @property
    def taps(self) -> np.ndarray:
        """Shape (2, 2, n_bins); ``taps[p, q]`` maps received pol q to output p."""
        return np.array([[self.w_xx, self.w_xy], [self.w_yx, self.w_yy]])

    @classmethod
    def from_taps(cls, taps: np.ndarray, method: str) -> "ChanEstimate":
        return cls(taps[0, 0], taps[0, 1], taps[1, 0], taps[1, 1], method)

    def to_dict(self) -> dict:
        out = {"method": self.method}
        for name in ("w_xx", "w_xy", "w_yx", "w_yy"):
            v = getattr(self, name)
            out[name] = {"re": v.real.tolist(), "im": v.imag.tolist()}
        return out


def block_spectra(rx_blocks, tx_blocks):
    """DFT each training block; both inputs are (2, n_blocks, L_B) in time."""
    r = np.asarray(rx_blocks, dtype=complex)
    t = np.asarray(tx_blocks, dtype=complex)
    if r.ndim != 3 or r.shape[0] != 2 or r.shape != t.shape:
        raise InputShapeError(f"expected matching (2, n_blocks, L_B) blocks, got {r.shape} and {t.shape}")
    return np.fft.fft(r, axis=-1), np.fft.fft(t, axis=-1)


def extract_blocks(symbols: np.ndarray, start: int, lb: int, n_blocks: int = 3) -> np.ndarray:
    """Cut the received Preamble B blocks from a (2, n) symbol stream."""
    stop = start + n_blocks * lb
    if start < 0 or stop > symbols.shape[-1]:
        raise InputShapeError("Preamble B blocks fall outside the stream")
    return symbols[:, start:stop].reshape(2, n_blocks, lb)


def _scale(r: np.ndarray) -> float:
    """Mean received bin power summed over blocks."""
    return float(np.mean(np.sum(np.abs(r) ** 2, axis=1)))


def _minors(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``a_i b_j - a_j b_i`` for every block pair i < j; inputs are (n_blocks, n_bins)."""
    n = a.shape[0]
    return np.array([a[i] * b[j] - a[j] * b[i] for i in range(n) for j in range(i + 1, n)])


def mmse_estimate(rx_blocks, tx_blocks) -> ChanEstimate:
    """Closed-form MMSE taps with the expectation taken as the block average.

    The 2x2 Cramer solution ``w_xx = (E[T R_X*] E|R_Y|^2 - E[T R_Y*] E[R_Y R_X*]) / det``
    and its siblings are evaluated through the Cauchy-Binet identity as sums
    over block-pair minors. The result is algebraically the same, but the
    determinant becomes a sum of squares and does not cancel on
    ill-conditioned bins.
    """
    r, t = block_spectra(rx_blocks, tx_blocks)
    rx, ry = r[0], r[1]
    n = r.shape[1]
    m = _minors(rx, ry)
    det = np.sum(np.abs(m) ** 2, axis=0) / n**2  # equals E|R_X|^2 E|R_Y|^2 - |E[R_X R_Y*]|^2
    tol = SINGULAR_RTOL * (_scale(r) / n) ** 2
    bad = np.flatnonzero(det <= tol)
    if bad.size:
        raise SingularEstimate(f"MMSE normal equations are singular at bins {bad.tolist()}", bad)
    mc = np.conj(m)
    w = np.empty((2, 2, r.shape[-1]), dtype=complex)
    for p in range(2):
        w[p, 0] = np.sum(mc * _minors(t[p], ry), axis=0) / (n**2 * det)
        w[p, 1] = np.sum(mc * _minors(rx, t[p]), axis=0) / (n**2 * det)
    return ChanEstimate.from_taps(w, "mmse")


def zf_estimate(rx_blocks, tx_blocks) -> ChanEstimate:
    """Diagonal taps ``T / R`` per block, averaged over the blocks."""
    r, t = block_spectra(rx_blocks, tx_blocks)
    mag2 = np.abs(r) ** 2
    bad = np.flatnonzero(np.any(mag2 <= SINGULAR_RTOL * np.mean(mag2), axis=(0, 1)))
    if bad.size:
        raise SingularEstimate(f"received training spectrum vanishes at bins {bad.tolist()}", bad)
    w = np.mean(t / r, axis=1)
    zero = np.zeros(r.shape[-1], dtype=complex)
    return ChanEstimate(w[0], zero, zero.copy(), w[1], "zf")


def residual(est: ChanEstimate, rx_blocks, tx_blocks) -> np.ndarray:
    """Empirical J per output polarization: mean over blocks and bins of |W R - T|^2."""
    r, t = block_spectra(rx_blocks, tx_blocks)
    y = np.einsum("pqk,qbk->pbk", est.taps, r)
    return np.mean(np.abs(y - t) ** 2, axis=(1, 2))


@dataclass(frozen=True)
class UniquenessReport:
    det_direct: np.ndarray  # per bin
    det_squares: np.ndarray  # per bin, sum of squared 2x2 minors
    consistency: np.ndarray  # (2, n_bins) for the X and Y output rows
    classification: tuple  # "unique" or "infinite" per bin

    @property
    def all_unique(self) -> bool:
        return all(c == "unique" for c in self.classification)

    @property
    def all_infinite(self) -> bool:
        return all(c == "infinite" for c in self.classification)


def mmse_uniqueness_check(rx_blocks, tx_blocks) -> UniquenessReport:
    """Classify each bin's normal equations as having a unique or infinite solution set.

    The coefficient determinant is evaluated both directly and as the sum of
    the squared minors ``|R_Xi R_Yj - R_Yi R_Xj|^2`` over block pairs; the two
    must agree. Where it vanishes, the augmented quantity
    ``sum|R_X|^2 sum R_Y* T - sum R_X* T sum R_X R_Y*`` must vanish as well.
    """
    r, t = block_spectra(rx_blocks, tx_blocks)
    rx, ry = r[0], r[1]
    sxx = np.sum(np.abs(rx) ** 2, axis=0)
    syy = np.sum(np.abs(ry) ** 2, axis=0)
    syx = np.sum(ry * np.conj(rx), axis=0)
    sxy = np.sum(rx * np.conj(ry), axis=0)
    direct = (sxx * syy - syx * sxy).real

    n_blocks = r.shape[1]
    squares = np.zeros(r.shape[-1])
    for i in range(n_blocks):
        for j in range(i + 1, n_blocks):
            squares += np.abs(rx[i] * ry[j] - ry[i] * rx[j]) ** 2

    scale = _scale(r)
    if np.max(np.abs(direct - squares)) > FORMS_RTOL * scale**2:
        raise InternalConsistencyError("determinant forms disagree")

    consistency = np.stack(
        [sxx * np.sum(np.conj(ry) * t[p], axis=0) - np.sum(np.conj(rx) * t[p], axis=0) * sxy for p in range(2)]
    )
    unique = squares > SINGULAR_RTOL * scale**2
    cons_scale = scale * np.mean(np.sum(np.abs(r) * np.abs(t), axis=1))
    if np.any(np.abs(consistency[:, ~unique]) > FORMS_RTOL * cons_scale):
        raise InternalConsistencyError("singular bins carry a nonzero consistency quantity (no solution)")
    labels = tuple("unique" if u else "infinite" for u in unique)
    return UniquenessReport(direct, squares, consistency, labels)
