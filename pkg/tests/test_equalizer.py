import numpy as np
import pytest

from cobmdsp.bmdsp.chanest import ChanEstimate
from cobmdsp.bmdsp.equalizer import _filter, _gradient, mimo_equalize, taps_to_freq, taps_to_time
from cobmdsp.bmdsp.loop import LoopConfig
from cobmdsp.errors import ConvergenceFailure, InputShapeError
from cobmdsp.sigcore import QAM16


def _identity(n=64):
    one, zero = np.ones(n, complex), np.zeros(n, complex)
    return ChanEstimate(one, zero, zero.copy(), one.copy(), "mmse")


def _qam(rng, n):
    return QAM16.points[rng.integers(0, 16, (2, n))]


def test_tap_domain_roundtrip(rng):
    taps = rng.standard_normal((2, 2, 64)) + 1j * rng.standard_normal((2, 2, 64))
    est = ChanEstimate.from_taps(taps, "mmse")
    assert np.allclose(taps_to_freq(taps_to_time(est)), taps)
    t = taps_to_time(_identity())
    assert t[0, 0, 32] == pytest.approx(1) and np.sum(np.abs(t)) == pytest.approx(2)


def test_filter_and_gradient_brute_force(rng):
    n, count, start = 8, 20, 5
    x = rng.standard_normal((2, 60)) + 1j * rng.standard_normal((2, 60))
    taps = rng.standard_normal((2, 2, n)) + 1j * rng.standard_normal((2, 2, n))
    err = rng.standard_normal((2, count)) + 1j * rng.standard_normal((2, count))
    y = _filter(x, taps, start, count)
    g = _gradient(x, err, start, n)
    for p in range(2):
        for j in range(count):
            k = start + j
            ref = sum(taps[p, q, m] * x[q, k + n // 2 - m + n // 2] for q in range(2) for m in range(n))
            assert y[p, j] == pytest.approx(ref)
        for q in range(2):
            for m in range(n):
                ref = sum(err[p, j] * np.conj(x[q, start + j + n - m]) for j in range(count))
                assert g[p, q, m] == pytest.approx(ref)


def test_identity_passes_symbols(rng):
    s = _qam(rng, 3000)
    res = mimo_equalize(s, _identity(), LoopConfig(eq_enabled=False))
    assert np.allclose(res.symbols, s)
    assert np.all(res.mse_trajectory < 1e-20)


def test_static_taps_undo_mixing(rng):
    s = _qam(rng, 3000)
    mix = np.array([[0.8, 0.6j], [0.6j, 0.8]])
    inv = np.linalg.inv(mix)
    taps = np.broadcast_to(inv[:, :, None], (2, 2, 64)).astype(complex)
    res = mimo_equalize(mix @ s, ChanEstimate.from_taps(taps, "mmse"), LoopConfig(eq_enabled=False))
    assert np.allclose(res.symbols, s)


def test_ddlms_improves_a_rough_start(rng):
    s = _qam(rng, 30000)
    r = s + 0.05 * (rng.standard_normal(s.shape) + 1j * rng.standard_normal(s.shape))
    rough = np.broadcast_to(np.array([[0.9, 0.1], [0.1, 0.9]])[:, :, None], (2, 2, 64)).astype(complex)
    est = ChanEstimate.from_taps(rough, "mmse")
    res = mimo_equalize(r, est, LoopConfig(eq_delay_beats=5, ddlms_mu=1e-3))
    assert res.mse_trajectory[-20:].mean() < 0.5 * res.mse_trajectory[:5].mean()


def test_known_symbols_override_decisions(rng):
    s = _qam(rng, 2000)
    known = np.full(s.shape, np.nan + 0j)
    known[:, :100] = s[:, :100] * 1j  # deliberately wrong reference
    res = mimo_equalize(s, _identity(), LoopConfig(eq_enabled=False), known=known)
    assert res.mse_trajectory[0] > 1 and res.mse_trajectory[1] < 1e-20


def test_divergence_detected(rng):
    s = _qam(rng, 20000)
    with pytest.raises(ConvergenceFailure):
        mimo_equalize(s + 0.1, _identity(), LoopConfig(eq_delay_beats=60, ddlms_mu=0.5))


def test_shape_check():
    with pytest.raises(InputShapeError):
        mimo_equalize(np.zeros((3, 10)), _identity())
