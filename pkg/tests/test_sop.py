import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cobmdsp.bmdsp.sop import THETA_GRID, estimate_sop, power_sum, recover_sop, tone_amplitudes
from cobmdsp.channel import add_awgn, apply_cd, apply_jones
from cobmdsp.errors import EstimationUnreliable
from cobmdsp.sigcore import DualPolBurst


def _pre_a(tx, n=256):
    return tx[1].segment(0, 4000)


def _own_fraction(seg, params):
    amps = np.abs(tone_amplitudes(seg, params)) ** 2
    return min(amps[0, :2].sum() / amps[:, :2].sum(), amps[1, 2:].sum() / amps[:, 2:].sum())


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0, 2 * np.pi, exclude_max=True))
def test_noiseless_estimate(tx, params, alpha, theta):
    seg = apply_jones(_pre_a(tx), alpha, theta).segment(0, 256)
    est = estimate_sop(seg, params)
    assert abs(est.alpha_hat - alpha) <= 1e-3
    assert abs(np.angle(np.exp(1j * (est.theta_hat - theta)))) <= 5e-3
    assert _own_fraction(recover_sop(seg, est), params) >= 0.99


def test_sop_before_cd_removal(tx, params):
    # the receiver estimates before dispersion compensation; CD barely moves the tone pairs
    seg = apply_cd(apply_jones(_pre_a(tx), 0.3, 1.0), 20).segment(0, 256)
    est = estimate_sop(seg, params)
    assert abs(est.alpha_hat - 0.3) <= 1e-3


def test_power_sum_peaks_at_truth(tx, params):
    seg = apply_jones(_pre_a(tx), 0.4, 2.0).segment(0, 256)
    theta = 2 * np.pi * np.arange(THETA_GRID) / THETA_GRID
    curve = power_sum(tone_amplitudes(seg, params), 0.4, theta)
    assert abs(theta[np.argmax(curve)] - 2.0) <= 2 * np.pi / THETA_GRID


def test_moderate_noise(tx, params):
    seg = add_awgn(apply_jones(_pre_a(tx), 0.7, 4.0), 15, rng_seed=2).segment(0, 256)
    est = estimate_sop(seg, params)
    assert abs(est.alpha_hat - 0.7) < 0.05


def test_noise_only_unreliable(rng, params):
    n = rng.standard_normal((2, 256)) + 1j * rng.standard_normal((2, 256))
    with pytest.raises(EstimationUnreliable):
        estimate_sop(DualPolBurst.from_array(n, params.fs), params)
