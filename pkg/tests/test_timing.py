import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cobmdsp.bmdsp.front import matched_filter_burst
from cobmdsp.bmdsp.loop import LoopConfig
from cobmdsp.bmdsp.timing import godard_ted, interpolate, timing_recover
from cobmdsp.channel import add_awgn, apply_frac_delay
from cobmdsp.errors import ConvergenceFailure
from helpers import wrap_symbols


def _rx(tx, params, tau, snr=np.inf, n=30000):
    b = apply_frac_delay(tx[1].segment(1000, 1000 + n), tau, params.rs)
    return matched_filter_burst(add_awgn(b, snr, rng_seed=1), params)


def test_interpolate_on_grid_is_identity(rng):
    x = rng.standard_normal((2, 100)) + 0j
    assert np.allclose(interpolate(x, np.arange(20, 80.0)), x[:, 20:80])


@settings(max_examples=20, deadline=None)
@given(st.floats(-0.45, 0.45))
def test_ted_reads_offset(tx, params, tau):
    # single beats carry pattern noise; ten of them average it down
    rx = _rx(tx, params, tau, n=2400).stack()
    est = [godard_ted(rx[:, k : k + 200], params) for k in range(200, 2200, 200)]
    assert np.mean(est) == pytest.approx(tau, abs=0.02)


def test_ted_unbiased_in_noise(tx, params):
    rx = _rx(tx, params, 0.0, snr=12).stack()
    est = [godard_ted(rx[:, k : k + 200], params) for k in range(200, 29800, 200)]
    assert abs(np.mean(est)) < 0.01


def test_loop_locks_from_zero(tx, params):
    _, traj = timing_recover(_rx(tx, params, 0.3, snr=15), params, tau_init=0.0)
    assert abs(wrap_symbols(traj[-10:] - 0.3)).max() < 0.05


def test_loop_holds_good_init(tx, params):
    _, traj = timing_recover(_rx(tx, params, 0.3, snr=15), params, tau_init=0.3)
    assert abs(wrap_symbols(traj - 0.3)).max() < 0.05


def test_loop_delay_slows_response(tx, params):
    rx = _rx(tx, params, 0.3, snr=30)
    _, fast = timing_recover(rx, params, 0.0, LoopConfig(tr_delay_beats=0))
    _, slow = timing_recover(rx, params, 0.0, LoopConfig(tr_delay_beats=20))
    assert np.argmax(np.abs(fast) > 0.15) < np.argmax(np.abs(slow) > 0.15)


def test_disabled_loop_is_static(tx, params):
    sym, traj = timing_recover(_rx(tx, params, 0.0), params, 0.0, LoopConfig(tr_enabled=False))
    assert np.all(traj == 0) and sym.fs == params.rs
    ref = tx[0].symbols[:, 500 : 500 + len(sym)]
    assert np.max(np.abs(sym.stack()[:, 50:-50] - ref[:, 50:-50])) < 0.02


def test_runaway_loop_raises(tx, params):
    loop = LoopConfig(tr_kp=5.0, tr_ki=1.0, tr_delay_beats=5)
    with pytest.raises(ConvergenceFailure):
        timing_recover(_rx(tx, params, 0.3, snr=10), params, 0.0, loop, tau_limit=1.0)


@pytest.mark.parametrize("kw", [{"tr_kp": 0}, {"beat_symbols": 0}, {"eq_delay_beats": -1}, {"bogus": 1}])
def test_loop_config_validation(kw):
    with pytest.raises(ValueError):
        LoopConfig(**kw)
