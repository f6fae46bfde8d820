import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cobmdsp.bmdsp.foe import fine_foe, phase_slope
from cobmdsp.channel import add_awgn, apply_cfo_pn
from cobmdsp.errors import ConfigurationError, EstimationUnreliable
from cobmdsp.sigcore import DspParams
from helpers import front_end, short_config


def test_phase_slope_of_tone():
    fs = 64e9
    x = np.exp(2j * np.pi * 1.234e9 * np.arange(500) / fs)
    assert phase_slope(x, 4, fs) == pytest.approx(1.234e9, rel=1e-9)
    with pytest.raises(EstimationUnreliable):
        phase_slope(x[:3], 4, fs)


@settings(max_examples=25, deadline=None)
@given(st.floats(-7e9, 7e9))
def test_noiseless_pre_a(tx, params, df):
    # the Preamble B pulse tails reaching into the segment leave a bias of a few kHz
    seg = apply_cfo_pn(tx[1].segment(0, 256), df)
    assert fine_foe(seg, params) == pytest.approx(df, abs=1e5)
    assert fine_foe(seg, params, refine_lag=None) == pytest.approx(df, abs=1e5)


def test_y_and_both_pols(tx, params):
    seg = apply_cfo_pn(tx[1].segment(0, 256), 1e9)
    assert fine_foe(seg, params, period=4, pols="y") == pytest.approx(1e9, abs=1e5)
    assert fine_foe(seg, params, period=4, pols="both") == pytest.approx(1e9, abs=1e5)
    with pytest.raises(ConfigurationError):
        fine_foe(seg, params, period=2, pols="y")
    with pytest.raises(ConfigurationError):
        fine_foe(seg, params, pols="z")


def test_refinement_reduces_noise(tx, params):
    errs = {True: [], False: []}
    for s in range(30):
        seg = add_awgn(apply_cfo_pn(tx[1].segment(0, 256), 5e8), 10, rng_seed=s)
        errs[True].append(fine_foe(seg, params) - 5e8)
        errs[False].append(fine_foe(seg, params, refine_lag=None) - 5e8)
    assert np.std(errs[True]) < 0.5 * np.std(errs[False])


def test_other_oversampling():
    p = DspParams(k_os=4)
    from cobmdsp.preambles import gen_preamble_a
    from cobmdsp.sigcore import DualPolBurst, rrc_shape

    a = gen_preamble_a()
    b = DualPolBurst(rrc_shape(a.x_symbols, p).samples, rrc_shape(a.y_symbols, p).samples, p.fs)
    assert fine_foe(apply_cfo_pn(b, 2e9), p) == pytest.approx(2e9, abs=1e4)


def test_chain_estimate_at_20db():
    cfg = short_config(alpha=0.3, theta=1.0, delta_f=-2e9, tau=0.2, snr_db=20)
    _, det, acq, _ = front_end(cfg, 0)
    assert abs(det.coarse_df_hz + acq.fine_df_hz + 2e9) < 10e6
