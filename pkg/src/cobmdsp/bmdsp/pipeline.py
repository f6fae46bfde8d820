"""Per-burst receive chain from raw samples to bits."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..channel import UplinkScene
from ..errors import CobmError, NoBurstFound, StageError
from ..metrics import BerRecord, ber
from ..preambles import FrameLayout, PilotSource, PreambleB, build_preamble_b, deserialize, gen_preamble_a
from ..sigcore import QAM16, DspParams, DualPolBurst
from .chanest import ChanEstimate, extract_blocks, mmse_estimate, zf_estimate
from .cpr import interpolate_phase, pilot_cpr, pilot_phase
from .detect import Detection, detect_frame
from .equalizer import mimo_equalize
from .foe import fine_foe
from .front import cdc, derotate, matched_filter_burst
from .loop import LoopConfig
from .sop import SopEstimate, estimate_sop, recover_sop
from .spo import estimate_spo
from .sync import SyncResult, frame_sync
from .timing import timing_recover


class RxOptions(BaseModel):
    """Receiver settings that are not loop gains."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    method: Literal["mmse", "zf"] = "mmse"
    spo_init: bool = True
    cdc_km: float = Field(20.0, ge=0)
    disp_ps_nm_km: float = 17.0
    lambda_nm: float = Field(1550.0, gt=0)
    detect_window_symbols: int = Field(128, gt=0)
    detect_threshold: float = Field(0.5, gt=0, lt=1)
    foe_period: int = Field(2, gt=0)
    foe_pols: Literal["x", "y", "both"] = "x"
    spo_pol: Literal["x", "y", "both"] = "x"
    sync_search: int = Field(256, gt=0)
    sync_min_pmnr_db: float = 6.0
    cpr_smooth: int = Field(3, ge=1)
    margin_symbols: int = Field(64, ge=0)


@dataclass
class FrameSpec:
    """What the receiver knows about the transmitted frame."""

    layout: FrameLayout = field(default_factory=FrameLayout)
    pre_b: PreambleB = field(default_factory=build_preamble_b)
    pilots: PilotSource = field(default_factory=PilotSource)

    def known_symbols(self) -> np.ndarray:
        """(2, total) with preamble and pilot symbols filled in and NaN on the payload."""
        lay = self.layout
        out = np.full((2, lay.total), np.nan + 0j)
        pre_a = gen_preamble_a(n_symbols=lay.n_pre_a)
        out[0, : lay.n_pre_a] = pre_a.x_symbols
        out[1, : lay.n_pre_a] = pre_a.y_symbols
        out[0, lay.n_pre_a : lay.n_preamble] = self.pre_b.assembled_x
        out[1, lay.n_pre_a : lay.n_preamble] = self.pre_b.assembled_y
        out[:, lay.pilot_indices()] = self.pilot_symbols()
        return out

    def pilot_symbols(self) -> np.ndarray:
        return self.pilots.symbols(self.layout.n_pilot)


@dataclass
class RxReport:
    burst_index: int
    detect_index: int
    coarse_df_hz: float
    fine_df_hz: float
    sop: SopEstimate
    tau0: float
    sync: SyncResult
    chan: ChanEstimate
    mse_trajectory: np.ndarray
    tau_trajectory: np.ndarray
    ber_first_20k: float | None = None
    ber_total: float | None = None
    ber_record: BerRecord | None = None
    warnings: list = field(default_factory=list)
    symbols: np.ndarray | None = field(default=None, repr=False)  # phase-corrected frame
    bits: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self, include_taps: bool = False) -> dict:
        d = {
            "burst_index": self.burst_index,
            "detect_index": self.detect_index,
            "coarse_df_hz": self.coarse_df_hz,
            "fine_df_hz": self.fine_df_hz,
            "sop": {"alpha_hat": self.sop.alpha_hat, "theta_hat": self.sop.theta_hat, "tone_powers": self.sop.tone_powers},
            "tau0": self.tau0,
            "sync": self.sync.to_dict(),
            "method": self.chan.method,
            "mse_trajectory": [float(v) for v in self.mse_trajectory],
            "tau_trajectory": [float(v) for v in self.tau_trajectory],
            "ber_first_20k": self.ber_first_20k,
            "ber_total": self.ber_total,
            "bit_errors": None if self.ber_record is None else self.ber_record.bit_errors,
            "bits_compared": None if self.ber_record is None else self.ber_record.bits_compared,
            "warnings": list(self.warnings),
        }
        if include_taps:
            d["chan"] = self.chan.to_dict()
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(**kw), indent=2)


class _Stage:
    """Context manager that tags any failure with the stage name."""

    def __init__(self, name: str, burst_index: int):
        self.name, self.burst_index = name, burst_index

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, self.burst_index, exc) from exc
        return False


@dataclass
class Acquisition:
    """Front-end state of one burst before timing recovery."""

    segment: DualPolBurst  # matched-filtered, dispersion-compensated, SOP- and CFO-corrected
    m0: int  # sample index of Preamble A in ``segment``
    sop: SopEstimate
    tau0: float
    fine_df_hz: float  # residual offset removed after the coarse estimate


def acquire(
    stream: DualPolBurst,
    det: Detection,
    params: DspParams,
    layout: FrameLayout,
    options: RxOptions | None = None,
    burst_index: int = 0,
    keep: dict | None = None,
) -> Acquisition:
    """Coarse derotation, SOP recovery, matched filter, CDC, SPO and fine FOE."""
    options = options or RxOptions()
    keep = keep if keep is not None else {}
    sps = params.sps
    n_pre_a = layout.n_pre_a * sps

    with _Stage("segment", burst_index):
        margin = options.margin_symbols * sps
        lo = max(0, det.index - margin)
        hi = min(len(stream), det.index + layout.total * sps + margin)
        seg = stream.segment(lo, hi)
        m0 = det.index - lo
        seg = derotate(seg, det.coarse_df_hz, start_index=lo)

    with _Stage("sop", burst_index):
        sop = estimate_sop(seg.segment(m0, m0 + n_pre_a), params)
        keep["pre_a_before"] = seg.segment(m0, m0 + n_pre_a)
        seg = recover_sop(seg, sop)
        keep["pre_a_after"] = seg.segment(m0, m0 + n_pre_a)

    with _Stage("cdc", burst_index):
        seg = cdc(matched_filter_burst(seg, params), options.cdc_km, options.disp_ps_nm_km, options.lambda_nm)

    with _Stage("spo", burst_index):
        tau0 = estimate_spo(seg.segment(m0, m0 + n_pre_a), params, options.spo_pol)

    with _Stage("foe", burst_index):
        fine = fine_foe(seg.segment(m0, m0 + n_pre_a), params, options.foe_period, pols=options.foe_pols)
        seg = derotate(seg, fine)
    return Acquisition(seg, m0, sop, tau0, fine)


def receive_burst(
    stream: DualPolBurst,
    det: Detection,
    params: DspParams,
    frame: FrameSpec,
    loop: LoopConfig | None = None,
    options: RxOptions | None = None,
    burst_index: int = 0,
    tx_bits: np.ndarray | None = None,
    keep_intermediates: dict | None = None,
) -> RxReport:
    """Run every stage after detection on one burst of ``stream``.

    ``keep_intermediates``, when a dict, collects stage outputs for inspection.
    """
    loop = loop or LoopConfig()
    options = options or RxOptions()
    lay = frame.layout
    sps = params.sps
    keep = keep_intermediates if keep_intermediates is not None else {}
    acq = acquire(stream, det, params, lay, options, burst_index, keep)
    seg, m0, sop, tau0, fine = acq.segment, acq.m0, acq.sop, acq.tau0, acq.fine_df_hz

    with _Stage("timing", burst_index):
        # a few symbols of pre-roll absorb a late detection; whole symbols keep tau0 valid
        pre = min(m0 // sps, 16)
        sym, tau_traj = timing_recover(
            seg.segment(m0 - pre * sps, len(seg)), params, tau_init=tau0 if options.spo_init else 0.0, loop=loop
        )
        sym_arr = sym.stack()

    with _Stage("sync", burst_index):
        sync = frame_sync(sym, frame.pre_b, lay.n_pre_a + pre, options.sync_search, min_pmnr_db=options.sync_min_pmnr_db)
        keep["sync"] = sync
        start = sync.start - lay.n_pre_a
        need = start + lay.total + 64 - sym_arr.shape[1]
        if need > 0:
            sym_arr = np.hstack([sym_arr, np.zeros((2, need), dtype=complex)])

    with _Stage("chanest", burst_index):
        blocks = extract_blocks(sym_arr, sync.start, frame.pre_b.lb)
        tx_blocks = frame.pre_b.blocks()
        chan = mmse_estimate(blocks, tx_blocks) if options.method == "mmse" else zf_estimate(blocks, tx_blocks)
        keep["chan"] = chan

    pil = frame.pilot_symbols()
    with _Stage("equalizer", burst_index):
        known = frame.known_symbols()
        static = mimo_equalize(sym_arr, chan, loop.model_copy(update={"eq_enabled": False}), QAM16, start, lay.total)
        ph0, _ = pilot_phase(static.symbols, lay, pil, options.cpr_smooth)
        eq = mimo_equalize(
            sym_arr, chan, loop, QAM16, start, lay.total, known=known, phase=interpolate_phase(ph0, lay)
        )
        keep["equalizer"] = eq

    with _Stage("cpr", burst_index):
        cpr = pilot_cpr(eq.symbols, lay, pil, options.cpr_smooth)
        bits = deserialize(cpr.symbols, lay)

    report = RxReport(
        burst_index=burst_index,
        detect_index=det.index,
        coarse_df_hz=det.coarse_df_hz,
        fine_df_hz=det.coarse_df_hz + fine,
        sop=sop,
        tau0=tau0,
        sync=sync,
        chan=chan,
        mse_trajectory=eq.mse_trajectory,
        tau_trajectory=tau_traj,
        warnings=list(cpr.warnings),
        symbols=cpr.symbols,
        bits=bits,
    )
    if tx_bits is not None:
        with _Stage("ber", burst_index):
            rec = ber(tx_bits, bits)
            report.ber_record = rec
            report.ber_first_20k = rec.ber_first_20k
            report.ber_total = rec.ber
    return report


def run_pipeline(
    stream: DualPolBurst | UplinkScene,
    params: DspParams,
    frame: FrameSpec | None = None,
    loop: LoopConfig | None = None,
    options: RxOptions | None = None,
    tx_bits: list | None = None,
    max_bursts: int | None = None,
) -> list:
    """Detect and receive bursts one after another until the stream is exhausted."""
    if isinstance(stream, UplinkScene):
        stream = stream.stream
    frame = frame or FrameSpec()
    options = options or RxOptions()
    reports = []
    pos = 0
    while max_bursts is None or len(reports) < max_bursts:
        i = len(reports)
        try:
            det = detect_frame(
                stream, params, options.detect_window_symbols, start=pos, threshold=options.detect_threshold
            )
        except NoBurstFound:
            if reports:
                break
            raise StageError("detect", i, NoBurstFound("no burst in the stream")) from None
        except CobmError as exc:
            raise StageError("detect", i, exc) from exc
        bits = None if tx_bits is None or i >= len(tx_bits) else tx_bits[i]
        reports.append(receive_burst(stream, det, params, frame, loop, options, i, bits))
        pos = det.index + frame.layout.total * params.sps
    return reports
