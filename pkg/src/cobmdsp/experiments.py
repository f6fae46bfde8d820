"""Runners behind the command line: end-to-end runs, sweeps and stage dumps."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .bmdsp.detect import detect_frame
from .bmdsp.pipeline import receive_burst, run_pipeline
from .bmdsp.sop import THETA_GRID, power_sum, tone_amplitudes
from .bmdsp.sync import SyncResult
from .config import ExperimentConfig, build_scene, load_config
from .errors import CobmError, ConfigurationError
from .metrics import SweepPoint

SWEEP_METRICS = (
    "fine_df_error_hz",
    "pmnr_db",
    "tau0_error",
    "ber_first_20k",
    "ber_total",
    "final_mse",
)
HIGHER_IS_BETTER = ("pmnr_db",)
INSPECT_STAGES = ("sop_spectra", "power_sum", "taps", "timing_metric", "mse", "tau", "error_positions")


def run_e2e(cfg: ExperimentConfig, seed: int | None = None) -> list:
    scene, bits, frame = build_scene(cfg, seed)
    return run_pipeline(scene, cfg.params, frame, cfg.loop, cfg.rx, tx_bits=bits, max_bursts=len(cfg.bursts))


def _apply(cfg: ExperimentConfig, variable: str, value: float) -> ExperimentConfig:
    """The config of one sweep point; re-validated so an out-of-range value is rejected, not simulated."""
    data = cfg.model_dump()
    if variable == "lb":
        data["layout"]["lb"] = int(value)
    else:
        data["bursts"] = [{**data["bursts"][0], variable: float(value)}]
    return load_config(data)


def _wrap(x: float) -> float:
    return float((x + 0.5) % 1.0 - 0.5)


def sweep_sample(cfg: ExperimentConfig, variable: str, value: float, seed: int) -> dict:
    """Metrics of the first configured burst for one point and seed; stage failures give NaN."""
    point = _apply(cfg, variable, value)
    ch = point.bursts[0]
    out = {"variable": variable, "value": float(value), "seed": int(seed), "failed": False}
    try:
        rep = run_e2e(point, seed)[0]
    except CobmError:
        out["failed"] = True
        out.update({m: math.nan for m in SWEEP_METRICS})
        return out
    out.update(
        fine_df_error_hz=rep.fine_df_hz - ch.delta_f,
        pmnr_db=rep.sync.pmnr_db,
        tau0_error=_wrap(rep.tau0 - ch.tau),
        ber_first_20k=rep.ber_first_20k,
        ber_total=rep.ber_total,
        final_mse=float(np.mean(rep.mse_trajectory[-10:])),
    )
    return out


def _sample_job(args):
    cfg_json, variable, value, seed = args
    return sweep_sample(ExperimentConfig.model_validate_json(cfg_json), variable, value, seed)


def run_sweep(cfg: ExperimentConfig, workers: int | None = None):
    """All (value, seed) samples in a worker pool; returns samples and per-value SweepPoints."""
    variable, values = cfg.sweep_variable
    cfg = cfg.model_copy(update={"bursts": cfg.bursts[:1]})
    seeds = [cfg.seed + k for k in range(cfg.n_seeds)]
    jobs = [(cfg.model_dump_json(), variable, v, s) for v in values for s in seeds]
    workers = workers or cfg.workers or os.cpu_count() or 1
    if workers == 1:
        samples = [_sample_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(_sample_job, jobs))
    points = {}
    for v in values:
        rows = [s for s in samples if s["value"] == float(v)]
        points[float(v)] = {
            m: SweepPoint.from_samples(
                variable, v, [r["seed"] for r in rows], m, [r[m] for r in rows], m in HIGHER_IS_BETTER
            )
            for m in SWEEP_METRICS
        }
    return samples, points


def inspect_stage(cfg: ExperimentConfig, stage: str, seed: int | None = None) -> dict:
    """Columns of named arrays for one stage of the first burst."""
    if stage not in INSPECT_STAGES:
        raise ConfigurationError(f"unknown stage {stage!r}; valid stages: {', '.join(INSPECT_STAGES)}")
    scene, bits, frame = build_scene(cfg, seed, n_bursts=1)
    keep: dict = {}
    det = detect_frame(scene.stream, cfg.params, cfg.rx.detect_window_symbols, threshold=cfg.rx.detect_threshold)
    rep = receive_burst(scene.stream, det, cfg.params, frame, cfg.loop, cfg.rx, 0, bits[0], keep)
    p = cfg.params

    if stage == "sop_spectra":
        before, after = keep["pre_a_before"], keep["pre_a_after"]
        n = len(before)
        freq = np.fft.fftshift(np.fft.fftfreq(n, 1 / p.fs))
        cols = {"freq_hz": freq}
        for tag, seg in (("before", before), ("after", after)):
            for pol in ("x", "y"):
                spec = np.fft.fftshift(np.fft.fft(getattr(seg, pol)))
                cols[f"{pol}_{tag}_db"] = 10 * np.log10(np.abs(spec) ** 2 + 1e-30)
        return cols
    if stage == "power_sum":
        theta = 2 * np.pi * np.arange(THETA_GRID) / THETA_GRID
        amps = tone_amplitudes(keep["pre_a_before"], p)
        return {"theta_rad": theta, "power_sum": power_sum(amps, rep.sop.alpha_hat, theta)}
    if stage == "taps":
        cols = {"bin": np.arange(rep.chan.w_xx.size)}
        for name in ("w_xx", "w_xy", "w_yx", "w_yy"):
            v = getattr(rep.chan, name)
            cols[f"{name}_re"], cols[f"{name}_im"] = v.real, v.imag
        return cols
    if stage == "timing_metric":
        sync: SyncResult = keep["sync"]
        return {
            "sample_index": np.arange(sync.metric.shape[1]) + sync.offset,
            "p_x": sync.metric[0],
            "p_y": sync.metric[1],
        }
    if stage == "mse":
        return {"beat_index": np.arange(rep.mse_trajectory.size), "mse": rep.mse_trajectory}
    if stage == "tau":
        return {"beat_index": np.arange(rep.tau_trajectory.size), "tau": rep.tau_trajectory}
    return {"bit_index": rep.ber_record.error_positions}
