"""Command line entry point: ``cobmdsp {e2e,sweep,inspect,dump-defaults}``.

Exit codes: 0 success, 1 a burst missed the BER threshold, 2 usage error,
3 configuration or validation error, 4 receive-stage failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, bundled_config, dump_config, load_config
from .errors import ConfigurationError, StageError
from .experiments import INSPECT_STAGES, SWEEP_METRICS, inspect_stage, run_e2e, run_sweep
from .metrics import series_csv, sweep_csv

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_STAGE = 4

SUMMARY_COLUMNS = (
    "burst_index",
    "detect_index",
    "fine_df_hz",
    "alpha_hat",
    "theta_hat",
    "tau0",
    "sync_position_x",
    "sync_position_y",
    "pmnr_db",
    "method",
    "bits_compared",
    "bit_errors",
    "ber_first_20k",
    "ber_total",
    "final_mse",
    "below_threshold",
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config JSON path or bundled config name (default: built-in defaults)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", default="cobmdsp_out", help="output directory")
    common.add_argument("--method", choices=("mmse", "zf"), help="channel estimator")
    common.add_argument("--loop-delay", choices=("on", "off"), default="on", help="off zeroes both loop delays")

    p = _Parser(prog="cobmdsp", description="Burst-mode coherent receiver simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("e2e", parents=[common], help="transmit, impair and receive every configured burst")
    sw = sub.add_parser("sweep", parents=[common], help="Monte-Carlo sweep over one ranged variable")
    sw.add_argument("--workers", type=int, help="worker processes (default: config or CPU count)")
    ins = sub.add_parser("inspect", parents=[common], help="dump one stage's intermediate arrays")
    ins.add_argument("stage", help=f"one of: {', '.join(INSPECT_STAGES)}")
    sub.add_parser("dump-defaults", parents=[common], help="write the effective config as JSON")
    return p


def _resolve(args) -> ExperimentConfig:
    if args.config is None:
        cfg = ExperimentConfig()
    elif Path(args.config).exists():
        cfg = load_config(Path(args.config))
    else:
        cfg = bundled_config(args.config)
    update = {}
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigurationError("seed must be non-negative")
        update["seed"] = args.seed
    if args.method is not None:
        update["rx"] = cfg.rx.model_copy(update={"method": args.method})
    cfg = cfg.model_copy(update=update)
    return cfg.with_loop_delay(args.loop_delay == "on")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _summary_row(rep, threshold: float) -> list:
    rec = rep.ber_record
    return [
        rep.burst_index,
        rep.detect_index,
        rep.fine_df_hz,
        rep.sop.alpha_hat,
        rep.sop.theta_hat,
        rep.tau0,
        rep.sync.position[0],
        rep.sync.position[1],
        rep.sync.pmnr_db,
        rep.chan.method,
        rec.bits_compared,
        rec.bit_errors,
        rep.ber_first_20k,
        rep.ber_total,
        float(np.mean(rep.mse_trajectory[-10:])),
        int(_below(rep, threshold)),
    ]


def _below(rep, threshold: float) -> bool:
    return rep.ber_total < threshold and rep.ber_first_20k < threshold


def cmd_e2e(cfg: ExperimentConfig, out: Path) -> int:
    reports = run_e2e(cfg)
    rows = []
    for rep in reports:
        _write(out / f"burst_{rep.burst_index}.json", rep.to_json(include_taps=True))
        _write(out / f"mse_burst_{rep.burst_index}.csv", series_csv(rep.mse_trajectory, "beat_index", "mse"))
        rows.append(_summary_row(rep, cfg.ber_threshold))
    _write(out / "summary.csv", _table(SUMMARY_COLUMNS, rows))
    ok = len(reports) == len(cfg.bursts) and all(_below(r, cfg.ber_threshold) for r in reports)
    for rep in reports:
        print(f"burst {rep.burst_index}: BER total {rep.ber_total:.3e}, first 20k {rep.ber_first_20k:.3e}")
    if len(reports) != len(cfg.bursts):
        print(f"received {len(reports)} of {len(cfg.bursts)} bursts", file=sys.stderr)
    return EXIT_OK if ok else EXIT_THRESHOLD


def _table(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def cmd_sweep(cfg: ExperimentConfig, out: Path, workers: int | None) -> int:
    variable, _ = cfg.sweep_variable
    samples, points = run_sweep(cfg, workers)
    _write(out / f"sweep_{variable}.csv", sweep_csv(samples, points, SWEEP_METRICS))
    for value, per in points.items():
        ber = per["ber_total"].mean
        print(f"{variable}={value:g}: BER {ber:.3e}, failed {per['ber_total'].n_failed}/{len(per['ber_total'].seeds)}")
    return EXIT_OK


def cmd_inspect(cfg: ExperimentConfig, out: Path, stage: str) -> int:
    cols = inspect_stage(cfg, stage)
    names = list(cols)
    arrays = [np.asarray(cols[n]) for n in names]
    _write(out / f"{stage}.csv", _table(names, zip(*(a.tolist() for a in arrays))))
    meta = {
        "stage": stage,
        "axis": names[0],
        "length": int(arrays[0].size),
        "columns": {n: [_num(v) for v in a.tolist()] for n, a in zip(names, arrays)},
    }
    _write(out / f"{stage}.json", json.dumps(meta))
    print(f"wrote {stage}.csv and {stage}.json ({meta['length']} rows)")
    return EXIT_OK


def _num(v):
    return v if math.isfinite(v) else None


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "inspect" and args.stage not in INSPECT_STAGES:
        print(f"cobmdsp inspect: unknown stage {args.stage!r}; valid stages: {', '.join(INSPECT_STAGES)}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = _resolve(args)
        out = Path(args.out)
        if args.command == "dump-defaults":
            _write(out / "config.json", dump_config(cfg))
            print(dump_config(cfg))
            return EXIT_OK
        if args.command == "e2e":
            return cmd_e2e(cfg, out)
        if args.command == "sweep":
            return cmd_sweep(cfg, out, args.workers)
        return cmd_inspect(cfg, out, args.stage)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except StageError as exc:
        print(f"stage failure: {exc.stage} (burst {exc.burst_index}): {exc.cause}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
