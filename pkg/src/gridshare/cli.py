"""Command line entry point: ``gridshare <verb> [options]``."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, GridshareError, ParseError
from .fleet import SynthesisConfig, emit_fleet, synthesize_fleet
from .percolation import DEFAULT_TRIALS, curve_to_csv, percolation_curve
from .study import (SELECTIONS, StudyConfig, _csv, _mg_rows, _rows, _scenario_rows,
                    forecast_csv, predict_grid_energy, predict_series, prepare, run_study)
from .topology import load_topology, neighboring_pairs, partition
from .visibility import build_visibility_fast


def read_series(path) -> np.ndarray:
    """Numbers from the last column of a CSV or whitespace file; a header row is skipped."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"series file not found: {path}")
    values = []
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            cells = [c for c in (" ".join(row)).split() if c] if len(row) == 1 else row
            if not cells:
                continue
            try:
                values.append(float(cells[-1]))
            except ValueError:
                if lineno == 1 and not values:
                    continue
                raise ParseError(f"not a number: {cells[-1]!r}", lineno) from None
    return np.array(values)


def _study_config(args) -> StudyConfig:
    if args.config:
        cfg = StudyConfig.from_json(args.config)
    else:
        cfg = StudyConfig()
    for name in ("seed", "trials", "scenarios", "format", "out", "workers"):
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg, name, v)
    cfg.__post_init__()
    return cfg


def _emit(text, out):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


def cmd_synth(args):
    spec = SynthesisConfig.from_json(args.config) if args.config else SynthesisConfig()
    fleet = synthesize_fleet(spec, seed=args.seed)
    _emit(emit_fleet(fleet), args.out)


def cmd_partition(args):
    feeder = load_topology(args.topology)
    state = json.loads(Path(args.switches).read_text()) if args.switches else None
    part = partition(feeder, state)
    doc = {"microgrids": [{"id": mg.id, "nodes": len(mg.nodes), "houses": len(mg.houses)}
                          for mg in part.microgrids],
           "pairs": [list(p) for p in neighboring_pairs(feeder, part)]}
    _emit(json.dumps(doc, indent=1) + "\n", args.out)


def cmd_settle(args):
    cfg = _study_config(args)
    tariff, ledger, _, scenarios, _ = prepare(cfg)
    names, settlements, _ = _scenario_rows(cfg, tariff, ledger, scenarios, with_pt=False)
    rows = _rows(cfg, names, settlements, {})
    if cfg.format == "json":
        text = json.dumps({"scenarios": rows, "microgrids": _mg_rows(ledger, names, settlements)},
                          indent=1) + "\n"
    else:
        from .study import REPORT_COLUMNS
        text = _csv(rows, REPORT_COLUMNS)
    _emit(text, args.out)


def cmd_resilience(args):
    series = read_series(args.series)
    curve = percolation_curve(build_visibility_fast(series), args.trials or DEFAULT_TRIALS,
                              args.seed or 0)
    if args.out:
        curve_to_csv(curve, args.out)
    print(f"threshold,{curve.threshold!r}")


def cmd_forecast(args):
    if args.series:
        report = predict_series(read_series(args.series), args.train_len, args.holdout_len,
                                args.trials or DEFAULT_TRIALS, args.seed or 0)
        start = args.train_len
    else:
        cfg = _study_config(args)
        cfg.train_len, cfg.holdout_len = args.train_len, args.holdout_len
        cfg.__post_init__()
        report = predict_grid_energy(cfg)
        start = cfg.train_len
    _emit(forecast_csv(report, start), args.out)
    print(f"order {report.order} r2 {report.r2:.6f} rmse {report.rmse:.6f} "
          f"mae {report.mae:.6f} predicted_pt {report.predicted_threshold}", file=sys.stderr)


def cmd_study(args):
    cfg = _study_config(args)
    if cfg.out is None:
        raise ConfigError("study needs an output directory (--out or 'out' in the config)")
    result = run_study(cfg)
    print(f"wrote {len(result['files'])} files to {cfg.out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridshare", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, config_help="study config JSON (a previous manifest.json also works)"):
        p.add_argument("--config", help=config_help)
        p.add_argument("--out", help="output file or directory")
        p.add_argument("--seed", type=int)
        return p

    p = common(sub.add_parser("synth", help="write a synthetic fleet CSV"),
               "synthesis spec JSON")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("partition", help="split a feeder into microgrids")
    p.add_argument("--topology", help="feeder JSON (default: bundled 123-node feeder)")
    p.add_argument("--switches", help="JSON object mapping switch id to open/closed")
    p.add_argument("--out")
    p.set_defaults(func=cmd_partition)

    for verb, func, hlp in (("settle", cmd_settle, "cost table for every scenario"),
                            ("study", cmd_study, "full study bundle")):
        p = common(sub.add_parser(verb, help=hlp))
        p.add_argument("--trials", type=int)
        p.add_argument("--scenarios", choices=SELECTIONS)
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--workers", type=int)
        p.set_defaults(func=func)

    p = common(sub.add_parser("resilience", help="percolation threshold of a series"))
    p.add_argument("--series", required=True, help="file with one value per row")
    p.add_argument("--trials", type=int)
    p.set_defaults(func=cmd_resilience)

    p = common(sub.add_parser("forecast", help="ARIMA forecast of a series or scenario"))
    p.add_argument("--series", help="file with one value per row (else use --config)")
    p.add_argument("--trials", type=int)
    p.add_argument("--train-len", type=int, default=300)
    p.add_argument("--holdout-len", type=int, default=65)
    p.set_defaults(func=cmd_forecast)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except GridshareError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
