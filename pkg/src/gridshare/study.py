"""End-to-end studies: fleet -> microgrids -> settlement -> resilience -> forecast."""
from __future__ import annotations

import dataclasses
import hashlib
import io
import json
import os
import shutil
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import backend
from .billing import settle
from .errors import ConfigError, GridshareError, InputError
from .fleet import (SynthesisConfig, TariffSchedule, daily_arrays, ingest_fleet,
                    synthesize_fleet)
from .forecast import (ForecastReport, fit, forecast, residual_shape, score,
                       select_order)
from .percolation import (DEFAULT_TRIALS, curve_to_csv, percolation_curve,
                          resilience_of_series)
from .svg import bar_chart, line_chart
from .topology import load_topology, neighboring_pairs, partition, scenario_set
from .visibility import build_visibility_fast

SELECTIONS = ("singles", "pairs", "all", "everything")
FORMATS = ("csv", "json")
REPORT_COLUMNS = ("scenario", "houses", "cost_without_p2p", "cost_with_p2p", "savings",
                  "savings_pct", "grid_kwh_without", "grid_kwh_with", "pt_without", "pt_with")
PAIR_COLUMNS = ("scenario", "a_kwh", "b_kwh", "c_kwh", "x_usd", "y_usd", "z_usd")
MG_COLUMNS = ("scenario", "houses", "daily_avg_consumption_kwh",
              "daily_avg_generation_kwh", "total_storage_kwh")


@dataclass
class StudyConfig:
    """Everything a study run needs.

    ``fleet`` is either ``{"path": csv, "interval_hours": h}`` or
    ``{"synth": {...synthesis keys...}}``. ``topology`` is a JSON path, or
    None for the bundled feeder. Relative paths resolve against ``base_dir``.
    """

    fleet: dict = field(default_factory=lambda: {"synth": {}})
    topology: str | None = None
    tariff: dict = field(default_factory=dict)
    switch_state: dict | None = None
    scenarios: str = "everything"
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    train_len: int = 300
    holdout_len: int = 65
    forecast_scenario: str | None = "MG-I"
    workers: int = 1
    format: str = "csv"
    out: str | None = None
    base_dir: str = "."

    def __post_init__(self):
        if self.scenarios not in SELECTIONS:
            raise ConfigError(f"scenarios must be one of {SELECTIONS}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        for name in ("trials", "workers", "train_len", "holdout_len"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if not isinstance(self.fleet, dict) or len({"path", "synth"} & set(self.fleet)) != 1:
            raise ConfigError("fleet must give exactly one of 'path' or 'synth'")

    def resolve(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else Path(self.base_dir) / p

    @classmethod
    def from_dict(cls, d: dict, base_dir=".") -> "StudyConfig":
        if "config" in d and "files" in d:  # a manifest from a previous run
            d = d["config"]
        known = {f.name for f in dataclasses.fields(cls)} - {"base_dir"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown study config keys: {sorted(unknown)}")
        return cls(**d, base_dir=str(base_dir))

    @classmethod
    def from_json(cls, path) -> "StudyConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(doc, base_dir=path.parent)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("base_dir")
        d.pop("out")
        return d


def derive_seed(seed: int, *key: int) -> int:
    """Independent 63-bit seed for a sub-task identified by ``key``."""
    state = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(state.generate_state(1, np.uint64)[0] >> np.uint64(1))


# --------------------------------------------------------------------------
# building blocks


def load_fleet(cfg: StudyConfig):
    if "path" in cfg.fleet:
        path = cfg.resolve(cfg.fleet["path"])
        if not path.exists():
            raise ConfigError(f"fleet file not found: {path}")
        return ingest_fleet(path, float(cfg.fleet.get("interval_hours", 4.0)))
    synth = cfg.fleet["synth"]
    if isinstance(synth, str):
        spec = SynthesisConfig.from_json(cfg.resolve(synth))
    else:
        spec = SynthesisConfig.from_dict(synth)
    return synthesize_fleet(spec)


def prepare(cfg: StudyConfig):
    """Load everything and return (tariff, ledger, partition, scenarios, pairs)."""
    tariff = TariffSchedule.from_dict(cfg.tariff)
    if cfg.topology is not None and not cfg.resolve(cfg.topology).exists():
        raise ConfigError(f"topology file not found: {cfg.topology}")
    feeder = load_topology(None if cfg.topology is None else cfg.resolve(cfg.topology))
    fleet = load_fleet(cfg)
    ids = [h.id for h in fleet]
    missing = set(feeder.house_assignment) - set(ids)
    if missing:
        raise InputError(f"{len(missing)} houses in the topology are missing from the fleet, "
                         f"e.g. {sorted(missing)[:3]}")
    # houses not placed on the feeder cannot join any microgrid
    fleet = [h for h in fleet if h.id in feeder.house_assignment]
    ledger = daily_arrays(fleet, tariff)
    ledger["house_ids"] = [h.id for h in fleet]
    ledger["consumption"] = np.array([h.consumption.sum() for h in fleet])
    ledger["generation"] = np.array([h.generation.sum() for h in fleet])
    days = ledger["H_h"].shape[1]
    if cfg.train_len + cfg.holdout_len > days:
        raise ConfigError(f"train_len + holdout_len = {cfg.train_len + cfg.holdout_len} "
                          f"exceeds the {days} available days")
    part = partition(feeder, cfg.switch_state)
    pairs = neighboring_pairs(feeder, part)
    return tariff, ledger, part, scenario_set(part, pairs), pairs


def _selected(kind, selection):
    if selection == "everything":
        return True
    return {"singles": "single", "pairs": "pair", "all": "all"}[selection] == kind


def _fmt(v, digits=None):
    if digits is None:
        return repr(float(v))
    return f"{v:.{digits}f}"


# --------------------------------------------------------------------------
# forecasting


def predict_series(series, train_len=300, holdout_len=65, trials=DEFAULT_TRIALS, seed=0):
    """Select, fit and forecast on the training prefix; score on the holdout.

    A drift term is estimated when the selected order has d <= 1 so trending
    series are extrapolated rather than flattened.
    """
    x = np.asarray(series, dtype=float)
    if train_len + holdout_len > x.size:
        raise InputError(f"series of length {x.size} is shorter than "
                         f"train_len + holdout_len = {train_len + holdout_len}")
    train, actual = x[:train_len], x[train_len:train_len + holdout_len]
    order = select_order(train)
    model = fit(train, order, include_intercept=order.d <= 1)
    pred = forecast(model, holdout_len)
    r2, rmse, mae = score(actual, pred)
    skew, kurt = residual_shape(model)
    pt = resilience_of_series(pred, trials, seed) if holdout_len >= 3 else None
    return ForecastReport(pred, actual, r2, rmse, mae, order, skew, kurt, pt)


def predict_grid_energy(cfg: StudyConfig, prepared=None) -> ForecastReport:
    """Forecast the with-P2P grid draw of ``cfg.forecast_scenario``."""
    tariff, ledger, part, scenarios, _ = prepared or prepare(cfg)
    name = cfg.forecast_scenario or scenarios[0].name
    matches = [s for s in scenarios if s.name == name and s.p2p]
    if not matches:
        raise ConfigError(f"unknown forecast scenario {name!r}")
    idx = scenarios.index(matches[0])
    series = settle(ledger, tariff, matches[0].houses).grid_with
    return predict_series(series, cfg.train_len, cfg.holdout_len, cfg.trials,
                          derive_seed(cfg.seed, idx, 2))


# --------------------------------------------------------------------------
# the study


def _scenario_rows(cfg, tariff, ledger, scenarios, with_pt=True):
    """Settle every scenario; optionally compute both thresholds."""
    names, seen = [], set()
    for s in scenarios:
        if s.name not in seen:
            seen.add(s.name)
            names.append(s)
    settlements = {s.name: settle(ledger, tariff, s.houses) for s in names}
    index = {(s.name, s.p2p): i for i, s in enumerate(scenarios)}

    def job(s, p2p):
        st = settlements[s.name]
        series = st.grid_with if p2p else st.grid_without
        seed = derive_seed(cfg.seed, index[(s.name, p2p)])
        curve = percolation_curve(build_visibility_fast(series), cfg.trials, seed)
        return (s.name, p2p), curve

    curves = {}
    if with_pt:
        jobs = [(s, p2p) for s in names if _selected(s.kind, cfg.scenarios)
                for p2p in (False, True)]
        if cfg.workers > 1:
            with ThreadPoolExecutor(cfg.workers) as pool:
                results = list(pool.map(lambda a: job(*a), jobs))
        else:
            results = [job(*a) for a in jobs]
        curves = dict(results)
    return names, settlements, curves


def _rows(cfg, names, settlements, curves):
    rows = []
    for s in names:
        if not _selected(s.kind, cfg.scenarios):
            continue
        st = settlements[s.name]
        without, with_ = round(st.cost_without_p2p), round(st.cost_with_p2p)
        pt_wo = curves.get((s.name, False))
        pt_w = curves.get((s.name, True))
        rows.append({
            "scenario": s.name, "houses": len(st.houses),
            "cost_without_p2p": without, "cost_with_p2p": with_,
            "savings": without - with_,
            "savings_pct": round(st.savings_pct, 2),
            "grid_kwh_without": round(float(st.grid_without.sum())),
            "grid_kwh_with": round(float(st.grid_with.sum())),
            "pt_without": None if pt_wo is None else round(pt_wo.threshold, 5),
            "pt_with": None if pt_w is None else round(pt_w.threshold, 5),
        })
    return rows


def _pair_rows(names, settlements):
    """Joint-vs-separate comparison for pairs and ALL.

    a: sum of members' with-P2P grid draw, b: joint with-P2P draw, c = a - b;
    x: joint savings, y: sum of members' savings, z = x - y.
    """
    rows = []
    for s in names:
        if s.kind == "single":
            continue
        st = settlements[s.name]
        a = round(sum(float(settlements[m].grid_with.sum()) for m in s.members))
        b = round(float(st.grid_with.sum()))
        x = round(st.savings)
        y = round(sum(settlements[m].savings for m in s.members))
        rows.append({"scenario": s.name, "a_kwh": a, "b_kwh": b, "c_kwh": a - b,
                     "x_usd": x, "y_usd": y, "z_usd": x - y})
    return rows


def _mg_rows(ledger, names, settlements):
    pos = {h: i for i, h in enumerate(ledger["house_ids"])}
    days = ledger["H_h"].shape[1]
    rows = []
    for s in names:
        idx = [pos[h] for h in settlements[s.name].houses]
        rows.append({"scenario": s.name, "houses": len(idx),
                     "daily_avg_consumption_kwh": round(float(ledger["consumption"][idx].sum()) / days),
                     "daily_avg_generation_kwh": round(float(ledger["generation"][idx].sum()) / days),
                     "total_storage_kwh": round(float(ledger["B"][idx, 0].sum()))})
    return rows


def _csv(rows, columns):
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join("" if r[c] is None else str(r[c]) for c in columns) + "\n")
    return buf.getvalue()


def forecast_csv(report: ForecastReport, start_day: int) -> str:
    buf = io.StringIO()
    buf.write("day_index,actual_kwh,predicted_kwh\n")
    for k, (a, p) in enumerate(zip(report.actual.tolist(), report.predictions.tolist())):
        buf.write(f"{start_day + k},{a!r},{p!r}\n")
    buf.write("r2,rmse,mae\n")
    buf.write(f"{report.r2!r},{report.rmse!r},{report.mae!r}\n")
    return buf.getvalue()


def _slug(name):
    return name.replace(" & ", "_").replace(" ", "_").replace("-", "").lower()


def run_study(cfg: StudyConfig, out_dir=None) -> dict:
    """Run a full study and write its bundle atomically into ``out_dir``.

    Returns the in-memory report (rows, pair rows, forecast).
    """
    out_dir = out_dir or cfg.out
    prepared = prepare(cfg)
    tariff, ledger, part, scenarios, pairs = prepared
    names, settlements, curves = _scenario_rows(cfg, tariff, ledger, scenarios)
    rows = _rows(cfg, names, settlements, curves)
    pair_rows = _pair_rows(names, settlements)
    mg_rows = _mg_rows(ledger, names, settlements)

    fc = None
    if cfg.forecast_scenario:
        try:
            fc = predict_grid_energy(cfg, prepared)
        except GridshareError as exc:
            raise type(exc)(f"forecast for {cfg.forecast_scenario}: {exc}") from exc

    files: dict[str, str] = {}
    if cfg.format == "csv":
        files["report.csv"] = _csv(rows, REPORT_COLUMNS)
        files["pairs.csv"] = _csv(pair_rows, PAIR_COLUMNS)
        files["microgrids.csv"] = _csv(mg_rows, MG_COLUMNS)
    else:
        files["report.json"] = json.dumps(
            {"scenarios": rows, "pairs": pair_rows, "microgrids": mg_rows}, indent=1) + "\n"
    for (name, p2p), curve in sorted(curves.items()):
        files[f"curves/{_slug(name)}_{'with' if p2p else 'without'}_p2p.csv"] = curve_to_csv(curve)
    if curves:
        groups = [(r["scenario"], [r["pt_without"], r["pt_with"]]) for r in rows]
        files["pt_comparison.svg"] = bar_chart(groups, ("without P2P", "with P2P"),
                                               "Percolation threshold by scenario")
    if fc is not None:
        files["forecast.csv"] = forecast_csv(fc, cfg.train_len)
        days = list(range(cfg.train_len, cfg.train_len + cfg.holdout_len))
        files["forecast.svg"] = line_chart(
            {"actual": (days, fc.actual.tolist()), "predicted": (days, fc.predictions.tolist())},
            f"Grid energy forecast, {cfg.forecast_scenario}", "day")

    manifest = {
        "package": "gridshare", "version": __version__, "backend": backend(),
        "config": cfg.to_dict(),
        "seeds": {f"{s.name}|{'with' if s.p2p else 'without'}": derive_seed(cfg.seed, i)
                  for i, s in enumerate(scenarios)},
        "microgrids": {mg.id: len(mg.houses) for mg in part.microgrids},
        "pairs": [list(p) for p in pairs],
        "forecast": None if fc is None else {
            "order": [fc.order.p, fc.order.d, fc.order.q], "r2": fc.r2, "rmse": fc.rmse,
            "mae": fc.mae, "predicted_pt": fc.predicted_threshold,
            "residual_skew": fc.residual_skew, "residual_kurtosis": fc.residual_kurtosis},
        "files": {k: hashlib.sha256(v.encode()).hexdigest() for k, v in sorted(files.items())},
    }
    files["manifest.json"] = json.dumps(manifest, indent=1, sort_keys=True) + "\n"
    if out_dir is not None:
        write_bundle(Path(out_dir), files)
    return {"rows": rows, "pairs": pair_rows, "microgrids": mg_rows, "forecast": fc,
            "curves": curves, "files": files, "manifest": manifest}


def write_bundle(out: Path, files: dict) -> None:
    """Write all files into a temporary sibling, then move it into place."""
    out = out.resolve()
    if out.exists() and any(out.iterdir()) and not (out / "manifest.json").exists():
        raise ConfigError(f"refusing to overwrite non-study directory {out}")
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))
    try:
        for rel, text in files.items():
            target = tmp / rel
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(text, encoding="utf-8", newline="")
        if out.exists():
            old = out.with_name(f".{out.name}.old")
            if old.exists():
                shutil.rmtree(old)
            os.replace(out, old)
            os.replace(tmp, out)
            shutil.rmtree(old)
        else:
            os.replace(tmp, out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
