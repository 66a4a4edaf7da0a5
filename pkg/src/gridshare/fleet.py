"""Household energy profiles, tariffs and daily peak/off-peak ledgers."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (AlignmentError, ConfigError, ParseError, SchemaError,
                     ValidationError)

FLEET_HEADER = ("house_id", "floor_area_m2", "panel_area_m2", "storage_kwh",
                "t_index", "consumption_kwh", "generation_kwh")

PANEL_FRACTION = 0.10


def _frozen_array(values, name):
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class HouseProfile:
    """One prosumer: load and generation series plus installed assets.

    ``consumption`` and ``generation`` are kWh per sample of
    ``interval_hours`` hours, starting at hour 0 of day 0.
    """

    id: str
    floor_area: float
    panel_area: float
    storage_capacity: float
    consumption: np.ndarray
    generation: np.ndarray
    interval_hours: float = 4.0

    def __post_init__(self):
        cons = _frozen_array(self.consumption, "consumption")
        gen = _frozen_array(self.generation, "generation")
        object.__setattr__(self, "consumption", cons)
        object.__setattr__(self, "generation", gen)
        if cons.shape != gen.shape:
            raise ValidationError(
                f"house {self.id}: consumption and generation lengths differ "
                f"({cons.size} vs {gen.size})")
        if not (np.all(np.isfinite(cons)) and np.all(np.isfinite(gen))):
            raise ValidationError(f"house {self.id}: non-finite energy value")
        if np.any(cons < 0) or np.any(gen < 0):
            raise ValidationError(f"house {self.id}: negative energy value")
        if self.storage_capacity < 0:
            raise ValidationError(f"house {self.id}: negative storage capacity")
        if self.interval_hours <= 0 or 24 % self.interval_hours:
            raise ValidationError(
                f"house {self.id}: interval_hours must divide 24, got {self.interval_hours}")
        per_day = self.samples_per_day
        if cons.size % per_day:
            raise ValidationError(
                f"house {self.id}: {cons.size} samples is not a whole number of days")

    @property
    def samples_per_day(self) -> int:
        return int(round(24 / self.interval_hours))

    @property
    def days(self) -> int:
        return self.consumption.size // self.samples_per_day

    def __eq__(self, other):
        if not isinstance(other, HouseProfile):
            return NotImplemented
        return (self.id == other.id
                and self.floor_area == other.floor_area
                and self.panel_area == other.panel_area
                and self.storage_capacity == other.storage_capacity
                and self.interval_hours == other.interval_hours
                and np.array_equal(self.consumption, other.consumption)
                and np.array_equal(self.generation, other.generation))

    __hash__ = None


@dataclass(frozen=True)
class TariffSchedule:
    """Time-of-use net-metering prices in $/kWh and the peak window."""

    lambda_h: float = 0.54
    lambda_l: float = 0.22
    mu_h: float = 0.30
    mu_l: float = 0.13
    peak_start_hour: float = 8.0
    peak_end_hour: float = 20.0

    def __post_init__(self):
        prices = (self.lambda_h, self.lambda_l, self.mu_h, self.mu_l)
        if any(p < 0 for p in prices):
            raise ConfigError("tariff prices must be nonnegative")
        if not (self.lambda_h >= self.mu_h and self.lambda_l >= self.mu_l
                and self.mu_h >= self.lambda_l):
            raise ConfigError(
                "tariff must satisfy lambda_h >= mu_h, lambda_l >= mu_l, mu_h >= lambda_l")
        s, e = self.peak_start_hour, self.peak_end_hour
        if not (0 <= s < 24 and 0 <= e <= 24):
            raise ConfigError("peak window hours must lie in [0, 24]")
        if self.peak_hours <= 0 or self.peak_hours >= 24:
            raise ConfigError("peak window must be nonempty and shorter than 24 h")

    @property
    def peak_hours(self) -> float:
        return (self.peak_end_hour - self.peak_start_hour) % 24

    def is_peak(self, hour: float) -> bool:
        s, e = self.peak_start_hour, self.peak_end_hour
        if s < e:
            return s <= hour < e
        return hour >= s or hour < e

    @classmethod
    def from_dict(cls, d: dict) -> "TariffSchedule":
        d = dict(d)
        units = d.pop("units", "usd")
        if units not in ("usd", "cents"):
            raise ConfigError(f"unknown tariff units {units!r}")
        scale = 0.01 if units == "cents" else 1.0
        kwargs = {}
        for key in ("lambda_h", "lambda_l", "mu_h", "mu_l"):
            if key in d:
                kwargs[key] = float(d.pop(key)) * scale
        for key in ("peak_start_hour", "peak_end_hour"):
            if key in d:
                kwargs[key] = float(d.pop(key))
        if d:
            raise ConfigError(f"unknown tariff keys: {sorted(d)}")
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {"lambda_h": self.lambda_h, "lambda_l": self.lambda_l,
                "mu_h": self.mu_h, "mu_l": self.mu_l,
                "peak_start_hour": self.peak_start_hour,
                "peak_end_hour": self.peak_end_hour}


@dataclass(frozen=True)
class DailyEnergy:
    house_id: str
    day_index: int
    H_h: float
    H_l: float
    G_h: float
    G_l: float
    B: float

    def __post_init__(self):
        for name in ("H_h", "H_l", "G_h", "G_l", "B"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be nonnegative")


# --------------------------------------------------------------------------
# CSV ingestion / emission


def emit_fleet(profiles, path=None) -> str:
    """Write the canonical fleet CSV. Returns the text when ``path`` is None."""
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FLEET_HEADER)
    for h in profiles:
        head = (h.id, repr(float(h.floor_area)), repr(float(h.panel_area)),
                repr(float(h.storage_capacity)))
        for t, (c, g) in enumerate(zip(h.consumption.tolist(), h.generation.tolist())):
            w.writerow(head + (t, repr(c), repr(g)))
    text = buf.getvalue()
    if path is None:
        return text
    Path(path).write_text(text, encoding="utf-8", newline="")
    return text


def _parse_float(text, col, lineno):
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"column {col!r}: cannot parse {text!r} as a number", lineno) from None
    if not np.isfinite(v):
        raise ParseError(f"column {col!r}: non-finite value {text!r}", lineno)
    return v


def ingest_fleet(source, interval_hours: float = 4.0) -> list[HouseProfile]:
    """Read a fleet CSV (path or text stream) into house profiles.

    Rows may appear in any order; each house must cover ``t_index`` 0..n-1
    exactly once, with the same n for every house.
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8", newline="") as fh:
            return _ingest(fh, interval_hours)
    return _ingest(source, interval_hours)


def _ingest(fh, interval_hours):
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty fleet file") from None
    if tuple(h.strip() for h in header) != FLEET_HEADER:
        raise SchemaError(f"expected header {','.join(FLEET_HEADER)}, got {','.join(header)}")

    meta: dict[str, tuple] = {}
    samples: dict[str, dict[int, tuple]] = {}
    for row in reader:
        lineno = reader.line_num
        if not row:
            continue
        if len(row) != len(FLEET_HEADER):
            raise ParseError(f"expected {len(FLEET_HEADER)} fields, got {len(row)}", lineno)
        hid = row[0]
        fa = _parse_float(row[1], "floor_area_m2", lineno)
        pa = _parse_float(row[2], "panel_area_m2", lineno)
        st = _parse_float(row[3], "storage_kwh", lineno)
        try:
            t = int(row[4])
        except ValueError:
            raise ParseError(f"column 't_index': cannot parse {row[4]!r} as an integer",
                             lineno) from None
        c = _parse_float(row[5], "consumption_kwh", lineno)
        g = _parse_float(row[6], "generation_kwh", lineno)
        if c < 0 or g < 0 or st < 0:
            raise ValidationError(f"line {lineno}: negative energy value for house {hid}")
        if t < 0:
            raise ParseError("negative t_index", lineno)
        m = (fa, pa, st)
        if meta.setdefault(hid, m) != m:
            raise SchemaError(f"line {lineno}: house {hid} metadata changes between rows")
        series = samples.setdefault(hid, {})
        if t in series:
            raise SchemaError(f"line {lineno}: duplicate t_index {t} for house {hid}")
        series[t] = (c, g)

    if not samples:
        raise SchemaError("fleet file has no data rows")
    lengths = {hid: len(s) for hid, s in samples.items()}
    if len(set(lengths.values())) != 1:
        raise SchemaError(f"ragged series: lengths {sorted(set(lengths.values()))}")
    n = next(iter(lengths.values()))
    profiles = []
    for hid, series in samples.items():
        if set(series) != set(range(n)):
            raise SchemaError(f"house {hid}: t_index does not cover 0..{n - 1}")
        arr = np.array([series[t] for t in range(n)], dtype=float)
        fa, pa, st = meta[hid]
        profiles.append(HouseProfile(hid, fa, pa, st, arr[:, 0], arr[:, 1], interval_hours))
    return profiles


# --------------------------------------------------------------------------
# synthesis


@dataclass(frozen=True)
class SynthesisConfig:
    """Parameters of the synthetic fleet generator.

    ``load_scale`` is the mean daily consumption per m^2 of floor area
    (kWh/m^2/day); ``solar_scale`` is the mean daily yield per m^2 of panel
    (kWh/m^2/day). ``jitter`` is the relative spread of panel area around
    10% of floor area.
    """

    houses: int = 516
    days: int = 365
    interval_hours: float = 4.0
    floor_area_range: tuple = (120.0, 280.0)
    storage_range_kwh: tuple = (0.0, 16.0)
    load_scale: float = 0.158
    solar_scale: float = 1.17
    jitter: float = 0.1
    seed: int = 0
    load_noise: float = 0.15
    weather_noise: float = 0.25

    def __post_init__(self):
        if int(self.houses) != self.houses or self.houses <= 0:
            raise ConfigError("houses must be a positive integer")
        if int(self.days) != self.days or self.days <= 0:
            raise ConfigError("days must be a positive integer")
        if self.interval_hours <= 0 or 24 % self.interval_hours:
            raise ConfigError("interval_hours must divide 24")
        lo, hi = self.floor_area_range
        if not 0 < lo <= hi:
            raise ConfigError("floor_area_range must be positive and ordered")
        lo, hi = self.storage_range_kwh
        if not 0 <= lo <= hi:
            raise ConfigError("storage_range_kwh must be nonnegative and ordered")
        if self.load_scale < 0 or self.solar_scale < 0:
            raise ConfigError("load_scale and solar_scale must be nonnegative")
        if not 0 <= self.jitter < 1:
            raise ConfigError("jitter must lie in [0, 1)")
        if self.load_noise < 0 or not 0 <= self.weather_noise < 1:
            raise ConfigError("noise parameters out of range")

    @classmethod
    def from_dict(cls, d: dict) -> "SynthesisConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown synthesis keys: {sorted(unknown)}")
        d = dict(d)
        for key in ("floor_area_range", "storage_range_kwh"):
            if key in d:
                d[key] = tuple(float(v) for v in d[key])
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "SynthesisConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["floor_area_range"] = list(d["floor_area_range"])
        d["storage_range_kwh"] = list(d["storage_range_kwh"])
        return d


# hourly household load shape (fractions of daily energy), evening heavy
_LOAD_SHAPE = np.array([
    0.030, 0.026, 0.024, 0.023, 0.024, 0.030, 0.040, 0.046,
    0.044, 0.040, 0.038, 0.038, 0.040, 0.042, 0.044, 0.048,
    0.054, 0.060, 0.062, 0.060, 0.056, 0.050, 0.042, 0.034])
_LOAD_SHAPE = _LOAD_SHAPE / _LOAD_SHAPE.sum()

SUNRISE, SUNSET = 6.0, 18.0


def _solar_bins(interval_hours):
    """Share of a day's half-sine irradiance falling in each sample."""
    edges = np.arange(0, 24 + interval_hours / 2, interval_hours)
    a = np.clip(edges[:-1], SUNRISE, SUNSET)
    b = np.clip(edges[1:], SUNRISE, SUNSET)
    w = np.pi / (SUNSET - SUNRISE)
    # integral of sin(w (t - sunrise)) over [a, b]
    share = (np.cos(w * (a - SUNRISE)) - np.cos(w * (b - SUNRISE))) / 2.0
    return share


def _load_bins(interval_hours):
    k = int(round(interval_hours))
    if k * round(24 / interval_hours) == 24:
        return _LOAD_SHAPE.reshape(-1, k).sum(axis=1)
    edges = np.arange(0, 24 + interval_hours / 2, interval_hours)
    cum = np.concatenate([[0.0], np.cumsum(_LOAD_SHAPE)])
    return np.diff(np.interp(edges, np.arange(25), cum))


def synthesize_fleet(spec: SynthesisConfig, seed: int | None = None) -> list[HouseProfile]:
    """Generate a deterministic synthetic fleet.

    Load follows an evening-heavy daily shape with a summer cooling bump and
    per-house log-normal daily noise. Generation is a half-sine between 6 h
    and 18 h, scaled by panel area, a seasonal factor and a fleet-wide daily
    weather factor.
    """
    if seed is None:
        seed = spec.seed
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    n, days = int(spec.houses), int(spec.days)
    per_day = int(round(24 / spec.interval_hours))

    floor = rng.uniform(*spec.floor_area_range, size=n)
    panel = PANEL_FRACTION * floor * (1.0 + rng.uniform(-spec.jitter, spec.jitter, size=n))
    storage = rng.uniform(*spec.storage_range_kwh, size=n)
    # per-house appetite for energy, around 1
    appetite = rng.lognormal(0.0, 0.25, size=n)
    appetite /= appetite.mean()

    d = np.arange(days)
    load_season = 1.0 + 0.25 * np.cos(2 * np.pi * (d - 200) / 365.0)
    solar_season = 1.0 + 0.30 * np.cos(2 * np.pi * (d - 172) / 365.0)
    weather = 1.0 - spec.weather_noise * rng.beta(0.6, 2.0, size=days)
    weather /= np.mean(1.0 - spec.weather_noise * 0.6 / 2.6)
    noise = rng.lognormal(-0.5 * spec.load_noise ** 2, spec.load_noise, size=(n, days))

    daily_load = (spec.load_scale * floor * appetite)[:, None] * load_season[None, :] * noise
    daily_solar = (spec.solar_scale * panel)[:, None] * (solar_season * weather)[None, :]

    cons = daily_load[:, :, None] * _load_bins(spec.interval_hours)[None, None, :]
    gen = daily_solar[:, :, None] * _solar_bins(spec.interval_hours)[None, None, :]
    cons = cons.reshape(n, days * per_day)
    gen = gen.reshape(n, days * per_day)

    width = len(str(n))
    return [HouseProfile(f"H{i + 1:0{max(width, 4)}d}", float(floor[i]), float(panel[i]),
                         float(storage[i]), cons[i], gen[i], float(spec.interval_hours))
            for i in range(n)]


# --------------------------------------------------------------------------
# daily reduction


def peak_mask(interval_hours: float, tariff: TariffSchedule) -> np.ndarray:
    """Boolean mask over one day's samples: True where the sample is peak."""
    per_day = int(round(24 / interval_hours))
    for edge in (tariff.peak_start_hour, tariff.peak_end_hour):
        q = edge / interval_hours
        if abs(q - round(q)) > 1e-12:
            raise AlignmentError(
                f"peak window edge {edge} h is not aligned to {interval_hours} h samples")
    starts = np.arange(per_day) * interval_hours
    return np.array([tariff.is_peak(h) for h in starts])


def daily_arrays(profiles, tariff: TariffSchedule) -> dict[str, np.ndarray]:
    """Vectorised ledger: arrays of shape (houses, days) for H_h, H_l, G_h, G_l, B."""
    if not profiles:
        raise ValidationError("empty fleet")
    ih = profiles[0].interval_hours
    n_samples = profiles[0].consumption.size
    for p in profiles:
        if p.interval_hours != ih or p.consumption.size != n_samples:
            raise ValidationError("profiles must share interval and length")
    mask = peak_mask(ih, tariff)
    per_day = mask.size
    cons = np.stack([p.consumption for p in profiles]).reshape(len(profiles), -1, per_day)
    gen = np.stack([p.generation for p in profiles]).reshape(len(profiles), -1, per_day)
    B = np.array([p.storage_capacity for p in profiles], dtype=float)
    days = cons.shape[1]
    return {
        "H_h": cons[:, :, mask].sum(axis=2),
        "H_l": cons[:, :, ~mask].sum(axis=2),
        "G_h": gen[:, :, mask].sum(axis=2),
        "G_l": gen[:, :, ~mask].sum(axis=2),
        "B": np.repeat(B[:, None], days, axis=1),
    }


def aggregate_daily(profile: HouseProfile, tariff: TariffSchedule) -> list[DailyEnergy]:
    arrs = daily_arrays([profile], tariff)
    return [DailyEnergy(profile.id, d, float(arrs["H_h"][0, d]), float(arrs["H_l"][0, d]),
                        float(arrs["G_h"][0, d]), float(arrs["G_l"][0, d]),
                        float(profile.storage_capacity))
            for d in range(profile.days)]
