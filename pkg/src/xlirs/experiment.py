"""Config ingestion, IRS-location sweeps and CSV output."""

from __future__ import annotations

import csv
import json
import logging
import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .channel import channels_for
from .geometry import ScenarioConfig, build_layout, dbm_to_watt
from .multi_user import sca_ao_multi_user
from .single_user import ao_single_user
from .spectral import diagnostic_row, snr_closed_forms, spectral_summary

__all__ = [
    "MODES",
    "ConfigError",
    "SweepSpec",
    "SweepRecord",
    "place_users",
    "parse_config",
    "load_config",
    "run_point",
    "run_sweep",
    "emit_csv",
    "read_csv",
    "spectral_rows",
    "write_rows_csv",
    "write_metadata",
]

log = logging.getLogger(__name__)

MODES = ("snr_curves", "single_user_ao", "multi_user_sca", "edof")
PLACEMENT = "uniform angle on a horizontal (x-y plane) circle around user 1"


class ConfigError(ValueError):
    """Invalid or unknown configuration entry."""


@dataclass(frozen=True)
class SweepSpec:
    start: float = 10.0
    stop: float = 140.0
    step: float = 2.0
    modes: tuple = MODES
    m_list: tuple = (64,)
    output: str = "sweep.csv"
    seed: int = 0
    realizations: int = 1
    user_radius_m: float = 5.0

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigError("sweep.step must be positive")
        if self.stop < self.start:
            raise ConfigError("sweep.stop must not be smaller than sweep.start")
        bad = [m for m in self.modes if m not in MODES]
        if bad:
            raise ConfigError(f"sweep.modes: unknown mode(s) {bad}; choose from {list(MODES)}")
        if not self.modes:
            raise ConfigError("sweep.modes must not be empty")
        if not self.m_list or any(int(m) != m or m < 1 for m in self.m_list):
            raise ConfigError("sweep.m_list must hold positive integers")
        if self.realizations < 1:
            raise ConfigError("sweep.realizations must be >= 1")
        if self.seed < 0:
            raise ConfigError("sweep.seed must be a non-negative integer")

    def grid(self) -> np.ndarray:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return np.round(self.start + self.step * np.arange(count), 12)


@dataclass
class SweepRecord:
    x_I: float
    M: int
    rate_ao: float | None = None
    rate_bound: float | None = None
    rate_approx: float | None = None
    rate_closed: float | None = None
    sum_rate_K: float | None = None
    edof: float | None = None
    iterations: int | None = None
    wall_time: float | None = None
    best_index: int | None = None
    rate_single_best: float | None = None
    sum_rate_K_mean: float | None = None
    sca_iterations: int | None = None
    numerical_rank: int | None = None
    multiplexing_capable: bool | None = None
    error: str = ""


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

_SCENARIO_KEYS = {
    "wavelength_m", "bs_antennas", "irs_horizontal", "irs_vertical", "users",
    "tx_power", "noise_power", "bs_center", "irs_center", "user1_position",
    "user_positions", "user_radius_m", "element_spacing_m",
}
_SWEEP_KEYS = {"start", "stop", "step", "modes", "m_list", "output", "seed", "realizations"}

_POWER_RE = re.compile(r"^\s*([-+0-9.eE]+)\s*(dbm|w|mw)?\s*$", re.IGNORECASE)


def parse_power(value, field_name: str) -> float:
    """Power in watts from a number (dBm) or a string with a unit."""
    if isinstance(value, bool):
        raise ConfigError(f"{field_name}: expected a power, got {value!r}")
    if isinstance(value, (int, float)):
        return dbm_to_watt(value)
    m = _POWER_RE.match(str(value))
    if not m:
        raise ConfigError(f"{field_name}: cannot parse power {value!r}")
    number, unit = float(m.group(1)), (m.group(2) or "dbm").lower()
    if unit == "dbm":
        return dbm_to_watt(number)
    if unit == "mw":
        number *= 1e-3
    if number <= 0:
        raise ConfigError(f"{field_name}: power must be positive")
    return number


def place_users(user1, count: int, radius: float, seed: int) -> tuple:
    """User 1 at ``user1``; the others on a circle of ``radius`` around it."""
    user1 = np.asarray(user1, dtype=float)
    rng = np.random.default_rng(seed)
    positions = [tuple(user1)]
    for angle in rng.uniform(0.0, 2.0 * np.pi, size=count - 1):
        positions.append(tuple(user1 + radius * np.array([np.cos(angle), np.sin(angle), 0.0])))
    return tuple(positions)


def _check_keys(section: dict, allowed: set, name: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in '{name}': {', '.join(unknown)}")


def load_config(data: dict | None, seed: int | None = None) -> tuple[ScenarioConfig, SweepSpec]:
    """Build validated configs from a parsed mapping; missing fields take the built-in defaults."""
    data = data or {}
    _check_keys(data, {"scenario", "sweep"}, "<root>")
    sc = data.get("scenario") or {}
    sw = data.get("sweep") or {}
    _check_keys(sc, _SCENARIO_KEYS, "scenario")
    _check_keys(sw, _SWEEP_KEYS, "sweep")

    sweep_kw = {}
    for key in ("start", "stop", "step"):
        if key in sw:
            sweep_kw[key] = float(sw[key])
    if "modes" in sw:
        modes = sw["modes"]
        sweep_kw["modes"] = tuple(modes.split(",") if isinstance(modes, str) else modes)
    if "m_list" in sw:
        sweep_kw["m_list"] = tuple(int(m) for m in sw["m_list"])
    if "output" in sw:
        sweep_kw["output"] = str(sw["output"])
    if "realizations" in sw:
        sweep_kw["realizations"] = int(sw["realizations"])
    sweep_kw["seed"] = int(seed if seed is not None else sw.get("seed", 0))
    if "user_radius_m" in sc:
        sweep_kw["user_radius_m"] = float(sc["user_radius_m"])
    spec = SweepSpec(**sweep_kw)

    users = int(sc.get("users", 2))
    if "user_positions" in sc:
        positions = tuple(tuple(float(c) for c in p) for p in sc["user_positions"])
    else:
        positions = place_users(sc.get("user1_position", (0.0, 150.0, 0.0)), users, spec.user_radius_m, spec.seed)

    noise = sc.get("noise_power", -90)
    if isinstance(noise, (list, tuple)):
        noise_w = tuple(parse_power(n, "scenario.noise_power") for n in noise)
    else:
        noise_w = (parse_power(noise, "scenario.noise_power"),) * users

    kw = dict(
        wavelength_m=float(sc.get("wavelength_m", 0.03)),
        bs_antennas=int(sc.get("bs_antennas", 64)),
        irs_horizontal=int(sc.get("irs_horizontal", 120)),
        irs_vertical=int(sc.get("irs_vertical", 4)),
        users=users,
        tx_power_w=parse_power(sc.get("tx_power", 30), "scenario.tx_power"),
        noise_powers_w=noise_w,
        bs_center=tuple(sc.get("bs_center", (0.0, 0.0, 0.0))),
        irs_center=tuple(sc.get("irs_center", (0.0, 50.0, 0.0))),
        user_positions=positions,
    )
    if sc.get("element_spacing_m") is not None:
        kw["element_spacing_m"] = float(sc["element_spacing_m"])
    try:
        config = ScenarioConfig(**kw)
    except ValueError as exc:
        raise ConfigError(f"scenario: {exc}") from exc
    if "m_list" not in sw:
        spec = SweepSpec(**{**asdict(spec), "m_list": (config.bs_antennas,)})
    check_grid(config, spec)
    return config, spec


def parse_config(path, seed: int | None = None) -> tuple[ScenarioConfig, SweepSpec]:
    """Read a YAML config file (sections ``scenario`` and ``sweep``)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return load_config(data, seed=seed)


def check_grid(config: ScenarioConfig, spec: SweepSpec) -> None:
    for x in spec.grid():
        try:
            build_layout(config.with_irs_at(x))
        except ValueError as exc:
            raise ConfigError(f"sweep grid point x_I={x:g} m: {exc}") from exc


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def _rate(snr: float) -> float:
    return float(np.log2(1.0 + snr))


def run_point(config: ScenarioConfig, x_irs: float, M: int, modes, seed: int = 0,
              realizations: int = 1, user_radius_m: float = 5.0) -> SweepRecord:
    """All requested modes at one IRS location and antenna count."""
    record = SweepRecord(x_I=float(x_irs), M=int(M))
    t0 = time.perf_counter()
    try:
        cfg = config.with_irs_at(x_irs).replace(bs_antennas=int(M))
        layout = build_layout(cfg)
        channels = channels_for(cfg)
        N = cfg.irs_elements
        if "snr_curves" in modes or "edof" in modes:
            summary = spectral_summary(channels.G_phase)
            if "snr_curves" in modes:
                est = snr_closed_forms(summary, layout.d_bi, float(layout.d_ik[0]), cfg.noise_powers_w[0],
                                       cfg.tx_power_w, cfg.wavelength_m, cfg.bs_antennas, N)
                record.rate_bound = _rate(est.bound)
                record.rate_approx = _rate(est.approx)
                record.rate_closed = _rate(est.closed)
                record.best_index = est.best_index
            if "edof" in modes:
                record.edof = summary.edof
                record.numerical_rank = summary.numerical_rank
                record.multiplexing_capable = summary.edof >= cfg.users
        if "single_user_ao" in modes:
            trace = ao_single_user(channels, cfg)
            record.rate_ao = trace.rate
            record.iterations = len(trace.iterations) - 1
        if "multi_user_sca" in modes:
            trace = sca_ao_multi_user(channels, cfg)
            record.sum_rate_K = trace.sum_rate
            record.sca_iterations = len(trace.iterations) - 1
            record.rate_single_best = max(ao_single_user(channels, cfg, user=k).rate for k in range(cfg.users))
            if realizations > 1:
                sums = [trace.sum_rate]
                user1 = cfg.user_positions[0]
                for i in range(1, realizations):
                    alt = cfg.replace(user_positions=place_users(user1, cfg.users, user_radius_m, seed + i))
                    sums.append(sca_ao_multi_user(channels_for(alt), alt).sum_rate)
                record.sum_rate_K_mean = float(np.mean(sums))
    except Exception as exc:  # recorded per point, the sweep keeps going
        record.error = f"{type(exc).__name__}: {exc}".replace("\n", " ")
        log.warning("x_I=%g M=%d failed: %s", x_irs, M, record.error)
    record.wall_time = time.perf_counter() - t0
    return record


def _run_task(args):
    return run_point(*args)


def run_sweep(config: ScenarioConfig, spec: SweepSpec, workers: int = 1, progress=None) -> list[SweepRecord]:
    """Evaluate every (x_I, M) pair; output order is sorted by (x_I, M)."""
    check_grid(config, spec)
    tasks = [
        (config, float(x), int(M), tuple(spec.modes), spec.seed, spec.realizations, spec.user_radius_m)
        for x in spec.grid()
        for M in spec.m_list
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_task, tasks))
    else:
        records = []
        for task in tasks:
            records.append(_run_task(task))
            if progress is not None:
                progress(records[-1])
    return sorted(records, key=lambda r: (r.x_I, r.M))


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.9g}"
    return str(value)


def record_columns(include_timing: bool = False) -> list[str]:
    names = [f.name for f in fields(SweepRecord)]
    if not include_timing:
        names.remove("wall_time")
    return names


def emit_csv(records, path, include_timing: bool = False) -> Path:
    """Write records as UTF-8 CSV, one row per record, 9 significant digits.

    Wall time is left out unless ``include_timing`` so that identical sweeps
    produce identical bytes.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to write")
    path = Path(path)
    columns = record_columns(include_timing)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for rec in records:
                writer.writerow([_fmt(getattr(rec, c)) for c in columns])
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc
    return path


def read_csv(path) -> list[dict]:
    """Parse an emitted CSV back into dicts of floats (None for empty cells)."""
    out = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            parsed = {}
            for key, value in row.items():
                if key == "error":
                    parsed[key] = value
                elif value == "":
                    parsed[key] = None
                else:
                    parsed[key] = float(value)
            out.append(parsed)
    return out


def spectral_rows(config: ScenarioConfig, spec: SweepSpec, count: int = 5) -> list[dict]:
    """Per-location eigenvalues, correlation ratios and EDoF for ``config.bs_antennas``."""
    rows = []
    for x in spec.grid():
        channels = channels_for(config.with_irs_at(x))
        rows.append(diagnostic_row(float(x), spectral_summary(channels.G_phase), count))
    return rows


def write_rows_csv(rows: list[dict], path) -> Path:
    if not rows:
        raise ValueError("no rows to write")
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(list(rows[0]))
            for row in rows:
                writer.writerow([_fmt(v) for v in row.values()])
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc
    return path


def write_metadata(config: ScenarioConfig, spec: SweepSpec, path) -> Path:
    """JSON sidecar describing the inputs of a sweep (no timestamps)."""
    meta = {
        "scenario": asdict(config),
        "sweep": {**asdict(spec), "grid_points": len(spec.grid())},
        "user_placement": PLACEMENT,
        "user_radius_m": spec.user_radius_m,
    }
    path = Path(path)
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
