"""Configuration, seeded Monte Carlo trials and sweeps, result files.

Random streams come from NumPy's ``SeedSequence``/``PCG64``. The phase
schedule for a RIS count is seeded by ``(master_seed, 0, ris_count)`` and
every trial by ``(master_seed, 1, ris_count, snr_bits, vehicle_count,
trial_index)`` where ``snr_bits`` is the IEEE-754 bit pattern of the SNR in
dB. Trials therefore do not depend on execution order or thread count.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import platform
import struct
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .channel import RadioConfig, SensingMatrix, build_sensing_matrix
from .detection import (DetectionConfig, MetricsReport, aggregate, classify_spaces,
                        classify_units, compute_metrics)
from .geometry import (ParkingLayout, Scene, build_grid, build_parking_layout, build_ris_array,
                       build_scene)
from .measurement import REFERENCE_MODES, acquire, arrive, generate_phase_schedule, generate_scene
from .recovery import DifferenceImage, SpConfig, sp_recover

THREADS_ENV = "RIS_SIM_THREADS"
SEEDING = ("numpy SeedSequence/PCG64; phases: (master_seed, 0, ris_count); "
           "trials: (master_seed, 1, ris_count, float64 bits of snr_db, vehicle_count, trial_index)")
FAST_TRIALS = 100

_PHASE_STREAM = 0
_TRIAL_STREAM = 1


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field."""


def _default_ris_layouts() -> dict[str, list[list[float]]]:
    return {
        "1": [[0.0, 0.0]],
        "2": [[7.5, 0.0], [-7.5, 0.0]],
        "4": [[7.5, 7.5], [-7.5, 7.5], [-7.5, -7.5], [7.5, -7.5]],
    }


@dataclass
class GeometryConfig:
    nx: int = 10
    ny: int = 11
    cell_size: float = 2.5
    lane_rows: list[int] = field(default_factory=lambda: [2, 5, 8])
    units_per_space: int = 2
    ceiling_height: float = 3.0
    tx: list[list[float]] = field(default_factory=lambda: [[-12.5, -13.75, 1.0]])
    rx: list[list[float]] = field(default_factory=lambda: [[-12.5, -13.75, 1.0]])
    ris_rows: int = 50
    ris_cols: int = 50
    ris_pitch: float = 0.05
    # RIS count -> (x, y) panel centers; panels hang at ceiling_height
    ris_layouts: dict[str, list[list[float]]] = field(default_factory=_default_ris_layouts)


@dataclass
class RadioBlock:
    frequency: float = 3e9
    gain: Any = 1.0  # real number or [re, im]


@dataclass
class AcquisitionConfig:
    K: int = 300
    P: int = 100
    reference_mode: str = "averaged"
    background_vehicles: int = 0  # parked before the reference in "previous" mode


@dataclass
class SweepConfig:
    snr_db: list[float] = field(default_factory=lambda: [10.0, 20.0, 30.0])
    ris_count: list[int] = field(default_factory=lambda: [2])
    vehicle_count: list[int] = field(default_factory=lambda: list(range(1, 41)))
    trials: int = 1000


@dataclass
class RecoveryConfig:
    sparsity_mode: str = "oracle"
    fixed_sparsity: int = 80
    max_iterations: int = 50
    residual_tolerance: float = 1e-12
    normalize: bool = True


@dataclass
class DetectionBlock:
    tau1: float = 0.25
    tau2: float = 0.55
    eta: float = 0.5


@dataclass
class ExperimentConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    radio: RadioBlock = field(default_factory=RadioBlock)
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    recovery: RecoveryConfig = field(default_factory=RecoveryConfig)
    detection: DetectionBlock = field(default_factory=DetectionBlock)
    master_seed: int = 0

    def to_dict(self) -> dict:
        return _jsonable(dataclasses.asdict(self))

    # convenience constructors for the pieces the other modules need

    def radio_config(self) -> RadioConfig:
        g = self.radio.gain
        gain = complex(*g) if isinstance(g, (list, tuple)) else complex(g)
        return RadioConfig(float(self.radio.frequency), gain)

    def detection_config(self) -> DetectionConfig:
        d = self.detection
        return DetectionConfig(d.tau1, d.tau2, d.eta)

    def layout(self) -> ParkingLayout:
        g = self.geometry
        return build_parking_layout(build_grid(g.nx, g.ny, g.cell_size), g.lane_rows,
                                    g.units_per_space)

    def scene(self, ris_count: int) -> Scene:
        g = self.geometry
        centers = g.ris_layouts.get(str(ris_count))
        if centers is None:
            raise ConfigError(f"geometry.ris_layouts: no placement for {ris_count} RIS")
        ris = [build_ris_array((x, y, g.ceiling_height), g.ris_rows, g.ris_cols, g.ris_pitch)
               for x, y in centers]
        return build_scene(build_grid(g.nx, g.ny, g.cell_size), g.tx, g.rx, ris)

    def validate(self) -> None:
        g, a, s, r = self.geometry, self.acquisition, self.sweep, self.recovery
        checks = [
            ("geometry.nx", g.nx >= 1), ("geometry.ny", g.ny >= 1),
            ("geometry.cell_size", g.cell_size > 0), ("geometry.ris_rows", g.ris_rows >= 1),
            ("geometry.ris_cols", g.ris_cols >= 1), ("geometry.ris_pitch", g.ris_pitch > 0),
            ("geometry.units_per_space", g.units_per_space >= 1),
            ("geometry.tx", len(g.tx) >= 1), ("geometry.rx", len(g.rx) >= 1),
            ("radio.frequency", self.radio.frequency > 0),
            ("acquisition.K", a.K >= 1), ("acquisition.P", a.P >= 1),
            ("acquisition.reference_mode", a.reference_mode in REFERENCE_MODES),
            ("acquisition.background_vehicles", a.background_vehicles >= 0),
            ("sweep.trials", s.trials >= 1), ("sweep.snr_db", len(s.snr_db) >= 1),
            ("sweep.ris_count", len(s.ris_count) >= 1 and all(t >= 1 for t in s.ris_count)),
            ("sweep.vehicle_count", len(s.vehicle_count) >= 1 and all(v >= 0 for v in s.vehicle_count)),
            ("recovery.sparsity_mode", r.sparsity_mode in ("oracle", "fixed")),
            ("recovery.fixed_sparsity", r.fixed_sparsity >= 1),
            ("recovery.max_iterations", r.max_iterations >= 0),
            ("recovery.residual_tolerance", r.residual_tolerance >= 0),
            ("detection.tau1", self.detection.tau1 < self.detection.tau2),
            ("detection.eta", 0 < self.detection.eta <= 1),
        ]
        for name, ok in checks:
            if not ok:
                raise ConfigError(f"{name}: invalid value")
        for t in s.ris_count:
            placement = g.ris_layouts.get(str(t))
            if placement is None or len(placement) != t:
                raise ConfigError(f"geometry.ris_layouts: need {t} panel centers for ris_count {t}")
        try:
            self.radio_config()
            layout = self.layout()
        except ValueError as exc:
            raise ConfigError(f"geometry: {exc}") from exc
        free = layout.n_spaces - (a.background_vehicles if a.reference_mode == "previous" else 0)
        if free < 0 or max(s.vehicle_count) > free:
            raise ConfigError(f"sweep.vehicle_count: at most {max(free, 0)} vehicles fit the layout")


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


_BLOCKS = {
    "geometry": GeometryConfig, "radio": RadioBlock, "acquisition": AcquisitionConfig,
    "sweep": SweepConfig, "recovery": RecoveryConfig, "detection": DetectionBlock,
}


def _coerce(name: str, value, default):
    """Convert a raw JSON value to the type of the field default."""
    try:
        if name == "radio.gain":
            if isinstance(value, (list, tuple)):
                re_, im = (float(v) for v in value)
                return [re_, im]
            return float(value)
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise TypeError
            return value
        if isinstance(default, int):
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, list) and name == "sweep.snr_db":
            return [float(v) for v in value]
        if isinstance(default, list) and name in ("sweep.ris_count", "sweep.vehicle_count",
                                                  "geometry.lane_rows"):
            return [int(v) for v in value]
        if isinstance(default, list) and name in ("geometry.tx", "geometry.rx"):
            pts = [[float(c) for c in p] for p in value]
            if any(len(p) != 3 for p in pts):
                raise TypeError
            return pts
        if isinstance(default, dict):
            return {str(k): [[float(c) for c in p] for p in v] for k, v in value.items()}
        if isinstance(default, str):
            if not isinstance(value, str):
                raise TypeError
            return value
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: cannot interpret {value!r}") from exc
    return value


def config_from_dict(data: dict) -> ExperimentConfig:
    """Build a validated config from nested dicts; missing fields keep their defaults."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    cfg = ExperimentConfig()
    for key, value in data.items():
        if key == "master_seed":
            cfg.master_seed = _coerce("master_seed", value, 0)
            continue
        if key not in _BLOCKS:
            warnings.warn(f"unknown config field {key!r} ignored", stacklevel=2)
            continue
        if not isinstance(value, dict):
            raise ConfigError(f"{key}: expected an object")
        block = getattr(cfg, key)
        known = {f.name for f in dataclasses.fields(block)}
        for name, raw in value.items():
            if name not in known:
                warnings.warn(f"unknown config field '{key}.{name}' ignored", stacklevel=2)
                continue
            setattr(block, name, _coerce(f"{key}.{name}", raw, getattr(block, name)))
    cfg.validate()
    return cfg


def load_config(path) -> ExperimentConfig:
    """Read a JSON config file. An empty file yields the default setup."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        data = {}
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data)


# -- seeding ---------------------------------------------------------------

def _snr_key(snr_db: float) -> int:
    return int.from_bytes(struct.pack("<d", float(snr_db)), "little")


def phase_seed(master_seed: int, ris_count: int) -> int:
    ss = np.random.SeedSequence([master_seed, _PHASE_STREAM, ris_count])
    return int(ss.generate_state(1, np.uint64)[0])


def trial_rng(master_seed: int, ris_count: int, snr_db: float, vehicle_count: int,
              trial_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence([master_seed, _TRIAL_STREAM, ris_count, _snr_key(snr_db),
                                 vehicle_count, trial_index])
    return np.random.default_rng(ss)


def build_matrix(cfg: ExperimentConfig, ris_count: int) -> SensingMatrix:
    """Sensing matrix for ``ris_count`` panels with the config's phase stream."""
    scene = cfg.scene(ris_count)
    schedule = generate_phase_schedule(cfg.acquisition.K, [r.M for r in scene.ris],
                                       phase_seed(cfg.master_seed, ris_count))
    return build_sensing_matrix(scene, schedule, cfg.radio_config())


# -- trials ----------------------------------------------------------------

@dataclass(frozen=True)
class TrialRecord:
    ris_count: int
    snr_db: float
    vehicle_count: int
    trial_index: int
    metrics: MetricsReport
    sparsity: int
    iterations: int


def run_trial(cfg: ExperimentConfig, ris_count: int, snr_db: float, vehicle_count: int,
              trial_index: int, A: SensingMatrix | None = None,
              layout: ParkingLayout | None = None) -> TrialRecord:
    """One pass of the difference-imaging pipeline on a freshly drawn scene."""
    if A is None:
        A = build_matrix(cfg, ris_count)
    if layout is None:
        layout = cfg.layout()
    acq = cfg.acquisition
    rng = trial_rng(cfg.master_seed, ris_count, snr_db, vehicle_count, trial_index)

    if acq.reference_mode == "previous":
        before = generate_scene(layout, acq.background_vehicles, rng)
        scene = arrive(layout, before, vehicle_count, rng)
        changed_spaces = scene.occupied_spaces - before.occupied_spaces
    else:
        scene = generate_scene(layout, vehicle_count, rng)
        changed_spaces = scene.occupied_spaces
    meas = acquire(A, scene, snr_db, rng, P=acq.P, mode=acq.reference_mode)

    rec = cfg.recovery
    if rec.sparsity_mode == "oracle":
        s = len(scene.changed_units)
    else:
        s = min(rec.fixed_sparsity, A.N_A, A.Q)
    if s == 0:
        image = DifferenceImage(np.zeros(A.Q, dtype=complex), frozenset(),
                                float(np.linalg.norm(meas.delta_y)), 0)
    else:
        image = sp_recover(A, meas.delta_y,
                           SpConfig(s, rec.max_iterations, rec.residual_tolerance, rec.normalize))

    det = cfg.detection_config()
    omega = classify_units(image.delta_sigma_hat, det)
    predicted = classify_spaces(omega, layout, det.eta)
    truth = np.zeros(layout.n_spaces, dtype=bool)
    truth[sorted(changed_spaces)] = True
    metrics = compute_metrics(truth, predicted, scene.delta, image.delta_sigma_hat)
    return TrialRecord(ris_count, float(snr_db), vehicle_count, trial_index, metrics, s,
                       image.iterations)


# -- sweeps ----------------------------------------------------------------

RESULT_FIELDS = ("ris_count", "snr_db", "vehicle_count", "detection_rate", "nmse_db", "far",
                 "trials", "seed")


@dataclass(frozen=True)
class ResultRow:
    ris_count: int
    snr_db: float
    vehicle_count: int
    detection_rate: float
    nmse_db: float
    far: float
    trials: int
    seed: int


@dataclass
class ExperimentResult:
    rows: list[ResultRow] = field(default_factory=list)
    records: list[TrialRecord] = field(default_factory=list)


def resolve_workers(workers: int | None = None) -> int:
    n = workers if workers is not None else (os.cpu_count() or 1)
    cap = os.environ.get(THREADS_ENV)
    if cap:
        n = min(n, int(cap))
    return max(1, n)


def run_sweep(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    """Run every (ris_count, snr, vehicle_count) point of the sweep.

    Sensing matrices are built once per RIS count and shared read-only by
    all trials. Rows come back sorted by ris_count, snr, vehicle_count.
    """
    cfg.validate()
    sw = cfg.sweep
    layout = cfg.layout()
    ris_counts = sorted(set(sw.ris_count))
    snrs = sorted(set(sw.snr_db))
    vehicles = sorted(set(sw.vehicle_count))
    matrices = {t: build_matrix(cfg, t) for t in ris_counts}

    tasks = [(t, snr, v, i) for t in ris_counts for snr in snrs for v in vehicles
             for i in range(sw.trials)]

    def work(task):
        t, snr, v, i = task
        return run_trial(cfg, t, snr, v, i, A=matrices[t], layout=layout)

    n_workers = resolve_workers(workers)
    if n_workers == 1:
        records = [work(task) for task in tasks]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            records = list(pool.map(work, tasks))

    rows = []
    for start in range(0, len(records), sw.trials):
        chunk = records[start:start + sw.trials]
        agg = aggregate(r.metrics for r in chunk)
        head = chunk[0]
        rows.append(ResultRow(head.ris_count, head.snr_db, head.vehicle_count,
                              agg.detection_rate, agg.nmse_db, agg.far, len(chunk),
                              cfg.master_seed))
    return ExperimentResult(rows, records)


# -- persistence -------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_results(result: ExperimentResult, out_dir, cfg: ExperimentConfig | None = None,
                  wall_time: float | None = None) -> dict[str, Path]:
    """Write ``results.csv`` and ``manifest.json`` (plus ``trials.csv`` when
    per-trial records are present) into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {"results": out / "results.csv", "manifest": out / "manifest.json"}
        with paths["results"].open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(RESULT_FIELDS)
            for row in result.rows:
                writer.writerow([_fmt(getattr(row, f)) for f in RESULT_FIELDS])
        if result.records:
            paths["trials"] = out / "trials.csv"
            with paths["trials"].open("w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["ris_count", "snr_db", "vehicle_count", "trial_index",
                                 "detection_rate", "far", "nmse", "D", "D1", "D2", "sparsity",
                                 "iterations"])
                for r in result.records:
                    m = r.metrics
                    writer.writerow([_fmt(v) for v in (
                        r.ris_count, r.snr_db, r.vehicle_count, r.trial_index, m.detection_rate,
                        m.far, m.nmse, m.D, m.D1, m.D2, r.sparsity, r.iterations)])
        manifest = {
            "package": "risparking",
            "version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "wall_time_s": wall_time,
            "written_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "rows": len(result.rows),
            "seeding": SEEDING,
            "config": cfg.to_dict() if cfg is not None else None,
        }
        paths["manifest"].write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"could not write results to {out}: {exc}") from exc
    return paths


def read_results(path) -> list[ResultRow]:
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RESULT_FIELDS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [ResultRow(int(r["ris_count"]), float(r["snr_db"]), int(r["vehicle_count"]),
                          float(r["detection_rate"]), float(r["nmse_db"]), float(r["far"]),
                          int(r["trials"]), int(r["seed"])) for r in reader]


def format_report(rows: list[ResultRow]) -> str:
    """Plain-text table of a results file, one line per sweep point."""
    header = f"{'RIS':>3} {'SNR dB':>7} {'vehicles':>8} {'det. rate':>9} {'NMSE dB':>8} {'FAR':>7} {'trials':>6}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(f"{r.ris_count:>3} {r.snr_db:>7g} {r.vehicle_count:>8} "
                     f"{r.detection_rate:>9.4f} {r.nmse_db:>8.2f} {r.far:>7.4f} {r.trials:>6}")
    return "\n".join(lines)

