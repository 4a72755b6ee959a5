"""Monte Carlo reproduction harness.

A configuration has up to two *arms*: a ``classical`` arm running any of
Bartlett / Capon / MUSIC on one array, and an ``xsbs`` arm running the
switched-beam cross-correlation estimator on (possibly) another array. Each
(snapshot count, SNR, trial) cell synthesizes fresh snapshots per arm, runs
every estimator of that arm and records PFR, detected angles and errors.

Trial seeds depend only on ``(base seed, trial index, arm)``, so each trial
sees the same waveform and noise streams at every SNR (common random
numbers across the sweep).
"""

from __future__ import annotations

import copy
import csv
import itertools
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .array_model import ArrayGeometry, uniform_hpbw
from .chebyshev import BeamGrid, build_beam_grid
from .errors import ConfigError
from .estimators import angular_distance_deg, bartlett, capon, detect_peaks, music, xsbs
from .numerics import sample_covariance
from .scene import Source, max_omni_count, omni_weights, synthesize
from .spectrum import Spectrum

CLASSICAL_ESTIMATORS = ("bartlett", "capon", "music")
ARM_IDS = {"classical": 1, "xsbs": 2}

SCENARIOS: dict[str, dict[str, Any]] = {
    "fig-spectra-comparison": {
        "sources": [180.0],
        "snr_db": [0.0, -15.0],
        "classical": {"array": {"kind": "uca", "elements": 16}, "estimators": list(CLASSICAL_ESTIMATORS)},
        "xsbs": None,
    },
    "fig-resolution": {
        "sources": [180.0, 200.0],
        "snr_db": [0.0],
        "classical": {"array": {"kind": "uca", "elements": 16}, "estimators": list(CLASSICAL_ESTIMATORS)},
        "xsbs": None,
    },
    "fig-xsbs-snr": {
        "sources": [90.0],
        "snr_db": [27.0, 0.0, -15.0],
        "classical": None,
    },
    "fig-xsbs-samples": {
        "sources": [90.0],
        "snr_db": [0.0],
        "snapshots": [10, 100, 1000],
        "classical": None,
    },
    "fig-xsbs-vs-music": {
        "sources": [90.0],
        "snr_db": [-20.0, -25.0, -30.0],
        "classical": {"array": {"kind": "ula", "elements": 16, "spacing": 0.5}, "estimators": ["music"]},
    },
    "fig-xsbs-resolution": {
        "sources": [180.0, 192.0],
        "snr_db": [0.0, -15.0],
        "classical": {"array": {"kind": "uca", "elements": 16}, "estimators": ["music"]},
        # smallest even half-wavelength UCA whose uniform beam is <= 6 deg wide
        "xsbs": {
            "array": {"kind": "uca", "elements": 44},
            "sll_db": None,
            "omni_elements": 2,
            "correlation": "replica",
        },
    },
    "custom": {},
}

BASE_CONFIG: dict[str, Any] = {
    "scenario": "custom",
    "sources": [90.0],
    "snr_db": [0.0],
    "snapshots": [1000],
    "trials": 20,
    "seed": 0,
    "waveform": "complex-gaussian",
    "grid_step_deg": 0.5,
    "threshold_db": 3.0,
    "min_separation_deg": 0.0,
    "workers": 1,
    "out": None,
    "classical": {
        "array": {"kind": "ula", "elements": 16, "spacing": 0.5},
        "estimators": list(CLASSICAL_ESTIMATORS),
        "correlation": "independent",
        "n_sources": None,
    },
    "xsbs": {
        "array": {"kind": "ula", "elements": 17, "spacing": 0.5},
        "sll_db": 15.0,
        "omni_elements": 5,
        "beams": None,
        "sector_deg": None,
        "correlation": "replica",
    },
}


def _deep_update(base: dict, upd: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in upd.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_update(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _geometry(spec: Any) -> ArrayGeometry:
    if isinstance(spec, ArrayGeometry):
        return spec
    if not isinstance(spec, dict):
        raise ConfigError(f"array must be a mapping, got {spec!r}")
    kind = str(spec.get("kind", "")).lower()
    try:
        if kind == "ula":
            return ArrayGeometry.ula(int(spec["elements"]), float(spec.get("spacing", 0.5)))
        if kind == "uca":
            return ArrayGeometry.uca(int(spec["elements"]), spec.get("radius"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad array specification {spec!r}: {exc}") from exc
    raise ConfigError(f"array kind must be 'ula' or 'uca', got {kind!r}")


@dataclass(frozen=True)
class ClassicalArm:
    geometry: ArrayGeometry
    estimators: tuple[str, ...] = CLASSICAL_ESTIMATORS
    correlation: str = "independent"
    n_sources: int | None = None


@dataclass(frozen=True)
class XsbsArm:
    geometry: ArrayGeometry
    sll_db: float | None = 15.0
    omni_elements: int = 5
    beams: int | None = None
    sector_deg: tuple[float, float] | None = None
    correlation: str = "replica"


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    sources_deg: tuple[float, ...]
    snr_db: tuple[float, ...]
    snapshots: tuple[int, ...] = (1000,)
    trials: int = 20
    seed: int = 0
    classical: ClassicalArm | None = None
    xsbs: XsbsArm | None = None
    waveform: str = "complex-gaussian"
    grid_step_deg: float = 0.5
    threshold_db: float = 3.0
    min_separation_deg: float = 0.0
    workers: int = 1
    out: str | None = None

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        try:
            classical = data.get("classical")
            if classical is not None:
                classical = ClassicalArm(
                    geometry=_geometry(classical.get("array")),
                    estimators=tuple(str(e).lower() for e in classical.get("estimators", CLASSICAL_ESTIMATORS)),
                    correlation=str(classical.get("correlation", "independent")),
                    n_sources=classical.get("n_sources"),
                )
            xs = data.get("xsbs")
            if xs is not None:
                sector = xs.get("sector_deg")
                xs = XsbsArm(
                    geometry=_geometry(xs.get("array")),
                    sll_db=None if xs.get("sll_db") is None else float(xs["sll_db"]),
                    omni_elements=int(xs.get("omni_elements", 5)),
                    beams=None if xs.get("beams") is None else int(xs["beams"]),
                    sector_deg=None if sector is None else (float(sector[0]), float(sector[1])),
                    correlation=str(xs.get("correlation", "replica")),
                )
            cfg = cls(
                scenario=str(data.get("scenario", "custom")),
                sources_deg=tuple(float(s) for s in data["sources"]),
                snr_db=tuple(float(s) for s in data["snr_db"]),
                snapshots=tuple(int(n) for n in data.get("snapshots", [1000])),
                trials=int(data.get("trials", 20)),
                seed=int(data.get("seed", 0)),
                classical=classical,
                xsbs=xs,
                waveform=str(data.get("waveform", "complex-gaussian")),
                grid_step_deg=float(data.get("grid_step_deg", 0.5)),
                threshold_db=float(data.get("threshold_db", 3.0)),
                min_separation_deg=float(data.get("min_separation_deg", 0.0)),
                workers=int(data.get("workers", 1)),
                out=data.get("out"),
            )
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid configuration: {exc}") from exc
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.snr_db:
            raise ConfigError("SNR list is empty")
        if any(math.isnan(s) for s in self.snr_db):
            raise ConfigError("SNR values must be numbers")
        if not self.snapshots or min(self.snapshots) < 1:
            raise ConfigError("snapshot counts must be >= 1")
        if not self.sources_deg:
            raise ConfigError("at least one source azimuth is required")
        if self.classical is None and self.xsbs is None:
            raise ConfigError("configuration enables neither the classical nor the xsbs arm")
        if self.waveform not in ("complex-gaussian", "qpsk"):
            raise ConfigError(f"unknown waveform {self.waveform!r}")
        if not self.grid_step_deg > 0:
            raise ConfigError("grid_step_deg must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        for name, arm in (("classical", self.classical), ("xsbs", self.xsbs)):
            if arm is None:
                continue
            if arm.correlation not in ("independent", "replica"):
                raise ConfigError(f"{name}: correlation must be 'independent' or 'replica'")
            geom = arm.geometry
            if not np.all(geom.in_domain(np.deg2rad(self.sources_deg))):
                raise ConfigError(f"{name}: source azimuth outside the {geom.describe()} domain")
        if self.classical is not None:
            bad = set(self.classical.estimators) - set(CLASSICAL_ESTIMATORS)
            if bad or not self.classical.estimators:
                raise ConfigError(f"classical estimators must be drawn from {CLASSICAL_ESTIMATORS}, got {sorted(bad)}")
            n_src = self.classical.n_sources or len(self.sources_deg)
            if "music" in self.classical.estimators and not 1 <= n_src < self.classical.geometry.elements:
                raise ConfigError(f"MUSIC needs 1 <= n_sources < M (n_sources={n_src})")
        if self.xsbs is not None:
            limit = max_omni_count(self.xsbs.geometry)
            if not 1 <= self.xsbs.omni_elements <= limit:
                raise ConfigError(
                    f"xsbs: {self.xsbs.omni_elements} omni elements infeasible for "
                    f"{self.xsbs.geometry.describe()}; maximum is {limit}"
                )
            try:
                _beam_grid(self.xsbs)
            except ValueError as exc:
                raise ConfigError(f"xsbs: cannot build beam grid: {exc}") from exc

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def load_config(scenario: str, path: str | os.PathLike | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Scenario defaults, then the YAML file at ``path``, then ``overrides``."""
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {sorted(SCENARIOS)}")
    data = _deep_update(BASE_CONFIG, SCENARIOS[scenario])
    data["scenario"] = scenario
    if path is not None:
        try:
            with open(path) as fh:
                loaded = yaml.safe_load(fh) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a mapping")
        data = _deep_update(data, loaded)
        data["scenario"] = scenario
    if overrides:
        data = _deep_update(data, {k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(data)


@dataclass
class TrialRecord:
    scenario: str
    trial: int
    seed: int
    snr_db: float
    snapshots: int
    estimator: str
    detected_deg: list[float]
    true_deg: list[float]
    pfr_db: float
    error_deg: float
    detected: bool
    resolved: bool
    wall_time_s: float = 0.0


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[TrialRecord]
    summary: list[dict[str, Any]]
    spectra: dict[tuple[str, float, int], Spectrum] = field(default_factory=dict)


def trial_seed(base: int, trial: int, arm: str) -> int:
    ss = np.random.SeedSequence([int(base) & 0xFFFFFFFF, trial, ARM_IDS[arm]])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@lru_cache(maxsize=32)
def _beam_grid(arm: XsbsArm) -> BeamGrid:
    sector = None if arm.sector_deg is None else tuple(np.deg2rad(arm.sector_deg))
    return build_beam_grid(arm.geometry, arm.sll_db, sector, arm.beams)


def _sources(cfg: ExperimentConfig, correlation: str) -> list[Source]:
    out = []
    for i, az in enumerate(cfg.sources_deg):
        replica = 0 if (correlation == "replica" and i > 0) else None
        out.append(Source(np.deg2rad(az), 1.0, cfg.waveform, replica))
    return out


def match_error(detected_deg, true_deg, circular: bool) -> float:
    """Largest angular error under the best one-to-one assignment of the
    strongest ``len(true_deg)`` detections to the true angles; ``inf`` when
    there are fewer detections than sources."""
    true_deg = list(true_deg)
    detected_deg = list(detected_deg)[: len(true_deg)]
    if len(detected_deg) < len(true_deg):
        return math.inf
    best = math.inf
    for perm in itertools.permutations(detected_deg):
        err = max(float(angular_distance_deg(d, t, circular)) for d, t in zip(perm, true_deg))
        best = min(best, err)
    return best


def _min_source_separation(cfg: ExperimentConfig, circular: bool) -> float:
    s = cfg.sources_deg
    if len(s) < 2:
        return math.inf
    return min(float(angular_distance_deg(a, b, circular)) for a, b in itertools.combinations(s, 2))


def _record(cfg, trial, seed, snr, N, name, est, hpbw_deg, circular, t0) -> TrialRecord:
    detected = [float(a) for a in est.angles_deg]
    err = match_error(detected, cfg.sources_deg, circular)
    tol = min(hpbw_deg, 0.5 * _min_source_separation(cfg, circular))
    return TrialRecord(
        scenario=cfg.scenario,
        trial=trial,
        seed=seed,
        snr_db=snr,
        snapshots=N,
        estimator=name,
        detected_deg=detected,
        true_deg=list(cfg.sources_deg),
        pfr_db=float(est.pfr_db),
        error_deg=err,
        detected=bool(err <= hpbw_deg),
        resolved=bool(err <= tol),
        wall_time_s=time.perf_counter() - t0,
    )


def run_trial(cfg: ExperimentConfig, N: int, snr: float, trial: int, keep_spectra: bool = False):
    """Run every estimator of every arm for one (N, SNR, trial) cell."""
    records: list[TrialRecord] = []
    spectra: dict[str, Spectrum] = {}
    arm = cfg.classical
    if arm is not None:
        geom = arm.geometry
        seed = trial_seed(cfg.seed, trial, "classical")
        X = synthesize(geom, _sources(cfg, arm.correlation), N, snr, seed)
        R = sample_covariance(X.samples)
        grid = geom.default_grid(cfg.grid_step_deg)
        hp = uniform_hpbw(geom, round(cfg.sources_deg[0], 6))
        for name in arm.estimators:
            t0 = time.perf_counter()
            if name == "bartlett":
                spec = bartlett(R, geom, grid)
            elif name == "capon":
                spec = capon(R, geom, grid)
            else:
                spec = music(R, geom, grid, arm.n_sources or len(cfg.sources_deg))
            est = detect_peaks(spec, cfg.min_separation_deg, cfg.threshold_db)
            records.append(_record(cfg, trial, seed, snr, N, name, est, hp, geom.circular, t0))
            if keep_spectra:
                spectra[name] = spec
    arm = cfg.xsbs
    if arm is not None:
        t0 = time.perf_counter()
        bg = _beam_grid(arm)
        omni = omni_weights(arm.geometry, arm.omni_elements)
        seed = trial_seed(cfg.seed, trial, "xsbs")
        X = synthesize(arm.geometry, _sources(cfg, arm.correlation), N, snr, seed)
        spec = xsbs(X, bg, omni)
        est = detect_peaks(spec, cfg.min_separation_deg, cfg.threshold_db)
        records.append(_record(cfg, trial, seed, snr, N, "xsbs", est, bg.hpbw_deg, spec.circular, t0))
        if keep_spectra:
            spectra["xsbs"] = spec
    return records, spectra


def _job(args):
    cfg, N, snr, trial = args
    return run_trial(cfg, N, snr, trial, keep_spectra=(trial == 0))


def summarize(records: list[TrialRecord]) -> list[dict[str, Any]]:
    """Per (snapshots, SNR, estimator) aggregates, in first-seen order."""
    groups: dict[tuple, list[TrialRecord]] = {}
    for r in records:
        groups.setdefault((r.snapshots, r.snr_db, r.estimator), []).append(r)
    rows = []
    for (N, snr, name), rs in groups.items():
        pfr = np.array([r.pfr_db for r in rs])
        rows.append(
            {
                "snapshots": N,
                "snr_db": snr,
                "estimator": name,
                "trials": len(rs),
                "mean_pfr_db": float(pfr.mean()),
                "std_pfr_db": float(pfr.std()),
                "detection_rate": float(np.mean([r.detected for r in rs])),
                "resolution_rate": float(np.mean([r.resolved for r in rs])),
                "mean_peaks": float(np.mean([len(r.detected_deg) for r in rs])),
            }
        )
    return rows


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run all trials of ``cfg``; results are ordered by
    (snapshots, SNR, trial) regardless of worker scheduling."""
    cfg.validate()
    jobs = [(cfg, N, snr, t) for N in cfg.snapshots for snr in cfg.snr_db for t in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_job, jobs, chunksize=max(1, len(jobs) // (4 * cfg.workers))))
    else:
        results = [_job(j) for j in jobs]
    records: list[TrialRecord] = []
    spectra: dict[tuple[str, float, int], Spectrum] = {}
    for (_, N, snr, _t), (recs, specs) in zip(jobs, results):
        records.extend(recs)
        for name, spec in specs.items():
            spectra[(name, snr, N)] = spec
    return ExperimentResult(cfg, records, summarize(records), spectra)


# --- CSV output -----------------------------------------------------------

TRIAL_FIELDS = [
    "scenario", "trial", "seed", "snr_db", "snapshots", "estimator",
    "detected_deg", "true_deg", "pfr_db", "error_deg", "detected", "resolved", "wall_time_s",
]
SUMMARY_FIELDS = [
    "snapshots", "snr_db", "estimator", "trials", "mean_pfr_db", "std_pfr_db",
    "detection_rate", "resolution_rate", "mean_peaks",
]


def _fmt(x: Any) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, (list, tuple)):
        return ";".join(_fmt(float(v)) for v in x)
    return str(x)


def _snr_tag(snr: float) -> str:
    return f"{snr:g}"


def spectrum_filename(estimator: str, snr: float, N: int | None = None) -> str:
    suffix = "" if N is None else f"_n{N}"
    return f"spectrum_{estimator}_{_snr_tag(snr)}{suffix}.csv"


def write_spectrum_csv(spec: Spectrum, path: str | os.PathLike) -> None:
    """Two columns: ``angle_deg`` and ``power_db`` (0 dB at the peak)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["angle_deg", "power_db"])
        for a, p in zip(spec.angles_deg, spec.normalized_db()):
            w.writerow([repr(float(a)), repr(float(p))])


def read_spectrum_csv(path: str | os.PathLike) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return (
        np.array([float(r["angle_deg"]) for r in rows]),
        np.array([float(r["power_db"]) for r in rows]),
    )


def emit_csv(records, summary, directory, spectra=None) -> list[Path]:
    """Write ``trials.csv``, ``summary.csv`` and one
    ``spectrum_<estimator>_<snr>.csv`` per first-trial spectrum."""
    if not records:
        raise ValueError("no trial records to write")
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")
    written = []

    path = out / "trials.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, quoting=csv.QUOTE_MINIMAL)
        w.writerow(TRIAL_FIELDS)
        for r in records:
            row = asdict(r)
            w.writerow([_fmt(row[k]) for k in TRIAL_FIELDS])
    written.append(path)

    path = out / "summary.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_FIELDS)
        for row in summary:
            w.writerow([_fmt(row[k]) for k in SUMMARY_FIELDS])
    written.append(path)

    if spectra:
        multi_n = len({N for (_, _, N) in spectra}) > 1
        for (name, snr, N), spec in spectra.items():
            path = out / spectrum_filename(name, snr, N if multi_n else None)
            write_spectrum_csv(spec, path)
            written.append(path)
    return written


def read_trials_csv(path: str | os.PathLike) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
