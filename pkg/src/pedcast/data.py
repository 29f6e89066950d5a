"""Trajectory data model: ingestion, cleaning, resampling, condition labels.

Coordinates are metres, stored as float64 (N, 2) arrays. A trajectory is a
time-ordered sequence of positions for one pedestrian, optionally tagged with
a weather/time-of-day condition. Fixed-length resampled trajectories feed the
clustering and learning stages downstream.
"""

from __future__ import annotations

import csv
import datetime as _dt
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError

CANONICAL_HEADER = ("ped_id", "t", "x", "y", "weather", "daypart")

#: Column layout of the canonical on-disk CSV.
CANONICAL_COLUMN_MAP: Mapping[str, int] = {
    "ped_id": 0, "t": 1, "x": 2, "y": 3, "weather": 4, "daypart": 5,
}

#: Column layout of raw range-sensor logs: (time, person_id, x, y, z,
#: velocity, motion_angle, facing_angle), coordinates in millimetres.
#: z/velocity/angles are ignored; pair with ``unit_scale=0.001``.
SENSOR_LOG_COLUMN_MAP: Mapping[str, int] = {
    "t": 0, "ped_id": 1, "x": 2, "y": 3,
}


@dataclass(frozen=True)
class ConditionCode:
    """Weather index and time-of-day index for one trajectory."""

    weather_idx: int
    time_idx: int

    def __post_init__(self):
        if self.weather_idx < 0 or self.time_idx < 0:
            raise DataError(f"negative condition index: {self}")

    def combined(self, c_d: int) -> int:
        """Combined contingency condition index in [0, C_w * C_d)."""
        return self.weather_idx * c_d + self.time_idx


@dataclass
class Trajectory:
    """Raw trajectory: strictly increasing timestamps, >= 2 samples."""

    ped_id: str
    times: np.ndarray  # (T,)
    points: np.ndarray  # (T, 2)
    condition: ConditionCode | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise DataError(f"trajectory {self.ped_id}: points must be (T, 2)")
        if len(self.times) != len(self.points):
            raise DataError(f"trajectory {self.ped_id}: times/points length mismatch")
        if len(self.times) < 2:
            raise DataError(f"trajectory {self.ped_id}: needs >= 2 samples")
        if not (np.all(np.isfinite(self.times)) and np.all(np.isfinite(self.points))):
            raise DataError(f"trajectory {self.ped_id}: non-finite values")
        if np.any(np.diff(self.times) <= 0):
            raise DataError(f"trajectory {self.ped_id}: timestamps not strictly increasing")

    def path_length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))


@dataclass
class ResampledTrajectory:
    """Fixed-length trajectory on a uniform time grid."""

    ped_id: str
    points: np.ndarray  # (L + L', 2)
    condition: ConditionCode | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise DataError(f"trajectory {self.ped_id}: points must be (n, 2)")
        if not np.all(np.isfinite(self.points)):
            raise DataError(f"trajectory {self.ped_id}: non-finite values")


@dataclass
class DatasetConfig:
    """Dataset-level constants: split lengths, condition cardinalities,
    peak-hour windows and the date -> weather calendar."""

    L: int = 20
    L_prime: int = 20
    C_w: int = 2
    C_d: int = 2
    #: (start, end) seconds-of-day, both inclusive. The printed window
    #: "12:00-16:59" means 12:00:00 <= t <= 16:59:59.
    peak_windows: Sequence[tuple[int, int]] = ((12 * 3600, 16 * 3600 + 59 * 60 + 59),)
    weather_calendar: Mapping[str, int] = field(default_factory=dict)
    unit_scale: float = 1.0

    def __post_init__(self):
        if self.L < 1 or self.L_prime < 1:
            raise DataError("L and L' must be >= 1")
        if self.C_w < 1 or self.C_d < 1:
            raise DataError("condition cardinalities must be >= 1")
        windows = sorted(self.peak_windows)
        for (s, e) in windows:
            if not (0 <= s <= e < 86400):
                raise DataError(f"bad peak window ({s}, {e})")
        for (_, e0), (s1, _) in zip(windows, windows[1:]):
            if s1 <= e0:
                raise DataError("peak windows overlap")

    @property
    def n_points(self) -> int:
        return self.L + self.L_prime

    @property
    def n_conditions(self) -> int:
        return self.C_w * self.C_d


def ingest_csv(
    path: str | Path,
    column_map: Mapping[str, int] | None = None,
    unit_scale: float = 1.0,
) -> list[Trajectory]:
    """Read a trajectory CSV into one Trajectory per pedestrian.

    ``column_map`` gives the column index of each logical field; ``ped_id``,
    ``t``, ``x`` and ``y`` are required, ``weather``/``daypart`` optional.
    A first row whose mapped numeric fields do not parse is treated as a
    header and skipped. Samples are sorted by timestamp per pedestrian and
    coordinates multiplied by ``unit_scale``.
    """
    cm = dict(column_map) if column_map is not None else dict(CANONICAL_COLUMN_MAP)
    for key in ("ped_id", "t", "x", "y"):
        if key not in cm:
            raise DataError(f"column map missing required field '{key}'")
    has_cond = "weather" in cm and "daypart" in cm
    ncols = max(cm.values()) + 1

    groups: dict[str, list[tuple[float, float, float]]] = {}
    conditions: dict[str, ConditionCode] = {}
    seen: set[tuple[str, float]] = set()

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                t = float(row[cm["t"]])
                x = float(row[cm["x"]])
                y = float(row[cm["y"]])
            except (ValueError, IndexError):
                if lineno == 1:
                    continue  # header row
                raise DataError(f"{path}: malformed row at line {lineno}: {row!r}")
            if len(row) < ncols:
                raise DataError(f"{path}: short row at line {lineno}: {row!r}")
            ped = row[cm["ped_id"]].strip()
            if not ped:
                raise DataError(f"{path}: empty ped_id at line {lineno}")
            key = (ped, t)
            if key in seen:
                raise DataError(f"{path}: duplicate (ped_id, timestamp) {key} at line {lineno}")
            seen.add(key)
            groups.setdefault(ped, []).append((t, x * unit_scale, y * unit_scale))
            if has_cond and ped not in conditions:
                try:
                    conditions[ped] = ConditionCode(int(row[cm["weather"]]), int(row[cm["daypart"]]))
                except ValueError:
                    raise DataError(f"{path}: bad condition fields at line {lineno}: {row!r}")

    out = []
    for ped, samples in groups.items():
        samples.sort(key=lambda s: s[0])
        arr = np.asarray(samples, dtype=np.float64)
        out.append(Trajectory(ped, arr[:, 0], arr[:, 1:3], conditions.get(ped)))
    return out


def write_canonical_csv(path: str | Path, trajs: Iterable[Trajectory]) -> None:
    """Write trajectories in the canonical CSV layout.

    Floats are written with shortest round-trip repr, so write -> ingest is
    lossless.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CANONICAL_HEADER)
        for traj in trajs:
            if traj.condition is None:
                raise DataError(f"trajectory {traj.ped_id}: canonical CSV needs a condition")
            w, d = traj.condition.weather_idx, traj.condition.time_idx
            for t, (x, y) in zip(traj.times, traj.points):
                writer.writerow([traj.ped_id, repr(float(t)), repr(float(x)), repr(float(y)), w, d])


def clean(
    trajs: Sequence[Trajectory],
    min_path_length: float = 1.0,
    min_samples: int = 2,
) -> list[Trajectory]:
    """Drop trajectories that are too short in samples or travelled distance."""
    if min_path_length < 0 or min_samples < 0:
        raise DataError("cleaning thresholds must be >= 0")
    return [
        t for t in trajs
        if len(t.times) >= min_samples and t.path_length() >= min_path_length
    ]


def resample(traj: Trajectory, n_points: int) -> ResampledTrajectory:
    """Resample onto ``n_points`` positions uniformly spaced in time.

    Linear interpolation over the trajectory's own duration; the first and
    last output points equal the original endpoints exactly.
    """
    if n_points < 2:
        raise DataError("n_points must be >= 2")
    t0, t1 = float(traj.times[0]), float(traj.times[-1])
    if t1 <= t0:
        raise DataError(f"trajectory {traj.ped_id}: zero duration, cannot resample")
    grid = np.linspace(t0, t1, n_points)
    out = np.column_stack([
        np.interp(grid, traj.times, traj.points[:, 0]),
        np.interp(grid, traj.times, traj.points[:, 1]),
    ])
    out[0] = traj.points[0]
    out[-1] = traj.points[-1]
    return ResampledTrajectory(traj.ped_id, out, traj.condition)


def split_observed_future(rt: ResampledTrajectory, L: int) -> tuple[np.ndarray, np.ndarray]:
    """Split into the observed prefix (L points) and the future suffix."""
    n = len(rt.points)
    if not 1 <= L <= n - 1:
        raise DataError(f"invalid split L={L} for trajectory of {n} points")
    return rt.points[:L], rt.points[L:]


def assign_condition(date: str, seconds_of_day: float, cfg: DatasetConfig) -> ConditionCode:
    """Condition label for a moment in time: weather from the calendar,
    time index 1 iff the clock time falls inside any peak window."""
    if date not in cfg.weather_calendar:
        raise DataError(f"date {date!r} not in weather calendar")
    weather = int(cfg.weather_calendar[date])
    if not 0 <= weather < cfg.C_w:
        raise DataError(f"calendar weather index {weather} out of range for C_w={cfg.C_w}")
    peak = any(s <= seconds_of_day <= e for s, e in cfg.peak_windows)
    return ConditionCode(weather, 1 if peak else 0)


def split_epoch(epoch_s: float, utc_offset_s: float = 0.0) -> tuple[str, float]:
    """Split a unix timestamp into (ISO date, seconds-of-day) at a fixed offset."""
    local = _dt.datetime.fromtimestamp(epoch_s + utc_offset_s, tz=_dt.timezone.utc)
    sod = local.hour * 3600 + local.minute * 60 + local.second + local.microsecond / 1e6
    return local.date().isoformat(), sod


@dataclass
class SyntheticScenario:
    """Floor spec for the synthetic generator.

    ``cond_priors`` has one row per combined condition c = weather * C_d +
    daypart, each a probability vector over the K destination anchors.
    ``counts[c]`` trajectories are generated under condition c.
    """

    dest_anchors: np.ndarray  # (K, 2)
    cond_priors: np.ndarray  # (C_w * C_d, K)
    counts: Sequence[int]
    C_w: int = 2
    C_d: int = 2
    noise_sigma: float = 1.0
    origin_anchors: np.ndarray | None = None
    samples_per_traj: int = 50
    walk_speed: float = 1.4  # m/s
    allow_loops: bool = False

    def __post_init__(self):
        self.dest_anchors = np.asarray(self.dest_anchors, dtype=np.float64)
        self.cond_priors = np.asarray(self.cond_priors, dtype=np.float64)
        if self.origin_anchors is None:
            self.origin_anchors = self.dest_anchors
        else:
            self.origin_anchors = np.asarray(self.origin_anchors, dtype=np.float64)
        K = len(self.dest_anchors)
        C = self.C_w * self.C_d
        if self.cond_priors.shape != (C, K):
            raise DataError(f"cond_priors must be ({C}, {K}), got {self.cond_priors.shape}")
        if np.any(np.abs(self.cond_priors.sum(axis=1) - 1.0) > 1e-9):
            raise DataError("each condition prior must sum to 1 within 1e-9")
        if np.any(self.cond_priors < 0):
            raise DataError("priors must be non-negative")
        if len(self.counts) != C or any(c <= 0 for c in self.counts):
            raise DataError(f"counts must be {C} positive integers")
        if self.noise_sigma < 0:
            raise DataError("noise_sigma must be >= 0")


def generate_synthetic(scenario: SyntheticScenario, seed: int) -> list[Trajectory]:
    """Generate seeded trajectories walking from a random origin anchor to a
    prior-sampled destination anchor along a noisy piecewise-linear path.

    Endpoints land uniformly inside a disc of radius ``noise_sigma`` around
    their anchors; interior points carry Gaussian noise tapered to zero at
    both ends. Deterministic for a given seed.
    """
    rng = np.random.default_rng(seed)
    K = len(scenario.dest_anchors)
    n = scenario.samples_per_traj
    taper = np.sin(np.pi * np.linspace(0.0, 1.0, n))[:, None]
    out: list[Trajectory] = []
    serial = 0
    for c in range(scenario.C_w * scenario.C_d):
        cond = ConditionCode(c // scenario.C_d, c % scenario.C_d)
        dests = rng.choice(K, size=scenario.counts[c], p=scenario.cond_priors[c])
        for k in dests:
            for _ in range(64):
                o = rng.integers(len(scenario.origin_anchors))
                if scenario.allow_loops or not np.array_equal(
                    scenario.origin_anchors[o], scenario.dest_anchors[k]
                ):
                    break
            start = scenario.origin_anchors[o] + _disc(rng, scenario.noise_sigma)
            end = scenario.dest_anchors[k] + _disc(rng, scenario.noise_sigma)
            base = start[None, :] + np.linspace(0.0, 1.0, n)[:, None] * (end - start)[None, :]
            pts = base + taper * rng.normal(0.0, scenario.noise_sigma, size=(n, 2))
            seg = np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1))
            duration = max(seg / scenario.walk_speed, 2.0) * rng.uniform(0.9, 1.1)
            times = np.linspace(0.0, duration, n)
            out.append(Trajectory(f"p{serial:06d}", times, pts, cond))
            serial += 1
    return out


def _disc(rng: np.random.Generator, radius: float) -> np.ndarray:
    """Uniform sample from a disc of the given radius."""
    if radius == 0:
        return np.zeros(2)
    r = radius * np.sqrt(rng.uniform())
    theta = rng.uniform(0.0, 2.0 * np.pi)
    return np.array([r * np.cos(theta), r * np.sin(theta)])
