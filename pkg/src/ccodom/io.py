"""CSV record schemas and the flat ``key = value`` run configuration.

Every CSV has a header row, UTF-8 text, ``.`` decimals and ``\\n`` line
endings. Floats are written with ``repr`` so a write/read cycle is exact.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields, replace
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .association import AssociationConfig, LandmarkSet
from .errors import ConfigError, ParseError, SchemaError, ValidationError
from .evaluation import SYNTHETIC_LENGTHS, Trajectory
from .geom2d import Pose2
from .simulator import DEFAULT_MAX_RANGE, CorruptionSpec, WorldConfig
from .solvers import ALL_METHODS, Method, SolverConfig

SCAN_COLUMNS = ("scan_index", "landmark_id", "range_m", "bearing_rad")
POSE_COLUMNS = ("scan_index", "dx_m", "dy_m", "dtheta_rad")
TRAJECTORY_COLUMNS = ("scan_index", "x_m", "y_m", "theta_rad")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def _read_rows(path, required: Sequence[str]):
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: missing header row")
        missing = [c for c in required if c not in reader.fieldnames]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
        for line_no, row in enumerate(reader, start=2):
            yield line_no, row


def _num(row: dict, key: str, line: int, kind=float):
    raw = row.get(key)
    try:
        value = kind(raw)
    except (TypeError, ValueError):
        raise ParseError(f"column {key!r}: cannot parse {raw!r}", line) from None
    if kind is float and not math.isfinite(value):
        raise ValidationError(f"column {key!r}: non-finite value {raw!r}", line)
    return value


def _check_angle(value: float, key: str, line: int) -> None:
    if not -math.pi < value <= math.pi:
        raise ValidationError(f"column {key!r}: {value} outside (-pi, pi]", line)


def _check_contiguous(indices: Sequence[int], start: int, what: str) -> None:
    expected = list(range(start, start + len(indices)))
    if list(indices) != expected:
        raise ValidationError(f"{what} scan indices must be contiguous from {start}")


def write_scans(path, scans: Sequence[LandmarkSet]) -> Path:
    rows = (
        (s.scan_index, int(i), float(r), float(b))
        for s in scans
        for i, r, b in zip(s.ids, s.ranges, s.bearings)
    )
    return write_csv(path, SCAN_COLUMNS, rows)


def load_scans(path, step_period: float = 0.25) -> list[LandmarkSet]:
    """Scans grouped by ``scan_index``; each landmark row must have range > 0."""
    grouped: dict[int, list[tuple[int, float, float]]] = {}
    for line, row in _read_rows(path, SCAN_COLUMNS):
        k = _num(row, "scan_index", line, int)
        lid = _num(row, "landmark_id", line, int)
        r = _num(row, "range_m", line)
        b = _num(row, "bearing_rad", line)
        if k < 0:
            raise ValidationError(f"negative scan_index {k}", line)
        if r <= 0:
            raise ValidationError(f"range_m must be > 0, got {r}", line)
        _check_angle(b, "bearing_rad", line)
        grouped.setdefault(k, []).append((lid, r, b))
    order = sorted(grouped)
    _check_contiguous(order, 0, "scan file")
    scans = []
    for k in order:
        arr = np.array(grouped[k], dtype=float).reshape(-1, 3)
        scans.append(LandmarkSet(k, arr[:, 1], arr[:, 2], arr[:, 0].astype(int), k * step_period))
    return scans


def write_poses(path, rel_poses: Sequence[Pose2]) -> Path:
    """Relative poses; row ``k`` moves scan ``k - 1`` to scan ``k`` (k from 1)."""
    rows = ((k, p.dx, p.dy, p.dtheta) for k, p in enumerate(rel_poses, start=1))
    return write_csv(path, POSE_COLUMNS, rows)


def load_ground_truth(path) -> list[Pose2]:
    rows = []
    for line, row in _read_rows(path, POSE_COLUMNS):
        k = _num(row, "scan_index", line, int)
        dx, dy, dth = (_num(row, c, line) for c in POSE_COLUMNS[1:])
        _check_angle(dth, "dtheta_rad", line)
        rows.append((k, Pose2(dx, dy, dth)))
    rows.sort(key=lambda t: t[0])
    _check_contiguous([k for k, _ in rows], 1, "pose file")
    return [p for _, p in rows]


load_poses = load_ground_truth


def write_trajectory(path, traj: Trajectory) -> Path:
    rows = ((k, p.dx, p.dy, p.dtheta) for k, p in enumerate(traj.poses))
    return write_csv(path, TRAJECTORY_COLUMNS, rows)


def load_trajectory(path) -> Trajectory:
    poses = []
    for line, row in _read_rows(path, TRAJECTORY_COLUMNS):
        poses.append(Pose2(*(_num(row, c, line) for c in TRAJECTORY_COLUMNS[1:])))
    return Trajectory(poses)


# ---------------------------------------------------------------------------
# run configuration


def _parse_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def _parse_floats(v) -> tuple[float, ...]:
    if isinstance(v, (list, tuple)):
        return tuple(float(x) for x in v)
    return tuple(float(x) for x in str(v).replace(" ", "").split(",") if x)


def _parse_methods(v) -> tuple[Method, ...]:
    if isinstance(v, (list, tuple)):
        items = list(v)
    else:
        items = [x.strip() for x in str(v).split(",") if x.strip()]
    if items == ["all"]:
        return ALL_METHODS
    try:
        return tuple(Method(x) for x in items)
    except ValueError as exc:
        raise ConfigError(f"unknown method in {v!r}; choose from {[m.value for m in Method]} or 'all'") from exc


@dataclass(frozen=True)
class RunConfig:
    """Flat run configuration; every field is a config key and a CLI flag."""

    # solver
    method: tuple[Method, ...] = ALL_METHODS
    q_lo: float = 0.35
    q_hi: float = 0.65
    ransac_iters: int = 100
    ransac_base_thresh: float = 0.5
    ransac_range_coeff: float = 0.01
    seed: int = 0
    # association
    association: str = "landmark_id"
    gate_radius: float = 5.0
    epsilon: float = 0.5
    cutoff: float = 0.1
    # simulation
    steps: int = 500
    landmark_count: int = 3000
    extent: float = 600.0
    max_range: float = DEFAULT_MAX_RANGE
    speed_min: float = 1.0
    speed_max: float = 2.0
    max_turn: float = 0.02
    range_sigma: float = 0.05
    bearing_sigma: float = 0.002
    outlier_fraction: float = 0.2
    dynamic_object_count: int = 4
    dynamic_speed: float = 1.0
    misassociation_ratio: float = 0.5
    # io
    scans: str | None = None
    ground_truth: str | None = None
    out_dir: str = "out"
    evaluate: bool = True
    segment_lengths: tuple[float, ...] = SYNTHETIC_LENGTHS
    theta_dump_stride: int = 1

    def __post_init__(self):
        if self.association not in ("landmark_id", "spectral"):
            raise ConfigError(f"association must be 'landmark_id' or 'spectral', got {self.association!r}")
        lengths = self.segment_lengths
        if not lengths or any(b <= a for a, b in zip(lengths, lengths[1:])) or lengths[0] <= 0:
            raise ConfigError(f"segment_lengths must be positive and strictly increasing: {lengths}")
        if not self.method:
            raise ConfigError("at least one method is required")
        if self.theta_dump_stride < 0:
            raise ConfigError("theta_dump_stride must be >= 0")
        try:
            self.solver_config(self.method[0])
            self.corruption()
            self.world()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def simulated(self) -> bool:
        return self.scans is None

    def solver_config(self, method: Method, frame: int = 0) -> SolverConfig:
        return SolverConfig(
            method=method,
            q_lo=self.q_lo,
            q_hi=self.q_hi,
            ransac_iters=self.ransac_iters,
            ransac_base_thresh=self.ransac_base_thresh,
            ransac_range_coeff=self.ransac_range_coeff,
            rng_seed=self.seed * 1_000_003 + frame,
        )

    def association_config(self) -> AssociationConfig:
        return AssociationConfig(self.gate_radius, self.epsilon, self.cutoff)

    def world(self) -> WorldConfig:
        return WorldConfig(self.landmark_count, self.extent, self.seed)

    def corruption(self) -> CorruptionSpec:
        return CorruptionSpec(
            range_sigma=self.range_sigma,
            bearing_sigma=self.bearing_sigma,
            outlier_fraction=self.outlier_fraction,
            dynamic_object_count=self.dynamic_object_count,
            dynamic_speed=self.dynamic_speed,
            misassociation_ratio=self.misassociation_ratio,
            rng_seed=self.seed,
        )

    def with_updates(self, **updates) -> RunConfig:
        return config_from_mapping(updates, base=self)


_CONVERTERS = {
    "method": _parse_methods,
    "segment_lengths": _parse_floats,
    "evaluate": _parse_bool,
}


def config_keys() -> list[str]:
    return [f.name for f in fields(RunConfig)]


def config_from_mapping(values: dict[str, Any], base: RunConfig | None = None) -> RunConfig:
    base = base or RunConfig()
    known = {f.name: f for f in fields(RunConfig)}
    updates = {}
    for key, raw in values.items():
        name = key.replace("-", "_")
        if name not in known:
            raise ConfigError(f"unknown config key {key!r}")
        if raw is None:
            continue
        default = getattr(RunConfig(), name)
        try:
            if name in _CONVERTERS:
                value = _CONVERTERS[name](raw)
            elif name in ("scans", "ground_truth", "out_dir", "association"):
                value = str(raw)
            elif isinstance(default, int) and not isinstance(default, bool):
                value = int(raw)
            elif isinstance(default, float):
                value = float(raw)
            else:
                value = raw
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
        updates[name] = value
    return replace(base, **updates)


def parse_config_text(text: str) -> dict[str, str]:
    out = {}
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def load_config(path, overrides: dict[str, Any] | None = None) -> RunConfig:
    values = parse_config_text(Path(path).read_text(encoding="utf-8"))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return config_from_mapping(values)


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for name in config_keys():
        v = getattr(cfg, name)
        if v is None:
            continue
        if name == "method":
            v = ",".join(m.value for m in v)
        elif name == "segment_lengths":
            v = ",".join(fmt(x) for x in v)
        lines.append(f"{name} = {fmt(v)}")
    return "\n".join(lines) + "\n"
