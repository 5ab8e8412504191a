"""Point cloud conditioning: tilt compensation, XY projection, windowing and filtering.

Coordinates are sensor-frame meters with ``y`` along the boresight (the
distance-to-surface axis), ``x`` across the sensor's center plane and ``z``
out of it. Intensities ``p`` are normalized to [0, 1].
"""

import dataclasses
import enum
import math
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DimensionError, DomainError, TiltToleranceError, WindowError

__all__ = [
    "MAX_TILT_DEG",
    "RadarPoint",
    "PointCloud",
    "Aggregation",
    "FilterParams",
    "PointCloudWindow",
    "tilt_matrix",
    "tilt_compensate",
    "apply_tilt",
    "project_xy",
    "window_spans",
    "window_measurements",
    "percentile_positions",
    "upper_percentile_threshold",
    "filter_window",
]

MAX_TILT_DEG = 30.0


class RadarPoint(NamedTuple):
    x_m: float
    y_m: float
    z_m: float
    p: float
    timestamp_s: float = 0.0


@dataclasses.dataclass(eq=False)
class PointCloud:
    """Columnar point storage; one entry per return in every array."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    p: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        for name in ("x", "y", "z", "p", "t"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float).reshape(-1))
        n = self.x.size
        if any(a.size != n for a in (self.y, self.z, self.p, self.t)):
            raise DimensionError("point cloud columns differ in length")
        if n and not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))
                      and np.all(np.isfinite(self.z)) and np.all(np.isfinite(self.t))):
            raise DomainError("point coordinates must be finite")
        if n and not np.all((self.p >= 0) & (self.p <= 1)):
            raise DomainError("intensity p must lie in [0, 1]")

    @classmethod
    def empty(cls) -> "PointCloud":
        e = np.zeros(0)
        return cls(e, e, e, e, e)

    @classmethod
    def from_points(cls, points: Iterable) -> "PointCloud":
        rows = [tuple(pt) for pt in points]
        if not rows:
            return cls.empty()
        arr = np.array([r if len(r) == 5 else (*r, 0.0) for r in rows], dtype=float)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4])

    @classmethod
    def concat(cls, clouds: Sequence["PointCloud"]) -> "PointCloud":
        if not clouds:
            return cls.empty()
        return cls(*(np.concatenate([getattr(c, k) for c in clouds]) for k in "xyzpt"))

    def __len__(self):
        return self.x.size

    def __iter__(self):
        for row in zip(self.x.tolist(), self.y.tolist(), self.z.tolist(), self.p.tolist(), self.t.tolist()):
            yield RadarPoint(*row)

    def __eq__(self, other):
        if not isinstance(other, PointCloud):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in "xyzpt")

    def take(self, index) -> "PointCloud":
        return PointCloud(self.x[index], self.y[index], self.z[index], self.p[index], self.t[index])

    def xyz(self) -> np.ndarray:
        return np.column_stack([self.x, self.y, self.z])


class Aggregation(str, enum.Enum):
    MIN_Y = "min_y"
    MEAN_Y = "mean_y"
    MEDIAN_Y = "median_y"
    ARGMAX_P_Y = "argmax_p_y"


@dataclasses.dataclass(frozen=True)
class FilterParams:
    """Window size, aggregation function and region/intensity bounds.

    ``None`` means the bound is not applied. ``p_min`` is an absolute
    intensity floor; ``p_top_percent`` instead keeps the points whose
    intensity lies in the top given percent of the window. ``i_max`` caps the
    number of points kept per window to the most intense ones.
    """

    window_w: int = 0
    aggregation_F: Aggregation = Aggregation.MIN_Y
    x_min_m: Optional[float] = None
    x_max_m: Optional[float] = None
    y_min_m: Optional[float] = None
    y_max_m: Optional[float] = None
    p_min: Optional[float] = None
    p_top_percent: Optional[float] = None
    i_max: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "aggregation_F", Aggregation(self.aggregation_F))
        if int(self.window_w) != self.window_w or self.window_w < 0:
            raise ConfigurationError("window_w must be an integer >= 0")
        object.__setattr__(self, "window_w", int(self.window_w))
        for name in ("x_min_m", "x_max_m", "y_min_m", "y_max_m", "p_min", "p_top_percent"):
            v = getattr(self, name)
            if v is None:
                continue
            try:
                v = float(v)
            except (TypeError, ValueError):
                raise ConfigurationError(f"{name} must be a number") from None
            if not math.isfinite(v):
                raise ConfigurationError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.p_min is not None and self.p_top_percent is not None:
            raise ConfigurationError("p_min and p_top_percent are mutually exclusive")
        if self.p_min is not None and not 0 <= self.p_min <= 1:
            raise ConfigurationError("p_min must lie in [0, 1]")
        if self.p_top_percent is not None and not 0 < self.p_top_percent <= 100:
            raise ConfigurationError("p_top_percent must lie in (0, 100]")
        for lo, hi in (("x_min_m", "x_max_m"), ("y_min_m", "y_max_m")):
            a, b = getattr(self, lo), getattr(self, hi)
            if a is not None and b is not None and a > b:
                raise ConfigurationError(f"{lo} exceeds {hi}")
        if self.i_max is not None:
            if int(self.i_max) != self.i_max or self.i_max < 1:
                raise ConfigurationError("i_max must be an integer >= 1")
            object.__setattr__(self, "i_max", int(self.i_max))

    def to_dict(self) -> dict:
        """Flat mapping; unset bounds are left out."""
        out = {"window_w": self.window_w, "aggregation_F": self.aggregation_F.value}
        for f in dataclasses.fields(self)[2:]:
            v = getattr(self, f.name)
            if v is not None:
                out[f.name] = v
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "FilterParams":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigurationError(f"unknown filter parameters: {sorted(unknown)}")
        return cls(**{k: v for k, v in d.items() if v is not None})

    def with_(self, **changes) -> "FilterParams":
        return dataclasses.replace(self, **changes)


@dataclasses.dataclass(eq=False)
class PointCloudWindow:
    index: int  # 1-based
    points: PointCloud
    source_measurement_span: tuple  # (first, last), 1-based, inclusive


def _rot_x(deg):
    a = math.radians(deg)
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _rot_z(deg):
    a = math.radians(deg)
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _check_tilt(roll_deg, pitch_deg):
    for name, v in (("roll", roll_deg), ("pitch", pitch_deg)):
        if not math.isfinite(v):
            raise DomainError(f"{name} must be finite")
        if abs(v) > MAX_TILT_DEG:
            raise TiltToleranceError(f"{name} of {v} deg exceeds the {MAX_TILT_DEG:g} deg tolerance")


def tilt_matrix(roll_deg: float, pitch_deg: float) -> np.ndarray:
    """Rotation taking gravity-aligned coordinates into the tilted sensor frame."""
    return _rot_x(pitch_deg) @ _rot_z(roll_deg)


def _rotate(cloud: PointCloud, m: np.ndarray) -> PointCloud:
    xyz = cloud.xyz() @ m.T
    return PointCloud(xyz[:, 0], xyz[:, 1], xyz[:, 2], cloud.p.copy(), cloud.t.copy())


def apply_tilt(cloud: PointCloud, roll_deg: float, pitch_deg: float) -> PointCloud:
    """Express gravity-aligned points in a sensor frame tilted by roll and pitch."""
    _check_tilt(roll_deg, pitch_deg)
    if roll_deg == 0 and pitch_deg == 0:
        return cloud.take(slice(None))
    return _rotate(cloud, tilt_matrix(roll_deg, pitch_deg))


def tilt_compensate(cloud: PointCloud, roll_deg: float, pitch_deg: float) -> PointCloud:
    """Rotate points from the tilted sensor frame back to the gravity-aligned frame.

    Undoes :func:`apply_tilt`: a rotation about x by ``-pitch`` followed by a
    rotation about the new z by ``-roll``.
    """
    _check_tilt(roll_deg, pitch_deg)
    if roll_deg == 0 and pitch_deg == 0:
        return cloud.take(slice(None))
    return _rotate(cloud, _rot_z(-roll_deg) @ _rot_x(-pitch_deg))


def project_xy(cloud: PointCloud) -> PointCloud:
    return PointCloud(cloud.x.copy(), cloud.y.copy(), np.zeros(len(cloud)), cloud.p.copy(), cloud.t.copy())


def window_spans(n_measurements: int, w: int) -> list:
    """1-based inclusive measurement spans of the sliding windows.

    ``w = 0`` means no accumulation: one window per measurement.
    """
    if w < 0:
        raise WindowError("window size must be >= 0")
    if w > n_measurements:
        raise WindowError(f"window size {w} exceeds the {n_measurements} measurements of the run")
    if w == 0:
        return [(i, i) for i in range(1, n_measurements + 1)]
    return [(i, i + w - 1) for i in range(1, n_measurements - w + 2)]


def window_measurements(run, w: int) -> list:
    """Raw point clouds of the ``N - w + 1`` overlapping windows of a run.

    ``run`` needs ``points`` (a :class:`PointCloud`) and ``offsets`` (CSR
    boundaries of the measurements within ``points``).
    """
    offsets = run.offsets
    out = []
    for first, last in window_spans(len(offsets) - 1, w):
        out.append(run.points.take(slice(offsets[first - 1], offsets[last])))
    return out


def percentile_positions(n, top_percent):
    """Ascending ranks and interpolation weight of the ``100 - top_percent`` percentile of ``n`` values."""
    q = (100.0 - top_percent) / 100.0
    n = np.asarray(n)
    pos = q * (n - 1)
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, n - 1)
    return lo, hi, pos - lo


def upper_percentile_threshold(sorted_p: np.ndarray, top_percent: float) -> float:
    """Linear-interpolation percentile of ascending ``sorted_p`` above which the top percent lies."""
    lo, hi, frac = percentile_positions(sorted_p.size, top_percent)
    return sorted_p[lo] + (sorted_p[hi] - sorted_p[lo]) * frac


def filter_window(
    points: PointCloud,
    params: FilterParams,
    index: int = 1,
    span: Optional[tuple] = None,
) -> PointCloudWindow:
    """Keep the points of one window that pass the region and intensity rules.

    Region bounds apply to ``|x|`` and ``y``; ``y >= 0`` always holds. The
    intensity rule (``p_min`` or ``p_top_percent``) is evaluated on the
    points inside the region, then ``i_max`` keeps the most intense ones,
    preferring smaller ``y`` and then earlier timestamps on ties.
    """
    x, y, p, t = points.x, points.y, points.p, points.t
    keep = y >= 0
    if params.x_min_m is not None:
        keep &= np.abs(x) >= params.x_min_m
    if params.x_max_m is not None:
        keep &= np.abs(x) <= params.x_max_m
    if params.y_min_m is not None:
        keep &= y >= params.y_min_m
    if params.y_max_m is not None:
        keep &= y <= params.y_max_m

    if params.p_min is not None:
        keep &= p >= params.p_min
    elif params.p_top_percent is not None and keep.any():
        vals = np.sort(p[keep])
        keep &= p >= upper_percentile_threshold(vals, params.p_top_percent)

    if params.i_max is not None and keep.sum() > params.i_max:
        idx = np.flatnonzero(keep)
        order = np.lexsort((t[idx], y[idx], -p[idx]))
        keep = np.zeros_like(keep)
        keep[idx[order[:params.i_max]]] = True

    if span is None:
        span = (index, index + max(params.window_w, 1) - 1)
    return PointCloudWindow(index, points.take(keep), span)
