"""Synthetic runs and deployments at the point-cloud level.

Every measurement holds one water-surface return plus Poisson-distributed
counts of three false-return classes:

* subsurface returns from within the water column (``y`` beyond the surface),
* near-sensor noise at short ranges,
* multipath returns with a longer apparent path than the surface.

Points are generated in the gravity-aligned frame and then rotated into the
tilted sensor frame, so that :func:`radarlevel.filtering.tilt_compensate`
recovers them exactly.
"""

import dataclasses
import math
from typing import Callable, Optional

import numpy as np
from scipy.stats import truncnorm

from .errors import DomainError
from .filtering import MAX_TILT_DEG, PointCloud, apply_tilt
from .waveform import PathClass

__all__ = [
    "DEFAULT_INTENSITY",
    "SceneSpec",
    "RunRecord",
    "DeploymentRecord",
    "synth_run",
    "synth_deployment",
    "linear_trajectory",
]

DEFAULT_INTENSITY = {
    PathClass.DIRECT_SURFACE: (0.85, 0.05),
    PathClass.SUBSURFACE: (0.35, 0.08),
    PathClass.NEAR_SENSOR_NOISE: (0.25, 0.08),
    PathClass.MULTIPATH: (0.30, 0.08),
}


@dataclasses.dataclass(frozen=True)
class SceneSpec:
    """Statistical description of what a downward-looking sensor sees.

    Rates are expected point counts per measurement. Intervals are
    ``(low, high)`` pairs in meters. ``intensity_profile`` maps each
    :class:`PathClass` to the mean and standard deviation of its intensity.
    """

    true_distance_m: float = 1.13
    surface_jitter_std_m: float = 0.005
    subsurface_rate: float = 0.0
    subsurface_depth_range_m: tuple = (0.02, 0.30)
    near_noise_rate: float = 0.0
    near_noise_max_y_m: float = 0.3
    multipath_rate: float = 0.0
    multipath_extra_path_m: tuple = (0.3, 2.0)
    intensity_profile: dict = dataclasses.field(default_factory=lambda: dict(DEFAULT_INTENSITY))
    tilt_deg: tuple = (0.0, 0.0)  # (roll, pitch)
    surface_x_std_m: float = 0.0
    noise_x_half_width_m: float = 1.5
    single_point: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.true_distance_m) and self.true_distance_m > 0):
            raise DomainError("true_distance_m must be positive")
        for name in ("surface_jitter_std_m", "subsurface_rate", "near_noise_rate", "multipath_rate",
                     "surface_x_std_m", "noise_x_half_width_m"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise DomainError(f"{name} must be finite and >= 0")
        if not self.near_noise_max_y_m > 0:
            raise DomainError("near_noise_max_y_m must be positive")
        lo, hi = self.subsurface_depth_range_m
        if not 0 <= lo <= hi:
            raise DomainError("subsurface_depth_range_m must be an ordered non-negative interval")
        lo, hi = self.multipath_extra_path_m
        if not 0 < lo <= hi:
            raise DomainError("multipath extra path must be strictly positive")
        roll, pitch = self.tilt_deg
        if abs(roll) > MAX_TILT_DEG or abs(pitch) > MAX_TILT_DEG:
            raise DomainError(f"tilt components must stay within {MAX_TILT_DEG:g} degrees")

        profile = {PathClass(k): (float(v[0]), float(v[1])) for k, v in self.intensity_profile.items()}
        missing = set(PathClass) - set(profile)
        if missing:
            raise DomainError(f"intensity profile lacks {sorted(c.value for c in missing)}")
        for cls, (mean, std) in profile.items():
            if not (0 < mean <= 1 and std >= 0):
                raise DomainError(f"intensity of {cls.value} needs a mean in (0, 1] and std >= 0")
        surface = profile[PathClass.DIRECT_SURFACE][0]
        if any(profile[c][0] >= surface for c in PathClass if c is not PathClass.DIRECT_SURFACE):
            raise DomainError("surface returns must have the highest mean intensity")
        object.__setattr__(self, "intensity_profile", profile)
        object.__setattr__(self, "tilt_deg", (float(roll), float(pitch)))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["intensity_profile"] = {k.value: list(v) for k, v in self.intensity_profile.items()}
        for key in ("subsurface_depth_range_m", "multipath_extra_path_m", "tilt_deg"):
            d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise DomainError(f"unknown scene fields: {sorted(unknown)}")
        kwargs = dict(d)
        for key in ("subsurface_depth_range_m", "multipath_extra_path_m", "tilt_deg"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)

    def with_(self, **changes) -> "SceneSpec":
        return dataclasses.replace(self, **changes)


@dataclasses.dataclass(eq=False)
class RunRecord:
    """One continuous recording.

    Points of all measurements are stored back to back in ``points``;
    measurement ``k`` occupies ``points[offsets[k]:offsets[k + 1]]``.
    ``measurement_times_s`` and the point timestamps ``points.t`` are seconds
    since ``start_time_s``.
    """

    run_id: str
    start_time_s: float
    measurement_rate_hz: float
    measurement_times_s: np.ndarray
    offsets: np.ndarray
    points: PointCloud
    sensor_label: str = "synthetic"
    imu_roll_deg: float = 0.0
    imu_pitch_deg: float = 0.0

    def __post_init__(self):
        self.measurement_times_s = np.asarray(self.measurement_times_s, dtype=float).reshape(-1)
        self.offsets = np.asarray(self.offsets, dtype=np.int64).reshape(-1)
        n = self.measurement_times_s.size
        if self.offsets.size != n + 1 or self.offsets[0] != 0 or self.offsets[-1] != len(self.points):
            raise DomainError("measurement offsets do not partition the points")
        if np.any(np.diff(self.offsets) < 0):
            raise DomainError("measurement offsets must be non-decreasing")
        if not (math.isfinite(self.measurement_rate_hz) and self.measurement_rate_hz > 0):
            raise DomainError("measurement rate must be positive")
        if not np.all(np.isfinite(self.measurement_times_s)):
            raise DomainError("measurement timestamps must be finite")
        if n > 1:
            gaps = np.diff(self.measurement_times_s)
            if np.any(gaps <= 0):
                raise DomainError("measurement timestamps must be strictly increasing")
            spacing = (self.measurement_times_s[-1] - self.measurement_times_s[0]) / (n - 1)
            if abs(spacing * self.measurement_rate_hz - 1.0) > 0.01:
                raise DomainError("measurement spacing disagrees with the stated rate by more than 1%")

    @property
    def n_measurements(self) -> int:
        return self.measurement_times_s.size

    def measurement(self, k: int) -> PointCloud:
        return self.points.take(slice(self.offsets[k], self.offsets[k + 1]))

    @property
    def measurements(self) -> list:
        return [self.measurement(k) for k in range(self.n_measurements)]

    @classmethod
    def from_measurements(cls, run_id, start_time_s, measurement_rate_hz, times, clouds, **kw) -> "RunRecord":
        counts = [len(c) for c in clouds]
        offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        return cls(run_id, start_time_s, measurement_rate_hz, times, offsets, PointCloud.concat(list(clouds)), **kw)

    def __eq__(self, other):
        if not isinstance(other, RunRecord):
            return NotImplemented
        return (
            self.run_id == other.run_id
            and self.start_time_s == other.start_time_s
            and self.measurement_rate_hz == other.measurement_rate_hz
            and self.sensor_label == other.sensor_label
            and self.imu_roll_deg == other.imu_roll_deg
            and self.imu_pitch_deg == other.imu_pitch_deg
            and np.array_equal(self.measurement_times_s, other.measurement_times_s)
            and np.array_equal(self.offsets, other.offsets)
            and self.points == other.points
        )


@dataclasses.dataclass(eq=False)
class DeploymentRecord:
    """Runs against one water body plus the groundtruth depth series.

    ``d_ref_m`` is the offset with ``depth + distance = d_ref_m``; it is
    known for synthetic deployments and ``None`` for field data.
    """

    deployment_id: str
    runs: list
    groundtruth_times_s: np.ndarray
    groundtruth_depth_m: np.ndarray
    kind: str = "automated"
    d_ref_m: Optional[float] = None
    notes: str = ""

    def __post_init__(self):
        self.groundtruth_times_s = np.asarray(self.groundtruth_times_s, dtype=float).reshape(-1)
        self.groundtruth_depth_m = np.asarray(self.groundtruth_depth_m, dtype=float).reshape(-1)
        if self.kind not in ("manual", "automated"):
            raise DomainError(f"deployment kind must be manual or automated, got {self.kind!r}")
        if self.groundtruth_times_s.size != self.groundtruth_depth_m.size:
            raise DomainError("groundtruth timestamps and depths differ in length")
        if self.groundtruth_times_s.size < 1:
            raise DomainError("a deployment needs at least one groundtruth sample")
        if np.any(np.diff(self.groundtruth_times_s) <= 0):
            raise DomainError("groundtruth timestamps must be strictly increasing")
        if not np.all(np.isfinite(self.groundtruth_depth_m)):
            raise DomainError("groundtruth depths must be finite")
        starts = [r.start_time_s for r in self.runs]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise DomainError("run start times must be strictly increasing")

    def __eq__(self, other):
        if not isinstance(other, DeploymentRecord):
            return NotImplemented
        return (
            self.deployment_id == other.deployment_id
            and self.kind == other.kind
            and self.d_ref_m == other.d_ref_m
            and self.notes == other.notes
            and len(self.runs) == len(other.runs)
            and all(a == b for a, b in zip(self.runs, other.runs))
            and np.array_equal(self.groundtruth_times_s, other.groundtruth_times_s)
            and np.array_equal(self.groundtruth_depth_m, other.groundtruth_depth_m)
        )


def _intensities(rng, profile, cls, n):
    mean, std = profile[cls]
    if n == 0:
        return np.zeros(0)
    if std == 0:
        return np.full(n, mean)
    a, b = (0.0 - mean) / std, (1.0 - mean) / std
    return truncnorm.rvs(a, b, loc=mean, scale=std, size=n, random_state=rng)


def synth_run(
    spec: SceneSpec,
    duration_s: float,
    rate_hz: float,
    seed=0,
    start_time_s: float = 0.0,
    run_id: str = "run-0000",
    sensor_label: str = "synthetic",
) -> RunRecord:
    """Generate one run of ``round(duration_s * rate_hz)`` measurements.

    ``seed`` is anything :func:`numpy.random.default_rng` accepts.
    """
    if not (duration_s > 0 and rate_hz > 0):
        raise DomainError("duration and rate must be positive")
    rng = np.random.default_rng(seed)
    n = max(int(round(duration_s * rate_hz)), 1)
    times = np.arange(n) / rate_hz
    d = spec.true_distance_m
    prof = spec.intensity_profile

    n_sub = rng.poisson(spec.subsurface_rate, n)
    n_near = rng.poisson(spec.near_noise_rate, n)
    n_mp = rng.poisson(spec.multipath_rate, n)
    counts = 1 + n_sub + n_near + n_mp
    total = int(counts.sum())

    # block layout inside each measurement: surface, subsurface, near, multipath
    meas = np.repeat(np.arange(n), counts)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    local = np.arange(total) - starts[meas]
    cls = np.full(total, 3)
    cls[local < 1 + n_sub[meas] + n_near[meas]] = 2
    cls[local < 1 + n_sub[meas]] = 1
    cls[local < 1] = 0

    x = np.empty(total)
    y = np.empty(total)
    p = np.empty(total)

    m0 = cls == 0
    y[m0] = d + spec.surface_jitter_std_m * rng.standard_normal(n)
    x[m0] = spec.surface_x_std_m * rng.standard_normal(n)
    p[m0] = _intensities(rng, prof, PathClass.DIRECT_SURFACE, n)

    hw = spec.noise_x_half_width_m
    for code, pclass in ((1, PathClass.SUBSURFACE), (2, PathClass.NEAR_SENSOR_NOISE), (3, PathClass.MULTIPATH)):
        mk = cls == code
        k = int(mk.sum())
        if pclass is PathClass.SUBSURFACE:
            lo, hi = spec.subsurface_depth_range_m
            y[mk] = d + rng.uniform(lo, hi, k)
            x[mk] = spec.surface_x_std_m * rng.standard_normal(k)
        elif pclass is PathClass.NEAR_SENSOR_NOISE:
            y[mk] = rng.uniform(0.0, spec.near_noise_max_y_m, k)
            x[mk] = rng.uniform(-hw, hw, k)
        else:
            lo, hi = spec.multipath_extra_path_m
            y[mk] = d + rng.uniform(lo, hi, k)
            x[mk] = rng.uniform(-hw, hw, k)
        p[mk] = _intensities(rng, prof, pclass, k)

    cloud = PointCloud(x, y, np.zeros(total), p, times[meas])
    offsets = np.concatenate([[0], np.cumsum(counts)])

    if spec.single_point:
        # keep the strongest return of each measurement
        order = np.lexsort((-p, meas))
        first = order[np.concatenate([[0], np.cumsum(counts)[:-1]])]
        cloud = cloud.take(first)
        offsets = np.arange(n + 1)

    roll, pitch = spec.tilt_deg
    cloud = apply_tilt(cloud, roll, pitch)
    return RunRecord(
        run_id=run_id,
        start_time_s=float(start_time_s),
        measurement_rate_hz=float(rate_hz),
        measurement_times_s=times,
        offsets=offsets,
        points=cloud,
        sensor_label=sensor_label,
        imu_roll_deg=roll,
        imu_pitch_deg=pitch,
    )


def linear_trajectory(start_distance_m: float, change_m: float, over_s: float) -> Callable:
    """Distance drifting linearly by ``change_m`` across ``over_s`` seconds."""
    if not over_s > 0:
        raise DomainError("trajectory duration must be positive")
    return lambda t: start_distance_m + change_m * (t / over_s)


def synth_deployment(
    base_spec: SceneSpec,
    level_trajectory: Callable,
    n_runs: int,
    run_interval_s: float,
    run_duration_s: float,
    groundtruth_interval_s: float,
    seed: int = 0,
    rate_hz: float = 10.0,
    start_time_s: float = 0.0,
    initial_depth_m: float = 1.0,
    groundtruth_noise_std_m: float = 0.0,
    deployment_id: str = "synthetic-deployment",
    kind: str = "automated",
    sensor_label: str = "synthetic",
) -> DeploymentRecord:
    """Periodic runs against a water level following ``level_trajectory``.

    ``level_trajectory`` maps seconds since ``start_time_s`` to the
    sensor-to-surface distance. Each run sees the distance at its start.
    Groundtruth depth is ``d_ref - distance`` with
    ``d_ref = distance(0) + initial_depth_m``, sampled every
    ``groundtruth_interval_s`` until the last run has ended. Run ``i`` draws
    from the stream seeded by ``(seed, i)``.
    """
    if n_runs < 1:
        raise DomainError("n_runs must be >= 1")
    if not (run_interval_s > 0 and run_duration_s > 0 and groundtruth_interval_s > 0):
        raise DomainError("intervals must be positive")

    def distance(t):
        value = float(level_trajectory(t))
        if not (math.isfinite(value) and value > 0):
            raise DomainError(f"trajectory gave a non-positive distance {value!r} at t={t}")
        return value

    d_ref = distance(0.0) + initial_depth_m
    runs = []
    for i in range(n_runs):
        t_rel = i * run_interval_s
        spec = base_spec.with_(true_distance_m=distance(t_rel))
        runs.append(synth_run(
            spec, run_duration_s, rate_hz, seed=[seed, i],
            start_time_s=start_time_s + t_rel, run_id=f"run-{i:04d}", sensor_label=sensor_label,
        ))

    end = (n_runs - 1) * run_interval_s + run_duration_s
    n_gt = int(math.floor(end / groundtruth_interval_s)) + 1
    gt_rel = np.arange(n_gt) * groundtruth_interval_s
    depth = np.array([d_ref - distance(t) for t in gt_rel])
    if groundtruth_noise_std_m > 0:
        gt_rng = np.random.default_rng([seed, n_runs])  # first stream no run uses
        depth = depth + groundtruth_noise_std_m * gt_rng.standard_normal(n_gt)
    return DeploymentRecord(
        deployment_id=deployment_id,
        runs=runs,
        groundtruth_times_s=start_time_s + gt_rel,
        groundtruth_depth_m=depth,
        kind=kind,
        d_ref_m=d_ref,
    )
