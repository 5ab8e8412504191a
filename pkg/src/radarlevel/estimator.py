"""Per-window aggregation and the mode rule that turns a run into one distance.

:func:`filter_window` and :func:`aggregate` work on one window at a time.
Whole runs go through :class:`WindowBatch`, which lays every window of a run
out as a padded matrix sorted once by intensity and once by ``y``, so that a
new parameter set costs only masked reductions. The two paths agree to
floating-point rounding.
"""

import dataclasses
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DomainError, NoSignalError, WindowError
from .filtering import (
    Aggregation,
    FilterParams,
    PointCloud,
    PointCloudWindow,
    percentile_positions,
    project_xy,
    tilt_compensate,
    window_spans,
)

__all__ = [
    "DEFAULT_BIN_WIDTH_M",
    "RunEstimate",
    "PreparedRun",
    "WindowBatch",
    "aggregate",
    "mode_estimate",
    "prepare_run",
    "estimate_run",
]

DEFAULT_BIN_WIDTH_M = 1e-3


@dataclasses.dataclass(eq=False)
class RunEstimate:
    run_id: str
    d_run_m: float
    n_windows: int
    n_empty_windows: int
    params: FilterParams
    per_window_estimates: np.ndarray  # NaN marks an empty window
    run_time_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "run_time_s": self.run_time_s,
            "d_run_m": self.d_run_m,
            "n_windows": self.n_windows,
            "n_empty_windows": self.n_empty_windows,
            "params": self.params.to_dict(),
            "per_window_estimates": [None if np.isnan(v) else float(v) for v in self.per_window_estimates],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunEstimate":
        return cls(
            run_id=d["run_id"],
            d_run_m=float(d["d_run_m"]),
            n_windows=int(d["n_windows"]),
            n_empty_windows=int(d["n_empty_windows"]),
            params=FilterParams.from_dict(d["params"]),
            per_window_estimates=np.array(
                [np.nan if v is None else v for v in d["per_window_estimates"]], dtype=float
            ),
            run_time_s=float(d.get("run_time_s", 0.0)),
        )


def aggregate(window: Union[PointCloudWindow, PointCloud], F) -> Optional[float]:
    """Representative ``y`` of one filtered window, or ``None`` when it is empty."""
    cloud = window.points if isinstance(window, PointCloudWindow) else window
    if len(cloud) == 0:
        return None
    F = Aggregation(F)
    y = cloud.y
    if F is Aggregation.MIN_Y:
        return float(y.min())
    if F is Aggregation.MEAN_Y:
        return float(y.mean())
    if F is Aggregation.MEDIAN_Y:
        return float(np.median(y))
    # highest intensity, nearer point on ties
    best = np.lexsort((y, -cloud.p))[0]
    return float(y[best])


def mode_estimate(estimates: Sequence[float], bin_width_m: float = DEFAULT_BIN_WIDTH_M) -> float:
    """Center of the most populated ``bin_width_m`` bin; the lower bin wins ties.

    ``None`` and NaN entries (empty windows) are ignored.
    """
    if not bin_width_m > 0:
        raise DomainError("bin width must be positive")
    vals = np.array([np.nan if e is None else e for e in estimates], dtype=float)
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        raise NoSignalError("no window produced an estimate")
    # rounding first keeps values such as 1.13 / 0.001 out of the bin below
    keys = np.floor(np.round(vals / bin_width_m, 9)).astype(np.int64)
    uniq, counts = np.unique(keys, return_counts=True)
    k = uniq[np.argmax(counts)]
    return float(k * bin_width_m + bin_width_m / 2)


@dataclasses.dataclass(eq=False)
class PreparedRun:
    """A run after tilt compensation and projection onto the XY plane."""

    run_id: str
    run_time_s: float
    points: PointCloud
    offsets: np.ndarray

    @property
    def n_measurements(self) -> int:
        return self.offsets.size - 1


def prepare_run(run) -> PreparedRun:
    cloud = tilt_compensate(run.points, run.imu_roll_deg, run.imu_pitch_deg)
    return PreparedRun(run.run_id, run.start_time_s, project_xy(cloud), run.offsets)


class WindowBatch:
    """All sliding windows of one prepared run for a fixed window size."""

    def __init__(self, prepared: PreparedRun, w: int):
        spans = window_spans(prepared.n_measurements, w)
        off = prepared.offsets
        first = np.array([s for s, _ in spans], dtype=np.int64) - 1
        last = np.array([e for _, e in spans], dtype=np.int64)
        start = off[first]
        count = off[last] - start
        self.n_windows = len(spans)
        self.points = prepared.points
        K = int(count.max()) if self.n_windows else 0
        self.width = K

        cols = np.arange(K)
        slot = cols[None, :] < count[:, None]
        idx = np.where(slot, start[:, None] + cols[None, :], 0)
        pts = self.points
        if len(pts) == 0:
            idx = np.zeros_like(idx)
            py = pp = pt = np.zeros_like(idx, dtype=float)
        else:
            py, pp, pt = pts.y[idx], pts.p[idx], pts.t[idx]

        # empty slots sort last in both orders
        order_p = np.lexsort((pt, py, -pp, ~slot), axis=-1)
        order_y = np.lexsort((pt, py, ~slot), axis=-1)
        self.idx_p = np.take_along_axis(idx, order_p, axis=1)
        self.slot_p = np.take_along_axis(slot, order_p, axis=1)
        self.y_p = np.take_along_axis(py, order_p, axis=1)
        self.p_p = np.take_along_axis(pp, order_p, axis=1)
        self.y_y = np.take_along_axis(py, order_y, axis=1)
        inv_p = np.argsort(order_p, axis=1)
        self.y_to_p = np.take_along_axis(inv_p, order_y, axis=1)

    def _point_mask(self, params: FilterParams) -> np.ndarray:
        pts = self.points
        ax = np.abs(pts.x)
        keep = pts.y >= 0
        if params.x_min_m is not None:
            keep &= ax >= params.x_min_m
        if params.x_max_m is not None:
            keep &= ax <= params.x_max_m
        if params.y_min_m is not None:
            keep &= pts.y >= params.y_min_m
        if params.y_max_m is not None:
            keep &= pts.y <= params.y_max_m
        if params.p_min is not None:
            keep &= pts.p >= params.p_min
        return keep

    def kept(self, params: FilterParams) -> np.ndarray:
        """Boolean matrix, in intensity order, of the points each window keeps."""
        if self.width == 0:
            return np.zeros((self.n_windows, 0), dtype=bool)
        keep = self.slot_p & self._point_mask(params)[self.idx_p]

        if params.p_min is None and params.p_top_percent is not None:
            n = keep.sum(axis=1)
            has = n > 0
            lo, hi, frac = percentile_positions(np.where(has, n, 1), params.p_top_percent)
            rank = np.cumsum(keep, axis=1) - 1  # descending-intensity rank
            lo_v = self._pick(self.p_p, keep, rank, n - 1 - lo)
            hi_v = self._pick(self.p_p, keep, rank, n - 1 - hi)
            thr = lo_v + (hi_v - lo_v) * frac
            keep &= self.p_p >= thr[:, None]

        if params.i_max is not None:
            keep &= (np.cumsum(keep, axis=1) - 1) < params.i_max
        return keep

    @staticmethod
    def _pick(values, mask, rank, target):
        hit = mask & (rank == target[:, None])
        return np.where(hit, values, 0.0).sum(axis=1)

    def estimates(self, params: FilterParams) -> np.ndarray:
        """Per-window ``F`` values, NaN for windows the filter empties."""
        keep = self.kept(params)
        n = keep.sum(axis=1)
        out = np.full(self.n_windows, np.nan)
        has = n > 0
        if not has.any():
            return out
        F = params.aggregation_F
        rows = np.flatnonzero(has)
        if F is Aggregation.ARGMAX_P_Y:
            col = np.argmax(keep[rows], axis=1)
            out[rows] = self.y_p[rows, col]
        elif F is Aggregation.MEAN_Y:
            out[rows] = np.where(keep, self.y_p, 0.0).sum(axis=1)[rows] / n[rows]
        else:
            keep_y = np.take_along_axis(keep, self.y_to_p, axis=1)
            if F is Aggregation.MIN_Y:
                col = np.argmax(keep_y[rows], axis=1)
                out[rows] = self.y_y[rows, col]
            else:
                rank = np.cumsum(keep_y, axis=1) - 1
                a = self._pick(self.y_y, keep_y, rank, (n - 1) // 2)
                b = self._pick(self.y_y, keep_y, rank, n // 2)
                out[rows] = ((a + b) / 2)[rows]
        return out


def estimate_from_batch(batch: WindowBatch, prepared: PreparedRun, params: FilterParams,
                        bin_width_m: float = DEFAULT_BIN_WIDTH_M) -> RunEstimate:
    per_window = batch.estimates(params)
    n_empty = int(np.isnan(per_window).sum())
    if n_empty == per_window.size:
        raise NoSignalError(f"run {prepared.run_id}: the filter emptied every window")
    return RunEstimate(
        run_id=prepared.run_id,
        d_run_m=mode_estimate(per_window, bin_width_m),
        n_windows=per_window.size,
        n_empty_windows=n_empty,
        params=params,
        per_window_estimates=per_window,
        run_time_s=prepared.run_time_s,
    )


def estimate_run(run, params: FilterParams, bin_width_m: float = DEFAULT_BIN_WIDTH_M) -> RunEstimate:
    """Distance from sensor to water for one run.

    Compensates tilt with the run's IMU angles, projects onto XY, slides
    windows of ``params.window_w`` measurements, filters and aggregates each
    window and returns the mode of the window estimates.
    """
    if run.n_measurements == 0:
        raise NoSignalError(f"run {run.run_id} has no measurements")
    if params.window_w > run.n_measurements:
        raise WindowError(f"window size {params.window_w} exceeds the {run.n_measurements} measurements")
    prepared = prepare_run(run)
    return estimate_from_batch(WindowBatch(prepared, params.window_w), prepared, params, bin_width_m)
