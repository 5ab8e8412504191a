"""Scoring estimates against groundtruth and tuning filter parameters.

Radar distances and transducer depths share no common datum, so both series
are compared as deltas from their first scored run. Depth grows when the
distance shrinks, hence the groundtruth deltas are negated.
"""

import dataclasses
import itertools
import math
from typing import Sequence

import numpy as np

from .errors import (
    AlignmentError,
    ConfigurationError,
    DimensionError,
    DomainError,
    InsufficientDataError,
    NoSignalError,
    TuningError,
)
from .estimator import DEFAULT_BIN_WIDTH_M, WindowBatch, estimate_from_batch, prepare_run
from .filtering import Aggregation, FilterParams

__all__ = [
    "DEFAULT_MAX_GAP_S",
    "AlignedPair",
    "EvaluationReport",
    "ParamGrid",
    "GridSearchResult",
    "align",
    "to_deltas",
    "mse",
    "rmse",
    "score_estimates",
    "evaluate_deployment",
    "grid_search",
]

DEFAULT_MAX_GAP_S = 900.0


@dataclasses.dataclass(frozen=True)
class AlignedPair:
    run_id: str
    run_time_s: float
    estimate_distance_m: float
    groundtruth_time_s: float
    groundtruth_depth_m: float
    gap_s: float


@dataclasses.dataclass(eq=False)
class EvaluationReport:
    params: FilterParams
    mse_m2: float
    run_ids: list = dataclasses.field(default_factory=list)
    run_times_s: list = dataclasses.field(default_factory=list)
    estimate_deltas_m: list = dataclasses.field(default_factory=list)
    groundtruth_deltas_m: list = dataclasses.field(default_factory=list)
    skipped_runs: list = dataclasses.field(default_factory=list)  # (run_id, reason)

    def __post_init__(self):
        if len(self.estimate_deltas_m) != len(self.groundtruth_deltas_m):
            raise DimensionError("delta series differ in length")

    @property
    def n_runs_scored(self) -> int:
        return len(self.estimate_deltas_m)

    @property
    def rmse_m(self) -> float:
        return math.sqrt(self.mse_m2)

    @property
    def n_no_signal(self) -> int:
        return sum(1 for _, reason in self.skipped_runs if reason.startswith("no-signal"))

    def __eq__(self, other):
        if not isinstance(other, EvaluationReport):
            return NotImplemented
        return (self.params == other.params and self.mse_m2 == other.mse_m2
                and list(self.run_ids) == list(other.run_ids)
                and list(self.run_times_s) == list(other.run_times_s)
                and list(self.estimate_deltas_m) == list(other.estimate_deltas_m)
                and list(self.groundtruth_deltas_m) == list(other.groundtruth_deltas_m)
                and [tuple(s) for s in self.skipped_runs] == [tuple(s) for s in other.skipped_runs])


_GRID_AXES = ("aggregation_F", "window_w", "y_min_m", "y_max_m", "x_min_m", "x_max_m",
              "p_min", "p_top_percent", "i_max")


@dataclasses.dataclass
class ParamGrid:
    """Candidate values per filter parameter; ``None`` leaves a bound unset.

    Cells enumerate the cartesian product with the last axis varying
    fastest. Combinations violating :class:`FilterParams` rules are dropped.
    """

    aggregation_F: Sequence = (Aggregation.MIN_Y,)
    window_w: Sequence = (0,)
    y_min_m: Sequence = (None,)
    y_max_m: Sequence = (None,)
    x_min_m: Sequence = (None,)
    x_max_m: Sequence = (None,)
    p_min: Sequence = (None,)
    p_top_percent: Sequence = (None,)
    i_max: Sequence = (None,)

    def cells(self) -> list:
        out = []
        for combo in itertools.product(*(list(getattr(self, a)) for a in _GRID_AXES)):
            try:
                out.append(FilterParams(**dict(zip(_GRID_AXES, combo))))
            except ConfigurationError:
                continue
        if not out:
            raise ConfigurationError("parameter grid has no valid cell")
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ParamGrid":
        unknown = set(d) - set(_GRID_AXES)
        if unknown:
            raise ConfigurationError(f"unknown grid axes: {sorted(unknown)}")
        kwargs = {}
        for k, v in d.items():
            values = list(v) if isinstance(v, (list, tuple)) else [v]
            if not values:
                raise ConfigurationError(f"grid axis {k} is empty")
            kwargs[k] = values
        return cls(**kwargs)

    def to_dict(self) -> dict:
        out = {}
        for a in _GRID_AXES:
            out[a] = [v.value if isinstance(v, Aggregation) else v for v in getattr(self, a)]
        return out

    @classmethod
    def single(cls, params: FilterParams) -> "ParamGrid":
        return cls(**{a: [getattr(params, a)] for a in _GRID_AXES})


def align(run_times_s, groundtruth_times_s, max_gap_s: float = DEFAULT_MAX_GAP_S):
    """Index of the nearest groundtruth sample for every run time.

    Equidistant samples resolve to the earlier one. Returns ``(index, gap)``
    arrays with ``index = -1`` where the gap exceeds ``max_gap_s``.
    """
    gt = np.asarray(groundtruth_times_s, dtype=float)
    t = np.asarray(run_times_s, dtype=float)
    if gt.size == 0:
        raise AlignmentError("groundtruth series is empty")
    if np.any(np.diff(gt) < 0):
        raise AlignmentError("groundtruth timestamps must be sorted")
    right = np.clip(np.searchsorted(gt, t, side="left"), 0, gt.size - 1)
    left = np.clip(right - 1, 0, gt.size - 1)
    take_left = np.abs(t - gt[left]) <= np.abs(gt[right] - t)
    idx = np.where(take_left, left, right)
    gap = np.abs(t - gt[idx])
    idx = np.where(gap <= max_gap_s, idx, -1)
    return idx, gap


def align_pairs(estimates: Sequence, groundtruth_times_s, groundtruth_depth_m,
                max_gap_s: float = DEFAULT_MAX_GAP_S):
    """Pair run estimates with groundtruth; returns ``(pairs, skipped)``."""
    idx, gap = align([e.run_time_s for e in estimates], groundtruth_times_s, max_gap_s)
    gt_t = np.asarray(groundtruth_times_s, dtype=float)
    gt_d = np.asarray(groundtruth_depth_m, dtype=float)
    pairs, skipped = [], []
    for e, i, g in zip(estimates, idx.tolist(), gap.tolist()):
        if i < 0:
            skipped.append((e.run_id, f"no groundtruth within {max_gap_s:g} s (nearest {g:g} s)"))
            continue
        pairs.append(AlignedPair(e.run_id, e.run_time_s, e.d_run_m, float(gt_t[i]), float(gt_d[i]), g))
    return pairs, skipped


def to_deltas(values: Sequence[float]) -> list:
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        raise DomainError("cannot form deltas of an empty series")
    return (vals - vals[0]).tolist()


def mse(estimated: Sequence[float], truth: Sequence[float]) -> float:
    a = np.asarray(estimated, dtype=float)
    b = np.asarray(truth, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.size} estimates vs {b.size} truths")
    if a.size == 0:
        raise DimensionError("mean squared error of empty series")
    return float(np.mean((a - b) ** 2))


def rmse(estimated: Sequence[float], truth: Sequence[float]) -> float:
    return math.sqrt(mse(estimated, truth))


def score_estimates(estimates, skipped, deployment, params, max_gap_s=DEFAULT_MAX_GAP_S) -> EvaluationReport:
    """Delta MSE of already computed run estimates."""
    pairs, gap_skips = align_pairs(estimates, deployment.groundtruth_times_s,
                                   deployment.groundtruth_depth_m, max_gap_s)
    skipped = list(skipped) + gap_skips
    if len(pairs) < 2:
        raise InsufficientDataError(f"only {len(pairs)} run(s) scored; deltas need at least 2")
    est = to_deltas([p.estimate_distance_m for p in pairs])
    gt = [0.0 - d for d in to_deltas([p.groundtruth_depth_m for p in pairs])]
    return EvaluationReport(
        params=params,
        mse_m2=mse(est, gt),
        run_ids=[p.run_id for p in pairs],
        run_times_s=[p.run_time_s for p in pairs],
        estimate_deltas_m=est,
        groundtruth_deltas_m=gt,
        skipped_runs=skipped,
    )


def evaluate_deployment(deployment, params: FilterParams, max_gap_s: float = DEFAULT_MAX_GAP_S,
                        bin_width_m: float = DEFAULT_BIN_WIDTH_M) -> EvaluationReport:
    """Estimate every run, align with groundtruth and score the delta series."""
    estimates, skipped = [], []
    for run in deployment.runs:
        est, reason = _estimate_or_skip(run, prepare_run(run), None, params, bin_width_m)
        if est is None:
            skipped.append((run.run_id, reason))
        else:
            estimates.append(est)
    return score_estimates(estimates, skipped, deployment, params, max_gap_s)


def _estimate_or_skip(run, prepared, batch, params, bin_width_m):
    if run.n_measurements == 0:
        return None, "no-signal: run has no measurements"
    if params.window_w > run.n_measurements:
        return None, "no-signal: window longer than run"
    if batch is None:
        batch = WindowBatch(prepared, params.window_w)
    try:
        return estimate_from_batch(batch, prepared, params, bin_width_m), None
    except NoSignalError:
        return None, "no-signal: filter emptied every window"


@dataclasses.dataclass(eq=False)
class GridSearchResult:
    best_params: FilterParams
    best_report: EvaluationReport
    table: list  # EvaluationReports of valid cells, ascending MSE
    invalid: list  # (FilterParams, reason)


def grid_search(deployment, grid: ParamGrid, max_gap_s: float = DEFAULT_MAX_GAP_S,
                bin_width_m: float = DEFAULT_BIN_WIDTH_M) -> GridSearchResult:
    """Evaluate every grid cell and keep the one with the smallest delta MSE.

    Cells that leave more than half of the runs without signal, or score
    fewer than two runs, are invalid. Ties go to the earlier cell; the table
    keeps declaration order among equal MSEs.
    """
    cells = grid.cells()
    n_runs = len(deployment.runs)
    per_cell = [([], []) for _ in cells]  # (estimates, skipped)
    by_w = {}
    for ci, cell in enumerate(cells):
        by_w.setdefault(cell.window_w, []).append(ci)

    for run in deployment.runs:
        prepared = prepare_run(run)
        for w, members in by_w.items():
            batch = None
            if 0 < run.n_measurements and w <= run.n_measurements:
                batch = WindowBatch(prepared, w)
            for ci in members:
                est, reason = _estimate_or_skip(run, prepared, batch, cells[ci], bin_width_m)
                if est is None:
                    per_cell[ci][1].append((run.run_id, reason))
                else:
                    per_cell[ci][0].append(est)

    table, invalid = [], []
    for cell, (ests, skipped) in zip(cells, per_cell):
        no_signal = sum(1 for _, r in skipped if r.startswith("no-signal"))
        if no_signal > 0.5 * n_runs:
            invalid.append((cell, f"no signal on {no_signal} of {n_runs} runs"))
            continue
        try:
            table.append(score_estimates(ests, skipped, deployment, cell, max_gap_s))
        except InsufficientDataError as exc:
            invalid.append((cell, str(exc)))
    if not table:
        raise TuningError("every grid cell was invalid")
    table.sort(key=lambda r: r.mse_m2)  # stable
    return GridSearchResult(table[0].params, table[0], table, invalid)
