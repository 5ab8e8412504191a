"""File formats.

* Run files: JSON lines. A header object, then one object per point
  ``{"t", "x", "y", "z", "p"}`` with ``t`` in seconds since the run start.
  Points sharing ``t`` form one measurement; a row holding only ``t``
  declares a measurement without points.
* Groundtruth: CSV with columns ``timestamp_s,depth_m``.
* Deployments: a JSON manifest listing run files and the groundtruth file,
  paths relative to the manifest.
* Reports, parameters and chirp configs: JSON objects.
* Tuning tables: CSV, one row per grid cell.

Lengths and times are written with 6 fractional digits and squared errors
in scientific notation with 6 fractional digits, so output is byte-stable.
All writes go through a temporary file that is renamed into place.
"""

import csv
import io as _io
import json
import math
import os
import tempfile
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DomainError, ParseError, RadarLevelError
from .estimator import RunEstimate
from .evaluation import EvaluationReport, ParamGrid
from .filtering import FilterParams, PointCloud
from .scenesim import DeploymentRecord, RunRecord, SceneSpec
from .waveform import ChirpConfig

__all__ = [
    "RUN_HEADER_FIELDS",
    "TABLE_COLUMNS",
    "dumps",
    "write_run_file",
    "parse_run_file",
    "write_groundtruth",
    "parse_groundtruth",
    "write_deployment",
    "parse_deployment",
    "write_report",
    "read_report",
    "write_estimates",
    "read_estimates",
    "write_results_table",
    "read_results_table",
    "write_params",
    "read_params",
    "read_grid",
    "default_grid",
    "write_chirp_config",
    "read_chirp_config",
    "read_scene",
    "write_rdmap_csv",
    "write_plot",
]

RUN_HEADER_FIELDS = ("run_id", "sensor_label", "start_time_s", "measurement_rate_hz",
                     "imu_roll_deg", "imu_pitch_deg")
TABLE_COLUMNS = ("aggregation_F", "window_w", "y_min_m", "y_max_m", "x_min_m", "x_max_m",
                 "p_min", "p_top_percent", "i_max", "n_runs_scored", "mse_m2", "rmse_m")
_SCIENTIFIC = {"mse_m2", "rmse_m"}


def _fixed(v: float) -> str:
    text = f"{v:.6f}"
    return text[1:] if text == "-0.000000" else text


def _num(v, key=None):
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if not math.isfinite(v):
        return "null"
    return f"{v:.6e}" if key in _SCIENTIFIC else _fixed(v)


def dumps(obj, key=None) -> str:
    """Compact JSON with fixed float formatting and insertion-ordered keys."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v, k)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(dumps(v, key) for v in obj) + "]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if hasattr(obj, "value") and isinstance(obj.value, str):  # enums
        return json.dumps(obj.value)
    return _num(obj, key)


def _atomic_write(path, text: str):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None


# runs

def write_run_file(run: RunRecord, path):
    header = {"run_id": run.run_id, "sensor_label": run.sensor_label}
    for key in RUN_HEADER_FIELDS[2:]:
        header[key] = float(getattr(run, key))
    lines = [dumps(header)]
    pts = run.points
    for k, t in enumerate(run.measurement_times_s.tolist()):
        lo, hi = run.offsets[k], run.offsets[k + 1]
        if lo == hi:
            lines.append(dumps({"t": t}))
        for i in range(lo, hi):
            lines.append(dumps({"t": t, "x": pts.x[i], "y": pts.y[i], "z": pts.z[i], "p": pts.p[i]}))
    _atomic_write(path, "\n".join(lines) + "\n")


def parse_run_file(path) -> RunRecord:
    with open(path, encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    if not raw:
        raise ParseError("missing header", path, 1)
    try:
        header = json.loads(raw[0])
    except json.JSONDecodeError as exc:
        raise ParseError(f"header is not JSON: {exc.msg}", path, 1) from None
    if not isinstance(header, dict):
        raise ParseError("header must be a JSON object", path, 1)
    missing = [k for k in RUN_HEADER_FIELDS if k not in header]
    if missing:
        raise ParseError(f"header lacks {', '.join(missing)}", path, 1)

    times, counts, cols = [], [], [[], [], [], [], []]
    prev_t = -math.inf
    for lineno, line in enumerate(raw[1:], start=2):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed row: {exc.msg}", path, lineno) from None
        if not isinstance(row, dict) or "t" not in row:
            raise ParseError("row lacks t", path, lineno)
        try:
            t = float(row["t"])
            vals = None
            if set(row) != {"t"}:
                if set(row) != {"t", "x", "y", "z", "p"}:
                    raise ParseError(f"unexpected fields {sorted(row)}", path, lineno)
                vals = [float(row[k]) for k in "xyzp"]
        except (TypeError, ValueError):
            raise ParseError("non-numeric value", path, lineno) from None
        if not math.isfinite(t) or (vals is not None and not all(map(math.isfinite, vals))):
            raise ParseError("non-finite value", path, lineno)
        if t < prev_t:
            raise ParseError(f"t decreases from {prev_t} to {t}", path, lineno)
        if vals is not None and not 0 <= vals[3] <= 1:
            raise ParseError(f"intensity p={vals[3]} outside [0, 1]", path, lineno)
        if t > prev_t:
            times.append(t)
            counts.append(0)
        elif vals is None or (counts[-1] == 0):
            raise ParseError("empty-measurement marker shares t with other rows", path, lineno)
        prev_t = t
        if vals is not None:
            counts[-1] += 1
            for col, v in zip(cols, [*vals[:3], vals[3], t]):
                col.append(v)

    x, y, z, p, tt = (np.array(c, dtype=float) for c in cols)
    try:
        return RunRecord(
            run_id=str(header["run_id"]),
            start_time_s=float(header["start_time_s"]),
            measurement_rate_hz=float(header["measurement_rate_hz"]),
            measurement_times_s=np.array(times, dtype=float),
            offsets=np.concatenate([[0], np.cumsum(counts, dtype=np.int64)]),
            points=PointCloud(x, y, z, p, tt),
            sensor_label=str(header["sensor_label"]),
            imu_roll_deg=float(header["imu_roll_deg"]),
            imu_pitch_deg=float(header["imu_pitch_deg"]),
        )
    except (DomainError, TypeError, ValueError) as exc:
        raise ParseError(str(exc), path) from None


# groundtruth

def write_groundtruth(times_s, depths_m, path):
    buf = _io.StringIO()
    buf.write("timestamp_s,depth_m\n")
    for t, d in zip(np.asarray(times_s).tolist(), np.asarray(depths_m).tolist()):
        buf.write(f"{_fixed(t)},{_fixed(d)}\n")
    _atomic_write(path, buf.getvalue())


def parse_groundtruth(path):
    times, depths = [], []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        head = next(reader, None)
        if head != ["timestamp_s", "depth_m"]:
            raise ParseError("expected header timestamp_s,depth_m", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError("expected 2 columns", path, lineno)
            try:
                t, d = float(row[0]), float(row[1])
            except ValueError:
                raise ParseError("non-numeric value", path, lineno) from None
            if not (math.isfinite(t) and math.isfinite(d)):
                raise ParseError("non-finite value", path, lineno)
            if times and t <= times[-1]:
                raise ParseError("timestamps must be strictly increasing", path, lineno)
            times.append(t)
            depths.append(d)
    return np.array(times), np.array(depths)


# deployments

def write_deployment(dep: DeploymentRecord, path):
    """Write a manifest at ``path`` with run files in ``runs/`` and ``groundtruth.csv`` beside it."""
    path = Path(path)
    run_dir = path.parent / "runs"
    run_dir.mkdir(parents=True, exist_ok=True)
    rel_runs = []
    for run in dep.runs:
        rel = f"runs/{run.run_id}.jsonl"
        write_run_file(run, path.parent / rel)
        rel_runs.append(rel)
    write_groundtruth(dep.groundtruth_times_s, dep.groundtruth_depth_m, path.parent / "groundtruth.csv")
    manifest = {
        "deployment_id": dep.deployment_id,
        "kind": dep.kind,
        "runs": rel_runs,
        "groundtruth": "groundtruth.csv",
        "notes": dep.notes,
    }
    if dep.d_ref_m is not None:
        manifest["d_ref_m"] = dep.d_ref_m
    _atomic_write(path, dumps(manifest) + "\n")


def parse_deployment(path) -> DeploymentRecord:
    path = Path(path)
    m = _load_json(path)
    for key in ("deployment_id", "kind", "runs", "groundtruth"):
        if key not in m:
            raise ParseError(f"manifest lacks {key}", path)
    base = path.parent
    for rel in [*m["runs"], m["groundtruth"]]:
        if not (base / rel).is_file():
            raise ParseError(f"referenced file {rel} does not exist", path)
    runs = [parse_run_file(base / rel) for rel in m["runs"]]
    times, depths = parse_groundtruth(base / m["groundtruth"])
    try:
        return DeploymentRecord(
            deployment_id=str(m["deployment_id"]),
            runs=runs,
            groundtruth_times_s=times,
            groundtruth_depth_m=depths,
            kind=m["kind"],
            d_ref_m=None if m.get("d_ref_m") is None else float(m["d_ref_m"]),
            notes=str(m.get("notes", "")),
        )
    except DomainError as exc:
        raise ParseError(str(exc), path) from None


# reports and estimates

def _report_dict(report: EvaluationReport) -> dict:
    return {
        "params": report.params.to_dict(),
        "n_runs_scored": report.n_runs_scored,
        "mse_m2": report.mse_m2,
        "rmse_m": report.rmse_m,
        "run_ids": list(report.run_ids),
        "run_times_s": list(report.run_times_s),
        "estimate_deltas_m": list(report.estimate_deltas_m),
        "groundtruth_deltas_m": list(report.groundtruth_deltas_m),
        "skipped_runs": [list(s) for s in report.skipped_runs],
    }


def report_to_json(report: EvaluationReport) -> str:
    return dumps(_report_dict(report)) + "\n"


def write_report(report: EvaluationReport, path):
    _atomic_write(path, report_to_json(report))


def read_report(path) -> EvaluationReport:
    d = _load_json(path)
    try:
        return EvaluationReport(
            params=FilterParams.from_dict(d["params"]),
            mse_m2=float(d["mse_m2"]),
            run_ids=list(d["run_ids"]),
            run_times_s=[float(v) for v in d["run_times_s"]],
            estimate_deltas_m=[float(v) for v in d["estimate_deltas_m"]],
            groundtruth_deltas_m=[float(v) for v in d["groundtruth_deltas_m"]],
            skipped_runs=[tuple(s) for s in d.get("skipped_runs", [])],
        )
    except (KeyError, TypeError, ValueError, RadarLevelError) as exc:
        raise ParseError(f"malformed report: {exc}", path) from None


def estimate_to_json(est: RunEstimate) -> str:
    return dumps(est.to_dict())


def write_estimates(estimates, path):
    _atomic_write(path, "".join(estimate_to_json(e) + "\n" for e in estimates))


def read_estimates(path) -> list:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(RunEstimate.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"malformed estimate: {exc}", path, lineno) from None
    return out


def _cell(v, key):
    if v is None:
        return ""
    if hasattr(v, "value"):
        return v.value
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{float(v):.6e}" if key in _SCIENTIFIC else _fixed(float(v))


def write_results_table(reports, path):
    """CSV of tuning results, one row per report in the given order."""
    buf = _io.StringIO()
    buf.write(",".join(TABLE_COLUMNS) + "\n")
    for r in reports:
        row = {k: getattr(r.params, k) for k in TABLE_COLUMNS[:9]}
        row.update(n_runs_scored=r.n_runs_scored, mse_m2=r.mse_m2, rmse_m=r.rmse_m)
        buf.write(",".join(_cell(row[k], k) for k in TABLE_COLUMNS) + "\n")
    _atomic_write(path, buf.getvalue())


def read_results_table(path) -> list:
    """Rows of a tuning table as dicts of floats, ints, strings or ``None``."""
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TABLE_COLUMNS:
            raise ParseError("unexpected table columns", path, 1)
        for row in reader:
            out = {}
            for k, v in row.items():
                if v == "":
                    out[k] = None
                elif k == "aggregation_F":
                    out[k] = v
                elif k in ("window_w", "i_max", "n_runs_scored"):
                    out[k] = int(v)
                else:
                    out[k] = float(v)
            rows.append(out)
    return rows


# parameter files

def write_params(params: FilterParams, path):
    _atomic_write(path, dumps(params.to_dict()) + "\n")


def read_params(path) -> FilterParams:
    try:
        return FilterParams.from_dict(_load_json(path))
    except (ConfigurationError, TypeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"invalid filter parameters: {exc}", path) from None


def read_grid(path) -> ParamGrid:
    try:
        return ParamGrid.from_dict(_load_json(path))
    except (ConfigurationError, TypeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"invalid grid: {exc}", path) from None


def default_grid() -> ParamGrid:
    text = resources.files("radarlevel").joinpath("data/default_grid.json").read_text(encoding="utf-8")
    return ParamGrid.from_dict(json.loads(text))


def write_chirp_config(config: ChirpConfig, path):
    _atomic_write(path, json.dumps(config.to_dict()) + "\n")


def read_chirp_config(path) -> ChirpConfig:
    try:
        return ChirpConfig.from_dict(_load_json(path))
    except (DomainError, TypeError) as exc:
        raise ParseError(f"invalid chirp config: {exc}", path) from None


def read_scene(path) -> SceneSpec:
    try:
        return SceneSpec.from_dict(_load_json(path))
    except (DomainError, TypeError, ValueError) as exc:
        raise ParseError(f"invalid scene: {exc}", path) from None


def write_rdmap_csv(rd_map, path):
    """Magnitudes of a range-Doppler map; rows are Doppler bins, columns range bins."""
    buf = _io.StringIO()
    np.savetxt(buf, np.abs(rd_map.cells), fmt="%.6e", delimiter=",")
    _atomic_write(path, buf.getvalue())


# plots

def _svg(report: EvaluationReport, width=800, height=400, pad=50) -> str:
    t = np.asarray(report.run_times_s, dtype=float)
    hours = (t - t[0]) / 3600.0 if t.size else t
    est = np.asarray(report.estimate_deltas_m) * 1e3
    gt = np.asarray(report.groundtruth_deltas_m) * 1e3
    lo = min(est.min(initial=0.0), gt.min(initial=0.0))
    hi = max(est.max(initial=0.0), gt.max(initial=0.0))
    if hi - lo < 2.0:
        mid = (hi + lo) / 2
        lo, hi = mid - 1.0, mid + 1.0
    span_t = hours[-1] if hours.size and hours[-1] > 0 else 1.0

    def sx(h):
        return pad + (width - 2 * pad) * h / span_t

    def sy(v):
        return height - pad - (height - 2 * pad) * (v - lo) / (hi - lo)

    def poly(vals, colour, label):
        pts = " ".join(f"{sx(h):.2f},{sy(v):.2f}" for h, v in zip(hours, vals))
        return f'<polyline class="{label}" fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>'

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line class="zero" x1="{pad}" y1="{sy(0.0):.2f}" x2="{width - pad}" y2="{sy(0.0):.2f}" stroke="#bbbbbb"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2:.0f}" y="{height - 12}" text-anchor="middle" font-size="12">time since first run, h ({span_t:.2f} h)</text>',
        f'<text x="14" y="{height / 2:.0f}" font-size="12" transform="rotate(-90 14 {height / 2:.0f})" text-anchor="middle">delta, mm ({lo:.2f} to {hi:.2f})</text>',
        poly(gt, "#1f5fbf", "groundtruth"),
        poly(est, "#c0392b", "estimate"),
        f'<text x="{width - pad}" y="{pad - 10}" text-anchor="end" font-size="12">'
        f'red: radar distance delta, blue: inverted depth delta; RMSE {report.rmse_m * 1e3:.2f} mm</text>',
        "</svg>",
    ]
    return "\n".join(parts) + "\n"


def write_plot(report: EvaluationReport, out_dir):
    """Write ``deltas.csv`` and ``deltas.svg`` for a report; returns both paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    buf = _io.StringIO()
    buf.write("run_id,run_time_s,estimate_delta_m,groundtruth_delta_m\n")
    for rid, t, e, g in zip(report.run_ids, report.run_times_s, report.estimate_deltas_m,
                            report.groundtruth_deltas_m):
        buf.write(f"{rid},{_fixed(t)},{_fixed(e)},{_fixed(g)}\n")
    csv_path, svg_path = out_dir / "deltas.csv", out_dir / "deltas.svg"
    _atomic_write(csv_path, buf.getvalue())
    _atomic_write(svg_path, _svg(report))
    return csv_path, svg_path
