import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from radarlevel import (
    ChirpConfig,
    EvaluationReport,
    FilterParams,
    ParseError,
    PointCloud,
    RunRecord,
    SceneSpec,
    estimate_run,
    synth_deployment,
    synth_run,
    linear_trajectory,
)
from radarlevel import io as rio

from strategies import filter_params

PROPS = settings(max_examples=100, deadline=None,
                 suppress_health_check=[HealthCheck.function_scoped_fixture])

six = lambda lo, hi: st.floats(lo, hi).map(lambda v: round(v, 6))


def _round_params(params):
    fields = {k: (round(v, 6) if isinstance(v, float) else v) for k, v in params.to_dict().items()}
    return FilterParams.from_dict(fields)


@st.composite
def run_records(draw):
    rate = draw(st.sampled_from([5.0, 10.0, 20.0]))
    n = draw(st.integers(0, 6))
    times = [round(k / rate, 6) for k in range(n)]
    clouds = []
    for t in times:
        m = draw(st.integers(0, 4))
        col = lambda lo, hi: draw(st.lists(six(lo, hi), min_size=m, max_size=m))
        clouds.append(PointCloud(col(-2, 2), col(-0.5, 3), col(-1, 1), col(0, 1), [t] * m))
    return RunRecord.from_measurements(
        draw(st.text("abcdefgh-0123456789", min_size=1, max_size=10)),
        draw(six(0, 1e6)), rate, times, clouds,
        sensor_label=draw(st.sampled_from(["IWR1443", "AWR1843", "synthetic"])),
        imu_roll_deg=draw(six(-30, 30)), imu_pitch_deg=draw(six(-30, 30)),
    )


@PROPS
@given(run_records())
def test_run_file_round_trip(tmp_path, run):
    path = tmp_path / "r.jsonl"
    rio.write_run_file(run, path)
    assert rio.parse_run_file(path) == run
    first = path.read_bytes()
    rio.write_run_file(run, path)
    assert path.read_bytes() == first


@PROPS
@given(st.lists(six(0, 1e6), min_size=1, max_size=20, unique=True), st.data())
def test_groundtruth_round_trip(tmp_path, times, data):
    times = sorted(times)
    depths = data.draw(st.lists(six(-5, 5), min_size=len(times), max_size=len(times)))
    path = tmp_path / "gt.csv"
    rio.write_groundtruth(times, depths, path)
    t, d = rio.parse_groundtruth(path)
    assert t.tolist() == times and d.tolist() == depths


@PROPS
@given(filter_params())
def test_params_round_trip(tmp_path, params):
    params = _round_params(params)
    path = tmp_path / "p.json"
    rio.write_params(params, path)
    assert rio.read_params(path) == params


@st.composite
def reports(draw):
    n = draw(st.integers(2, 8))
    mse_m2 = float(f"{draw(st.floats(0, 1e-2)):.6e}")
    vals = lambda: [0.0] + draw(st.lists(six(-0.1, 0.1), min_size=n - 1, max_size=n - 1))
    return EvaluationReport(
        params=_round_params(draw(filter_params())),
        mse_m2=mse_m2,
        run_ids=[f"run-{i:04d}" for i in range(n)],
        run_times_s=[1800.0 * i for i in range(n)],
        estimate_deltas_m=vals(),
        groundtruth_deltas_m=vals(),
        skipped_runs=draw(st.lists(st.tuples(st.just("run-x"), st.sampled_from(
            ["no-signal: filter emptied every window", "no groundtruth within 900 s"])), max_size=2)),
    )


@PROPS
@given(reports())
def test_report_round_trip(tmp_path, report):
    path = tmp_path / "report.json"
    rio.write_report(report, path)
    assert rio.read_report(path) == report
    first = path.read_bytes()
    rio.write_report(report, path)
    assert path.read_bytes() == first


def test_deployment_round_trip_and_determinism(tmp_path):
    spec = SceneSpec(surface_jitter_std_m=0.004, near_noise_rate=0.5, tilt_deg=(2.0, 5.0))
    dep = synth_deployment(spec, linear_trajectory(1.13, -0.03, 3 * 1800.0), n_runs=4,
                           run_interval_s=1800.0, run_duration_s=5.0, groundtruth_interval_s=900.0,
                           seed=5, groundtruth_noise_std_m=0.001)
    a, b = tmp_path / "a" / "manifest.json", tmp_path / "b" / "manifest.json"
    rio.write_deployment(dep, a)
    rio.write_deployment(dep, b)
    back = rio.parse_deployment(a)
    # the written record is the 6-decimal rendering of the original
    assert back == rio.parse_deployment(b)
    rio.write_deployment(back, tmp_path / "c" / "manifest.json")
    assert rio.parse_deployment(tmp_path / "c" / "manifest.json") == back
    for rel in ["manifest.json", "groundtruth.csv", "runs/run-0002.jsonl"]:
        assert (a.parent / rel).read_bytes() == (b.parent / rel).read_bytes()
    assert back.runs[1].n_measurements == dep.runs[1].n_measurements
    assert np.allclose(back.runs[1].points.y, dep.runs[1].points.y, atol=5e-7)


def test_estimates_round_trip(tmp_path):
    run = synth_run(SceneSpec(near_noise_rate=1.0), 3.0, 10.0, seed=2)
    est = estimate_run(run, FilterParams(window_w=1, y_min_m=0.5))
    path = tmp_path / "e.jsonl"
    rio.write_estimates([est, est], path)
    back = rio.read_estimates(path)
    assert len(back) == 2
    assert back[0].d_run_m == est.d_run_m and back[0].params == est.params


def test_chirp_config_round_trip(tmp_path):
    cfg = ChirpConfig(samples_per_chirp=128, chirps_per_frame=32)
    rio.write_chirp_config(cfg, tmp_path / "c.json")
    assert rio.read_chirp_config(tmp_path / "c.json") == cfg


def _write(path, lines):
    path.write_text("\n".join(lines) + "\n")
    return path


HEADER = ('{"run_id": "r", "sensor_label": "s", "start_time_s": 0.0, "measurement_rate_hz": 10.0, '
          '"imu_roll_deg": 0.0, "imu_pitch_deg": 0.0}')


def test_intensity_out_of_range_names_the_line(tmp_path):
    path = _write(tmp_path / "r.jsonl", [
        HEADER,
        '{"t": 0.0, "x": 0.0, "y": 1.0, "z": 0.0, "p": 0.5}',
        '{"t": 0.1, "x": 0.0, "y": 1.0, "z": 0.0, "p": 1.5}',
    ])
    with pytest.raises(ParseError) as info:
        rio.parse_run_file(path)
    assert info.value.line == 3
    assert ":3:" in str(info.value)


@pytest.mark.parametrize("lines,line", [
    ([], 1),
    (['{"run_id": "r"}'], 1),
    ([HEADER, '{"t": 0.1, "x": 0, "y": 1, "z": 0, "p": 0.5}', '{"t": 0.0, "x": 0, "y": 1, "z": 0, "p": 0.5}'], 3),
    ([HEADER, '{"t": 0.0, "x": 0, "y": 1}'], 2),
    ([HEADER, 'not json'], 2),
    ([HEADER, '{"t": 0.0, "x": "a", "y": 1, "z": 0, "p": 0.5}'], 2),
])
def test_malformed_run_files(tmp_path, lines, line):
    path = tmp_path / "r.jsonl"
    path.write_text("\n".join(lines) + ("\n" if lines else ""))
    with pytest.raises(ParseError) as info:
        rio.parse_run_file(path)
    assert info.value.line == line


def test_empty_body_is_an_empty_run(tmp_path):
    run = rio.parse_run_file(_write(tmp_path / "r.jsonl", [HEADER]))
    assert run.n_measurements == 0 and len(run.points) == 0


def test_empty_measurements_survive(tmp_path):
    run = RunRecord.from_measurements("r", 0.0, 10.0, [0.0, 0.1, 0.2],
                                      [PointCloud.empty(), PointCloud([0.0], [1.0], [0.0], [0.5], [0.1]),
                                       PointCloud.empty()])
    rio.write_run_file(run, tmp_path / "r.jsonl")
    assert rio.parse_run_file(tmp_path / "r.jsonl") == run


def test_groundtruth_parse_errors(tmp_path):
    bad = tmp_path / "gt.csv"
    bad.write_text("timestamp_s,depth_m\n0,1.0\n0,1.1\n")
    with pytest.raises(ParseError) as info:
        rio.parse_groundtruth(bad)
    assert info.value.line == 3
    bad.write_text("time,depth\n")
    with pytest.raises(ParseError):
        rio.parse_groundtruth(bad)


def test_manifest_with_missing_file(tmp_path):
    (tmp_path / "m.json").write_text('{"deployment_id": "d", "kind": "manual", "runs": ["nope.jsonl"], '
                                      '"groundtruth": "gt.csv"}')
    with pytest.raises(ParseError, match="nope.jsonl"):
        rio.parse_deployment(tmp_path / "m.json")


def test_results_table_carries_scientific_mse(tmp_path):
    rep = EvaluationReport(FilterParams(window_w=5, aggregation_F="median_y", x_max_m=1.0), 7.8e-6,
                           ["a", "b"], [0.0, 1800.0], [0.0, 0.001], [0.0, 0.0])
    path = tmp_path / "results.csv"
    rio.write_results_table([rep], path)
    text = path.read_text()
    assert text.splitlines()[0] == ",".join(rio.TABLE_COLUMNS)
    assert "7.800000e-06" in text
    row, = rio.read_results_table(path)
    assert row["mse_m2"] == 7.8e-6
    assert row["rmse_m"] == pytest.approx(math.sqrt(7.8e-6), rel=1e-6)
    assert row["aggregation_F"] == "median_y" and row["window_w"] == 5 and row["y_min_m"] is None


def test_default_grid_is_within_budget():
    cells = rio.default_grid().cells()
    assert 1 < len(cells) <= 500
    assert len(set(c.aggregation_F for c in cells)) == 4


def test_unwritable_path_is_os_error(tmp_path):
    with pytest.raises(OSError):
        rio.write_params(FilterParams(), tmp_path / "missing" / "p.json")


def test_plot_outputs(tmp_path):
    rep = EvaluationReport(FilterParams(), 0.0, ["a", "b", "c"], [0.0, 1800.0, 3600.0],
                           [0.0, 0.0, 0.0], [0.0, 0.0, 0.0])
    csv_path, svg_path = rio.write_plot(rep, tmp_path)
    rows = csv_path.read_text().splitlines()
    assert rows[1:] == ["a,0.000000,0.000000,0.000000", "b,1800.000000,0.000000,0.000000",
                        "c,3600.000000,0.000000,0.000000"]
    svg = svg_path.read_text()
    assert svg.startswith("<svg") and 'class="estimate"' in svg and 'class="groundtruth"' in svg
