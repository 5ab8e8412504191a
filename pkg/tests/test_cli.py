import json

import pytest

from radarlevel import SceneSpec, synth_run
from radarlevel import io as rio
from radarlevel.cli import main


@pytest.fixture
def deployment(tmp_path):
    manifest = tmp_path / "dep" / "manifest.json"
    code = main(["simulate", "--out", str(manifest), "--n-runs", "6", "--duration-s", "5",
                 "--level-change-m", "-0.03", "--seed", "3"])
    assert code == 0
    return manifest


def test_simulate_is_deterministic(tmp_path):
    for name in ("a.jsonl", "b.jsonl"):
        assert main(["simulate", "--out", str(tmp_path / name), "--duration-s", "3", "--seed", "9"]) == 0
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_estimate_noise_free_run(tmp_path, capsys):
    spec = SceneSpec(true_distance_m=1.13, surface_jitter_std_m=0.0)
    rio.write_run_file(synth_run(spec, 5.0, 10.0), tmp_path / "r.jsonl")
    (tmp_path / "p.json").write_text('{"window_w": 2, "aggregation_F": "median_y"}')
    code = main(["estimate", "--run", str(tmp_path / "r.jsonl"), "--params", str(tmp_path / "p.json")])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert abs(out["d_run_m"] - 1.13) <= 0.001


def test_tune_singleton_matches_evaluate(tmp_path, deployment, capsys):
    params = {"window_w": 1, "aggregation_F": "argmax_p_y", "y_min_m": 0.2}
    (tmp_path / "p.json").write_text(json.dumps(params))
    (tmp_path / "g.json").write_text(json.dumps({k: [v] for k, v in params.items()}))
    capsys.readouterr()
    assert main(["evaluate", "--manifest", str(deployment), "--params", str(tmp_path / "p.json"),
                 "--out", str(tmp_path / "eval.json")]) == 0
    evaluated = capsys.readouterr().out
    assert main(["tune", "--manifest", str(deployment), "--grid", str(tmp_path / "g.json"),
                 "--out", str(tmp_path / "tune")]) == 0
    tuned = capsys.readouterr().out
    assert tuned == evaluated
    assert (tmp_path / "tune" / "report.json").read_text() == (tmp_path / "eval.json").read_text()
    assert rio.read_params(tmp_path / "tune" / "best_params.json") == rio.read_params(tmp_path / "p.json")
    assert len(rio.read_results_table(tmp_path / "tune" / "results.csv")) == 1


def test_plot_constant_report_is_flat(tmp_path, capsys):
    manifest = tmp_path / "dep" / "manifest.json"
    (tmp_path / "scene.json").write_text(json.dumps(SceneSpec(surface_jitter_std_m=0.0).to_dict()))
    assert main(["simulate", "--scene", str(tmp_path / "scene.json"), "--out", str(manifest),
                 "--n-runs", "4", "--duration-s", "3"]) == 0
    assert main(["evaluate", "--manifest", str(manifest), "--out", str(tmp_path / "rep.json")]) == 0
    assert main(["plot", "--report", str(tmp_path / "rep.json"), "--out", str(tmp_path / "plot")]) == 0
    rows = (tmp_path / "plot" / "deltas.csv").read_text().splitlines()[1:]
    assert len(rows) == 4
    assert all(r.endswith(",0.000000,0.000000") for r in rows)
    svg = (tmp_path / "plot" / "deltas.svg").read_text()
    zero_y = svg.split('class="zero"')[1].split('y1="')[1].split('"')[0]
    for label in ("groundtruth", "estimate"):
        pts = svg.split(f'class="{label}"')[1].split('points="')[1].split('"')[0].split()
        assert {p.split(",")[1] for p in pts} == {zero_y}


def test_out_dir_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("RADARLEVEL_OUT_DIR", str(tmp_path))
    assert main(["simulate", "--duration-s", "2"]) == 0
    assert (tmp_path / "run.jsonl").is_file()


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["estimate"], ["estimate", "--run", "x", "--bogus"],
                                  ["simulate", "--seed", "notanint"]])
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "usage" in capsys.readouterr().err


def test_domain_and_io_errors_exit_1(tmp_path, capsys):
    assert main(["estimate", "--run", str(tmp_path / "missing.jsonl")]) == 1
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"run_id": "r"}\n')
    assert main(["estimate", "--run", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "error:" in err and "bad.jsonl:1" in err


def test_no_signal_exit_1(tmp_path, capsys):
    rio.write_run_file(synth_run(SceneSpec(), 2.0, 10.0), tmp_path / "r.jsonl")
    (tmp_path / "p.json").write_text('{"y_min_m": 9.0}')
    assert main(["estimate", "--run", str(tmp_path / "r.jsonl"), "--params", str(tmp_path / "p.json")]) == 1
    assert capsys.readouterr().out == ""


def test_help_exits_0(capsys):
    assert main(["--help"]) == 0
