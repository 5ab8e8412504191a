import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from radarlevel import (
    ConfigurationError,
    FilterParams,
    PointCloud,
    RadarPoint,
    TiltToleranceError,
    WindowError,
    filter_window,
    project_xy,
    synth_run,
    tilt_compensate,
    window_measurements,
)
from radarlevel.filtering import apply_tilt, window_spans

from strategies import clouds, filter_params

PROPS = settings(max_examples=100, deadline=None)


def _keyset(cloud):
    return sorted(zip(cloud.x.tolist(), cloud.y.tolist(), cloud.p.tolist(), cloud.t.tolist()))


def _is_subset(small, big):
    rest = list(_keyset(big))
    for row in _keyset(small):
        if row not in rest:
            return False
        rest.remove(row)
    return True


# tilt

def test_zero_tilt_is_identity():
    c = PointCloud.from_points([(0.3, 1.2, -0.4, 0.5, 0.1), (-1.0, 2.0, 0.0, 1.0, 0.2)])
    assert tilt_compensate(c, 0.0, 0.0) == c


def test_tilt_round_trip_unit_point():
    c = PointCloud.from_points([(0.0, 1.0, 0.0, 0.9)])
    back = tilt_compensate(apply_tilt(c, 0.0, 30.0), 0.0, 30.0)
    assert np.allclose(back.xyz(), [[0.0, 1.0, 0.0]], atol=1e-12, rtol=0)


def test_boresight_point_pitch_30():
    a = math.radians(30)
    c = PointCloud.from_points([(0.0, math.cos(a), math.sin(a), 0.9)])
    out = tilt_compensate(c, 0.0, 30.0)
    assert out.y[0] == pytest.approx(1.0, abs=1e-12)
    assert out.z[0] == pytest.approx(0.0, abs=1e-12)


def test_tilt_tolerance():
    c = PointCloud.from_points([(0.0, 1.0, 0.0, 0.9)])
    with pytest.raises(TiltToleranceError):
        tilt_compensate(c, 0.0, 31.0)
    with pytest.raises(TiltToleranceError):
        tilt_compensate(c, -30.5, 0.0)
    tilt_compensate(c, -30.0, 30.0)


@PROPS
@given(clouds(), st.floats(-30, 30), st.floats(-30, 30))
def test_tilt_preserves_norms_and_round_trips(cloud, roll, pitch):
    out = tilt_compensate(cloud, roll, pitch)
    n0 = np.linalg.norm(cloud.xyz(), axis=1)
    n1 = np.linalg.norm(out.xyz(), axis=1)
    assert np.allclose(n1, n0, rtol=1e-12, atol=1e-15)
    assert np.array_equal(out.p, cloud.p) and np.array_equal(out.t, cloud.t)
    back = tilt_compensate(apply_tilt(cloud, roll, pitch), roll, pitch)
    assert np.allclose(back.xyz(), cloud.xyz(), rtol=0, atol=1e-12)


# projection

def test_project_xy():
    c = PointCloud.from_points([RadarPoint(1, 2, 3, 0.5)])
    assert list(project_xy(c)) == [RadarPoint(1.0, 2.0, 0.0, 0.5, 0.0)]
    assert len(project_xy(PointCloud.empty())) == 0


@PROPS
@given(clouds())
def test_project_xy_idempotent(cloud):
    once = project_xy(cloud)
    assert project_xy(once) == once
    assert np.array_equal(once.x, cloud.x) and np.array_equal(once.y, cloud.y)


# windowing

def _run(n, spec_rate=10.0):
    from radarlevel import SceneSpec
    return synth_run(SceneSpec(surface_jitter_std_m=0.01, near_noise_rate=1.0), n / spec_rate, spec_rate, seed=n)


def test_window_counts():
    run = _run(5)
    assert len(window_measurements(run, 2)) == 4
    assert len(window_measurements(run, 0)) == 5
    three = _run(3)
    (only,) = window_measurements(three, 3)
    assert len(only) == len(three.points)


def test_window_too_large():
    with pytest.raises(WindowError):
        window_measurements(_run(3), 4)


@PROPS
@given(st.integers(1, 40), st.integers(0, 40))
def test_window_spans_cover_and_overlap(n, w):
    assume(w <= n)
    spans = window_spans(n, w)
    covered = set()
    for a, b in spans:
        covered.update(range(a, b + 1))
        assert b - a + 1 == max(w, 1)
    assert covered == set(range(1, n + 1))
    if w >= 1:
        assert len(spans) == n - w + 1
        for (a0, b0), (a1, b1) in zip(spans, spans[1:]):
            assert len(set(range(a0, b0 + 1)) & set(range(a1, b1 + 1))) == w - 1


def test_window_contents_are_consecutive_measurements():
    run = _run(6)
    wins = window_measurements(run, 3)
    for i, cloud in enumerate(wins):
        expected = PointCloud.concat(run.measurements[i:i + 3])
        assert cloud == expected


# filter

def test_filter_example():
    pts = PointCloud.from_points([
        (0.5, 1.2, 0.0, 0.9), (2.0, 1.2, 0.0, 0.9), (0.5, 0.05, 0.0, 0.9), (0.5, 1.2, 0.0, 0.1),
    ])
    out = filter_window(pts, FilterParams(x_max_m=1.0, y_min_m=0.1, p_min=0.5))
    assert list(out.points) == [RadarPoint(0.5, 1.2, 0.0, 0.9, 0.0)]


def test_filter_absolute_x():
    pts = PointCloud.from_points([(-0.8, 1.0, 0.0, 0.5), (0.8, 1.0, 0.0, 0.5), (-0.1, 1.0, 0.0, 0.5)])
    out = filter_window(pts, FilterParams(x_min_m=0.5, x_max_m=1.0))
    assert sorted(out.points.x.tolist()) == [-0.8, 0.8]


@PROPS
@given(clouds())
def test_no_bounds_keeps_non_negative_y(cloud):
    out = filter_window(cloud, FilterParams())
    assert len(out.points) == int((cloud.y >= 0).sum())


def test_top_percent_keeps_exactly_the_top_quarter():
    g = np.random.default_rng(4)
    p = g.permutation(np.linspace(0.01, 0.99, 100))
    pts = PointCloud(g.uniform(-1, 1, 100), g.uniform(0.5, 2, 100), np.zeros(100), p, np.zeros(100))
    out = filter_window(pts, FilterParams(p_top_percent=25))
    # oracle: sort and take the 25 largest
    assert sorted(out.points.p.tolist()) == sorted(np.sort(p)[-25:].tolist())


def test_i_max_tie_break():
    pts = PointCloud.from_points([
        (0.0, 1.5, 0.0, 0.9, 0.0), (0.0, 1.2, 0.0, 0.9, 0.2), (0.0, 1.2, 0.0, 0.9, 0.1), (0.0, 0.8, 0.0, 0.5, 0.0),
    ])
    out = filter_window(pts, FilterParams(i_max=2))
    assert sorted(zip(out.points.y.tolist(), out.points.t.tolist())) == [(1.2, 0.1), (1.2, 0.2)]
    out = filter_window(pts, FilterParams(i_max=1))
    assert list(zip(out.points.y.tolist(), out.points.t.tolist())) == [(1.2, 0.1)]


def test_window_span_recorded():
    out = filter_window(PointCloud.empty(), FilterParams(window_w=5), index=3)
    assert out.source_measurement_span == (3, 7)
    assert len(out.points) == 0


@pytest.mark.parametrize("kwargs", [
    dict(p_min=0.5, p_top_percent=10), dict(x_min_m=2.0, x_max_m=1.0), dict(y_min_m=1.0, y_max_m=0.5),
    dict(i_max=0), dict(window_w=-1), dict(p_min=1.5), dict(p_top_percent=0), dict(aggregation_F="max_y"),
])
def test_filter_params_invariants(kwargs):
    with pytest.raises((ConfigurationError, ValueError)):
        FilterParams(**kwargs)


def test_filter_params_dict_round_trip():
    p = FilterParams(window_w=5, aggregation_F="mean_y", x_max_m=1.0, i_max=25)
    d = p.to_dict()
    assert d == {"window_w": 5, "aggregation_F": "mean_y", "x_max_m": 1.0, "i_max": 25}
    assert FilterParams.from_dict(d) == p


@PROPS
@given(clouds(), filter_params())
def test_filter_output_is_subset(cloud, params):
    out = filter_window(cloud, params).points
    assert _is_subset(out, cloud)
    assert np.all(out.y >= 0)


@PROPS
@given(clouds(), filter_params(allow_top_percent=False))
def test_filter_idempotent(cloud, params):
    once = filter_window(cloud, params).points
    twice = filter_window(once, params).points
    assert twice == once


_TIGHTEN = {
    "y_min_m": lambda v: (v or 0.0) + 0.3,
    "y_max_m": lambda v: (v if v is not None else 3.0) - 0.3,
    "x_max_m": lambda v: (v if v is not None else 2.0) - 0.3,
    "p_min": lambda v: min((v or 0.0) + 0.2, 1.0),
}


@PROPS
@given(clouds(), filter_params(allow_top_percent=False, allow_i_max=False), st.sampled_from(sorted(_TIGHTEN)))
def test_tightening_a_bound_shrinks_the_set(cloud, params, field):
    new = _TIGHTEN[field](getattr(params, field))
    try:
        tighter = params.with_(**{field: new})
    except ConfigurationError:
        assume(False)
    loose = filter_window(cloud, params).points
    tight = filter_window(cloud, tighter).points
    assert _is_subset(tight, loose)


@PROPS
@given(clouds(), filter_params(), st.sampled_from(sorted(_TIGHTEN) + ["i_max"]))
def test_tightening_never_grows_count(cloud, params, field):
    if field == "i_max":
        new = max((params.i_max or 11) - 1, 1)
    else:
        new = _TIGHTEN[field](getattr(params, field))
    if field == "p_min" and params.p_top_percent is not None:
        assume(False)
    try:
        tighter = params.with_(**{field: new})
    except ConfigurationError:
        assume(False)
    assume(params.p_top_percent is None or len(set(cloud.p.tolist())) == len(cloud))
    assert len(filter_window(cloud, tighter).points) <= len(filter_window(cloud, params).points)


def test_integer_bounds_are_stored_as_floats():
    a = FilterParams(p_top_percent=75, y_min_m=1)
    assert a == FilterParams(p_top_percent=75.0, y_min_m=1.0)
    assert isinstance(a.to_dict()["p_top_percent"], float)
