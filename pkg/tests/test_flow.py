import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polycycles.errors import (
    BlowUp,
    ConfigError,
    NoCrossing,
    StepLimitExceeded,
    TangentialCrossing,
)
from polycycles.family import ChartKind, PlanePoint, builtin_kolmogorov, parse_family, to_chart
from polycycles.flow import (
    IntegratorConfig,
    Section,
    chain_sections,
    flow_to_section,
    integrate,
    switch_chart_policy,
)

ROT = parse_family("x' = -y; y' = x; params")
EXIT_X1 = Section(PlanePoint(1, 0), (0, 1), 0, "x=1")


def saddle(lam):
    return parse_family(f"x' = x; y' = -{lam}*y; params")


# integrate


def test_exponential_decay():
    tr = integrate(parse_family("x' = -x; y' = -y; params"), (), PlanePoint(1, 0), 1.0)
    assert abs(tr.final.a - math.exp(-1)) <= 1e-10
    assert tr.t_final == 1.0


def test_rotation_period():
    tr = integrate(ROT, (), PlanePoint(1, 0), 2 * math.pi)
    assert math.hypot(tr.final.a - 1, tr.final.b) <= 1e-8


def test_dense_output_matches_closed_form():
    tr = integrate(ROT, (), PlanePoint(1, 0), 3.0)
    for t in np.linspace(0, 3, 31):
        p = tr.at(t)
        assert p.a == pytest.approx(math.cos(t), abs=1e-9)
        assert p.b == pytest.approx(math.sin(t), abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(x0=st.floats(1e-4, 1.0), y0=st.floats(0.1, 3.0))
def test_saddle_first_integral(x0, y0):
    tr = integrate(saddle(1), (), PlanePoint(x0, y0), 6.0)
    c = x0 * y0
    pts = [to_chart(p, "affine") for p in tr.points]
    assert max(abs(p.a * p.b / c - 1) for p in pts) <= 1e-9


def test_convergence_order():
    steps, errs = [], []
    for tol in [1e-5, 3e-6, 1e-6, 3e-7, 1e-7, 3e-8, 1e-8]:
        tr = integrate(ROT, (), PlanePoint(1, 0), 2 * math.pi, IntegratorConfig(rel_tol=tol, abs_tol=tol))
        steps.append(tr.step_count)
        errs.append(math.hypot(tr.final.a - 1, tr.final.b))
    assert all(b < a for a, b in zip(errs, errs[1:]))
    slope = np.polyfit(np.log(steps), np.log(errs), 1)[0]
    assert slope <= -4


@pytest.mark.parametrize("field", ["x' = y; y' = -x - x^3; params", "x' = x - x*y; y' = x*y - y; params"])
def test_reversibility(field):
    f = parse_family(field)
    p = PlanePoint(0.7, 0.4)
    there = integrate(f, (), p, 50.0)
    back = integrate(f, (), there.final, -50.0)
    assert math.hypot(back.final.a - p.a, back.final.b - p.b) <= 1e-7


def test_blow_up_without_projective_charts():
    with pytest.raises(BlowUp):
        integrate(parse_family("x' = x^2; y' = -y; params"), (), PlanePoint(1, 1), 2.0,
                  IntegratorConfig(allow_projective=False))


def test_step_limit():
    with pytest.raises(StepLimitExceeded):
        integrate(ROT, (), PlanePoint(1, 0), 100.0, IntegratorConfig(max_steps=10))


def test_radial_flow_through_infinity_chart():
    tr = integrate(parse_family("x' = x; y' = y; params"), (), PlanePoint(0.3, 0.2), 10.0)
    assert tr.charts_visited == (ChartKind.AFFINE, ChartKind.PROJECTIVE_X)
    end = to_chart(tr.final, "affine")
    assert end.a == pytest.approx(0.3 * math.exp(10), rel=1e-9)
    assert end.b == pytest.approx(0.2 * math.exp(10), rel=1e-9)


# config


@pytest.mark.parametrize("kw", [dict(rel_tol=-1), dict(rel_tol=0.5), dict(abs_tol=-1e-20), dict(rel_tol=1e-15),
                                dict(max_steps=0), dict(max_time=-1.0), dict(chart_switch_radius=0)])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        IntegratorConfig(**kw)


def test_pure_relative_control_allowed():
    assert IntegratorConfig(abs_tol=0.0).abs_tol == 0.0
    assert IntegratorConfig(abs_tol=1e-20).abs_tol == 1e-20


# flow_to_section


def test_rotation_quarter_turn():
    ev = flow_to_section(ROT, (), PlanePoint(1, 0), Section(PlanePoint(0, 1), (0, 1)))
    assert abs(ev.s_out) <= 1e-9
    assert ev.transit_time == pytest.approx(math.pi / 2, abs=1e-9)
    assert abs(ev.g_residual) <= 1e-12


def test_tangent_section_rejected():
    with pytest.raises(TangentialCrossing):
        flow_to_section(ROT, (), PlanePoint(1, 0), Section(PlanePoint(0, 1), (1, 0)))


def test_no_crossing():
    with pytest.raises(NoCrossing):
        flow_to_section(ROT, (), PlanePoint(1, 0), Section(PlanePoint(5, 1), (0, 1)),
                        IntegratorConfig(max_time=100))


@pytest.mark.parametrize("s, s_out, t", [(0.1, 0.01, 2.302585092994046), (0.01, 1e-4, math.log(100))])
def test_linear_saddle_examples(s, s_out, t):
    ev = flow_to_section(saddle(2), (), PlanePoint(s, 1), EXIT_X1)
    assert ev.s_out == pytest.approx(s_out, rel=1e-9)
    assert ev.transit_time == pytest.approx(t, rel=1e-9)
    assert ev.transit_time > 0


def test_orientation_filter():
    up = Section(PlanePoint(1, 0), (1, 0), +1)
    down = Section(PlanePoint(1, 0), (1, 0), -1)
    # from (1, 0.1) the circle of radius sqrt(1.01) crosses y = 0 downward on the left first
    assert flow_to_section(ROT, (), PlanePoint(1, 0.1), down).s_out == pytest.approx(-1 - math.hypot(1, 0.1), abs=1e-9)
    ev = flow_to_section(ROT, (), PlanePoint(1, 0.1), up)
    assert ev.s_out == pytest.approx(math.hypot(1, 0.1) - 1, abs=1e-9)
    assert ev.transit_time == pytest.approx(2 * math.pi - math.atan2(0.1, 1), abs=1e-9)


@pytest.mark.parametrize("s", [1e-4, 1e-3, 1e-2])
def test_time_additivity(s):
    f = saddle(2)
    mid = Section(PlanePoint(1e-2 * 5, 0), (0, 1), 0, "mid")
    first = flow_to_section(f, (), PlanePoint(s, 1), mid)
    second = flow_to_section(f, (), mid.point(first.s_out), EXIT_X1)
    whole = flow_to_section(f, (), PlanePoint(s, 1), EXIT_X1)
    total = whole.transit_time
    assert abs(total - first.transit_time - second.transit_time) <= 1e-8 * total
    assert abs(whole.s_out - second.s_out) <= 1e-8


def test_chain_sections_matches_single_shot():
    f = saddle(2)
    entry = Section(PlanePoint(0, 1), (1, 0), 0, "y=1")
    mid = Section(PlanePoint(0.05, 0), (0, 1), 0, "mid")
    s_out, t, _ = chain_sections(f, (), 1e-3, [entry, mid, EXIT_X1])
    assert s_out == pytest.approx(1e-6, rel=1e-8)
    assert t == pytest.approx(-math.log(1e-3), rel=1e-8)


def test_backward_flow_to_section():
    ev = flow_to_section(saddle(2), (), PlanePoint(1, 1e-4), Section(PlanePoint(0, 1), (1, 0)), backward=True)
    assert ev.s_out == pytest.approx(1e-2, rel=1e-9)
    assert ev.transit_time == pytest.approx(math.log(100), rel=1e-9)


@pytest.mark.parametrize("radius", [0.05, 0.1, 0.3])
def test_transit_time_chart_independent(radius):
    K = builtin_kolmogorov()
    target = Section(PlanePoint(1, 0, "px"), (0, 1), -1)
    ref = flow_to_section(K, (0.05, -2, 2), PlanePoint(1, 1e-3), target, IntegratorConfig(chart_switch_radius=0.2))
    ev = flow_to_section(K, (0.05, -2, 2), PlanePoint(1, 1e-3), target, IntegratorConfig(chart_switch_radius=radius))
    assert ChartKind.PROJECTIVE_X in ev.charts_visited
    assert ev.transit_time == pytest.approx(ref.transit_time, rel=1e-7)
    assert ev.s_out == pytest.approx(ref.s_out, rel=1e-7)


# switch_chart_policy


def test_policy_examples():
    cfg = IntegratorConfig(chart_switch_radius=0.1)
    assert switch_chart_policy(PlanePoint(0.5, 0.5), cfg) is ChartKind.AFFINE
    assert switch_chart_policy(PlanePoint(2, 100), cfg) is ChartKind.PROJECTIVE_Y
    assert switch_chart_policy(PlanePoint(100, -2), cfg) is ChartKind.PROJECTIVE_X


def _count_switches(points, cfg):
    cur, switches = None, 0
    for p in points:
        nxt = switch_chart_policy(p, cfg, cur)
        if cur is not None and nxt is not cur:
            switches += 1
        cur = nxt
    return switches


def test_outgoing_ray_switches_once():
    # a ray along the diagonal with jitter: the PX/PY tie must not cause flapping
    cfg = IntegratorConfig(chart_switch_radius=0.2)
    radii = np.logspace(-1, 3, 400)
    pts = [PlanePoint(r, r * (1 + 1e-9 * (-1) ** k)) for k, r in enumerate(radii)]
    assert _count_switches(pts, cfg) == 1


def test_band_round_trip_switches_once_each_way():
    cfg = IntegratorConfig(chart_switch_radius=0.2)
    radii = np.concatenate([np.linspace(4.8, 5.3, 50), np.linspace(5.3, 4.8, 50)])
    wobble = [r * (1 + 0.02 * math.sin(7 * k)) for k, r in enumerate(radii)]
    pts = [PlanePoint(r, 0.3) for r in wobble]
    assert _count_switches(pts, cfg) <= 2
