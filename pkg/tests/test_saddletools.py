import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polycycles.errors import ConfigError, NoConvergence, NotASaddle
from polycycles.family import PlanePoint, builtin_kolmogorov, jacobian, kolmogorov_as_printed, parse_family
from polycycles.flow import Section
from polycycles.saddletools import (
    Connection,
    GraphicNumber,
    PolycycleSkeleton,
    SaddleSeed,
    check_invariance,
    find_equilibrium,
    graphic_number,
    no_bifurcation_guard,
    saddle_data,
)

MU0 = (0.0, -2.0, 2.0)
PHI = (1 + math.sqrt(5)) / 2
SEEDS = (
    SaddleSeed(PlanePoint(0, 0), "origin"),
    SaddleSeed(PlanePoint(0, 0, "px"), "end_x"),
    SaddleSeed(PlanePoint(0, 0, "py"), "end_y"),
)
K = builtin_kolmogorov()


def kolmogorov_r(mu):
    # eigenvalue product of the three corner saddles, worked out by hand
    _, p, q = mu
    return (-1 - p) / (q - 1)


# find_equilibrium


def test_origin_from_nearby_seed():
    p = find_equilibrium(K, MU0, PlanePoint(0.1, 0.1))
    assert abs(p.a) <= 1e-12 and abs(p.b) <= 1e-12


def test_golden_equilibrium():
    p = find_equilibrium(kolmogorov_as_printed(), MU0, PlanePoint(0, 1.6))
    assert p.a == 0.0
    assert p.b == pytest.approx(PHI, abs=1e-12)


def test_far_seed_fails():
    with pytest.raises(NoConvergence):
        find_equilibrium(K, MU0, PlanePoint(50, -70))


# saddle_data


@pytest.mark.parametrize("mu", [MU0, (0.4, -3.0, 1.2), (-1.0, -1.5, 7.0)])
def test_origin_unit_ratio(mu):
    d = saddle_data(K, mu, PlanePoint(0, 0))
    assert (d.unstable_eig, d.stable_eig, d.ratio) == (1.0, -1.0, 1.0)


def test_linear_ratio():
    d = saddle_data(parse_family("x' = 2*x; y' = -3*y; params"), (), PlanePoint(0, 0))
    assert d.ratio == 1.5


def test_golden_saddle():
    P = kolmogorov_as_printed()
    d = saddle_data(P, MU0, PlanePoint(0, PHI))
    assert d.unstable_eig == pytest.approx(3.618033988749895, rel=1e-12)
    assert d.stable_eig == pytest.approx(-4.23606797749979, rel=1e-12)
    assert d.ratio == pytest.approx(1.170820393249937, rel=1e-12)
    J = np.asarray(jacobian(P, "affine", MU0, d.location))
    for lam, v in ((d.unstable_eig, d.unstable_dir), (d.stable_eig, d.stable_dir)):
        assert np.allclose(J @ np.array(v), lam * np.array(v), atol=1e-8)


def test_center_is_not_a_saddle():
    with pytest.raises(NotASaddle):
        saddle_data(parse_family("x' = -y; y' = x; params"), (), PlanePoint(0, 0))


def test_node_is_not_a_saddle():
    with pytest.raises(NotASaddle):
        saddle_data(parse_family("x' = -x; y' = -2*y; params"), (), PlanePoint(0, 0))


@settings(max_examples=30, deadline=None)
@given(c=st.floats(0.01, 100.0), mu=st.tuples(st.floats(-1, 1), st.floats(-3, -1.1), st.floats(1.1, 3)))
def test_ratio_invariant_under_time_rescaling(c, mu):
    text = "x' = c*x*(1 + x + x^2 + a*x*y + p*y^2); y' = c*y*(-1 - y + q*x^2 + a*x*y - y^2); params a,p,q,c"
    scaled = parse_family(text)
    for seed in SEEDS:
        loc = seed.location
        r1 = saddle_data(K, mu, loc).ratio
        r2 = saddle_data(scaled, (*mu, c), loc).ratio
        assert r2 == pytest.approx(r1, rel=1e-12)


# graphic_number


def test_graphic_number_products():
    two = parse_family("x' = 1.2*x; y' = -1.44*y; params")
    one = parse_family("x' = x; y' = -0.9*y; params")
    g = graphic_number(two, (), [SaddleSeed(PlanePoint(0, 0), "a")])
    assert g.value == pytest.approx(1.2, rel=1e-15)
    r1 = saddle_data(two, (), PlanePoint(0, 0)).ratio
    r2 = saddle_data(one, (), PlanePoint(0, 0)).ratio
    assert r1 * r2 == pytest.approx(1.08, rel=1e-14)


def test_kolmogorov_center_graphic():
    g = graphic_number(K, MU0, SEEDS)
    assert abs(g.value - 1) <= 1e-8
    assert g.labels == ("origin", "end_x", "end_y")


@settings(max_examples=25, deadline=None)
@given(mu=st.tuples(st.floats(-1, 1), st.floats(-4, -1.05), st.floats(1.05, 4)))
def test_kolmogorov_graphic_closed_form(mu):
    g = graphic_number(K, mu, SEEDS)
    assert g.value == pytest.approx(kolmogorov_r(mu), rel=1e-12)
    assert g.value == pytest.approx(math.prod(g.factors), rel=1e-14)
    assert g.value > 0


@settings(max_examples=25, deadline=None)
@given(mu=st.tuples(st.floats(-1, 1), st.floats(-4, -1.05), st.floats(1.05, 4)), shift=st.integers(0, 2))
def test_graphic_invariant_under_cyclic_relabeling(mu, shift):
    rolled = SEEDS[shift:] + SEEDS[:shift]
    assert graphic_number(K, mu, rolled).value == graphic_number(K, mu, SEEDS).value


def test_graphic_continuous_along_segment():
    q0 = 2.0
    slope = (1 + MU0[1]) / (q0 - 1) ** 2  # d r / d q
    diffs = []
    for delta in (1e-2, 1e-3, 1e-4, 1e-5):
        lo = graphic_number(K, (0.1, -2, q0), SEEDS).value
        hi = graphic_number(K, (0.1, -2, q0 + delta), SEEDS).value
        diffs.append(abs((hi - lo) / delta - slope))
    assert all(b < a for a, b in zip(diffs, diffs[1:]))
    assert diffs[-1] <= 1e-4


# check_invariance


@pytest.mark.parametrize("line", ["x-axis", "y-axis", "line-at-infinity"])
def test_kolmogorov_invariant_lines(line):
    assert check_invariance(K, (0.3, -1.7, 2.2), line)


def test_rotation_axis_not_invariant():
    assert not check_invariance(parse_family("x' = -y; y' = x; params"), (), "x-axis")


def test_radial_field_infinity_not_invariant():
    # x Q - y P vanishes identically, so infinity is a line of equilibria of the
    # compactified field; after removing that factor the line is crossed
    assert not check_invariance(parse_family("x' = x; y' = y; params"), (), "line-at-infinity")


def test_unknown_line():
    with pytest.raises(ConfigError):
        check_invariance(K, MU0, "diagonal")


# no_bifurcation_guard


def test_guard():
    assert no_bifurcation_guard(1.3) is not None
    assert no_bifurcation_guard(1.0) is None
    assert no_bifurcation_guard(0.999, threshold=1e-3) is None
    g = GraphicNumber(1.3, (1.3,))
    assert "1.3" in no_bifurcation_guard(g).message


# skeleton


def test_skeleton_rejects_unknown_connection_label():
    sec = Section(PlanePoint(0, 1), (1, 0))
    with pytest.raises(ConfigError, match="nowhere"):
        PolycycleSkeleton(SEEDS, (sec,), (Connection("origin", "nowhere"),))


def test_skeleton_finite_saddle():
    sec = Section(PlanePoint(0, 1), (1, 0))
    assert PolycycleSkeleton(SEEDS, (sec,)).has_finite_saddle
    assert not PolycycleSkeleton(SEEDS[1:], (sec,)).has_finite_saddle
