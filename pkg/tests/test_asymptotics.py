import math

import numpy as np
import pytest

from polycycles.asymptotics import (
    DEFAULT_TAU_GRID,
    TauSpec,
    design_arc,
    displacement_scan,
    find_limit_cycle,
    find_reference_point,
    geometric_path,
    offline_arc,
    predicted_location,
    tau_conditions,
    verify_theorem_a,
    verify_theorem_b,
)
from polycycles.config import load_config, shipped_config
from polycycles.errors import (
    ConfigError,
    DegenerateExponent,
    DomainError,
    InsufficientSamples,
    NoSignChange,
    PathOutsideW,
    RankDeficient,
)
from polycycles.family import PlanePoint, parse_family
from polycycles.flow import Section
from polycycles.models import ClosedFormModel
from polycycles.returnmap import fit_power_law, log_grid
from polycycles.saddletools import PolycycleSkeleton


def two_param_model(grad_A=(1.0, 0.5), grad_r=(0.25, 1.0)):
    return ClosedFormModel(("x", "y"), (0.0, 0.0), 1.0, 1.0, -2.0, 0.5, grad_A, grad_r)


# find_limit_cycle


def test_poincare_map_cycle():
    f = parse_family("x' = -y + x*(1 - x^2 - y^2); y' = x + y*(1 - x^2 - y^2); params")
    ray = Section(PlanePoint(0.5, 0), (1, 0), +1, "ray")  # s = radius - 0.5
    sk = PolycycleSkeleton((), (ray,))
    cyc = find_limit_cycle(f, (), sk, bracket=(0.2, 0.9))
    assert cyc.s_star == pytest.approx(0.5, abs=1e-8)
    assert cyc.period == pytest.approx(2 * math.pi, abs=1e-8)
    # radial equation r' = r (1 - r^2): multiplier exp(-4 pi)
    assert cyc.multiplier_log == pytest.approx(-4 * math.pi, rel=1e-4)


def test_closed_form_cycle():
    m = ClosedFormModel.constant(2.0, 1.1, -1.0)
    cyc = find_limit_cycle(m, (1.1,), bracket=(1e-5, 1e-2))
    assert cyc.s_star == pytest.approx(2.0**-10, rel=1e-10)
    assert cyc.period == pytest.approx(-math.log(2.0**-10), rel=1e-10)
    assert cyc.residual <= 1e-10


def test_cycle_needs_sign_change():
    m = ClosedFormModel.constant(2.0, 1.1, -1.0)
    with pytest.raises(NoSignChange):
        find_limit_cycle(m, (1.1,), bracket=(1e-2, 1e-1))


# predicted_location


def test_predicted_location():
    assert predicted_location(2, 1.1) == pytest.approx(9.765625e-4, rel=1e-12)
    assert predicted_location(0.5, 0.9) == pytest.approx(9.765625e-4, rel=1e-12)
    with pytest.raises(DegenerateExponent):
        predicted_location(2, 1 + 1e-13)
    with pytest.raises(DomainError):
        predicted_location(2, 1.1, window_max=1e-4)


def test_displacement_scan_counts_one_root():
    m = ClosedFormModel.constant(2.0, 1.1, -1.0)
    pts, changes = displacement_scan(m, (1.1,), window=(1e-60, 1e-1), n=60)
    assert changes == 1 and len(pts) == 60


# Theorem A, offline


@pytest.mark.parametrize("A, T0, start", [(2.0, -1.0, 1.05), (0.5, -2.0, 0.95)])
def test_theorem_a_offline(A, T0, start):
    m = ClosedFormModel.constant(A, 1.0, T0, 0.3)
    star = m.point((1.0,))
    path = geometric_path(star, m.point((start,)), range(6))
    rep = verify_theorem_a(m, None, path, ref_mu=star, scan_window=(1e-300, 1e-1), scan_points=40)
    assert rep.u_target == pytest.approx(-T0 * abs(math.log(A)), rel=1e-14)
    assert abs(rep.u_limit - rep.u_target) <= 1e-6
    assert abs(rep.v_limit - rep.v_target) <= 1e-6
    # v_k is exact at every point of this model
    assert all(p.v == pytest.approx(abs(math.log(A)), rel=1e-10) for p in rep.points)
    assert all(p.sign_changes == 1 for p in rep.points)
    assert rep.verdict() == "PASS"


def test_period_law_stabilizes():
    m = ClosedFormModel.constant(2.0, 1.0, -1.0, 0.3)
    star = m.point((1.0,))
    rep = verify_theorem_a(m, None, geometric_path(star, m.point((1.1,)), range(6)), ref_mu=star)
    us = [p.u for p in rep.points]
    changes = [abs(b - a) / abs(a) for a, b in zip(us, us[1:])]
    assert all(b < a for a, b in zip(changes, changes[1:]))


@pytest.mark.parametrize("A, start", [(2.0, 0.95), (0.5, 1.05)])
def test_theorem_a_outside_existence_region(A, start):
    m = ClosedFormModel.constant(A, 1.0, -1.0)
    star = m.point((1.0,))
    with pytest.raises(PathOutsideW):
        verify_theorem_a(m, None, geometric_path(star, m.point((start,)), range(3)), ref_mu=star)


def test_theorem_a_path_must_approach():
    m = ClosedFormModel.constant(2.0, 1.0, -1.0)
    star = m.point((1.0,))
    with pytest.raises(PathOutsideW):
        verify_theorem_a(m, None, geometric_path(star, m.point((1.05,)), [2, 1, 0]), ref_mu=star)


def test_geometric_path_and_reference_point():
    m = two_param_model()
    star = find_reference_point(m, None, (-1.0, 0.2), (1.0, 0.2))
    assert m.graphic(star) == pytest.approx(1.0, abs=1e-13)
    path = geometric_path(star, star.replace(x=star["x"] + 0.4), range(4))
    assert [p["x"] - star["x"] for p in path] == pytest.approx([0.4, 0.2, 0.1, 0.05], rel=1e-12)
    with pytest.raises(NoSignChange):
        find_reference_point(m, None, (0.5, 0.2), (1.0, 0.2))


# tau conditions


@pytest.mark.parametrize("l", [-0.9, -0.5, -0.1])
def test_tau_power_in_range_passes(l):
    v = tau_conditions(TauSpec.power(l))
    assert v.verdict == "PASS" and all(v.conditions.values())


@pytest.mark.parametrize("l", [-1.0, 0.0, 0.5])
def test_tau_power_out_of_range_fails(l):
    assert tau_conditions(TauSpec.power(l)).verdict == "FAIL"


def test_tau_inverse_fails_on_first_condition():
    v = tau_conditions(TauSpec.power(-1.0))
    assert not v.conditions["alpha_tau"]


def test_tau_log_fails_on_third_condition():
    v = tau_conditions(TauSpec.neg_log())
    assert v.verdict == "FAIL" and not v.conditions["log_over_tau"]


def test_tau_parse():
    assert TauSpec.parse("alpha^-0.5").tau(1e-4) == pytest.approx(100.0, rel=1e-14)
    assert TauSpec.parse("-log(alpha)").tau(math.exp(-3)) == pytest.approx(3.0, rel=1e-14)
    with pytest.raises(ConfigError):
        TauSpec.parse("sin(alpha)")


@pytest.mark.parametrize("l", [-0.9, -0.5, -0.1])
@pytest.mark.parametrize("L", [1, 5])
def test_arc_ansatz_is_flat(l, L):
    # log of alpha**-L (1 + h)**(-1/alpha) on the tail where the conditions are judged
    tau = TauSpec.power(l)
    tail = [a for a in DEFAULT_TAU_GRID if a <= DEFAULT_TAU_GRID[-1] * 100]
    logs = [-L * math.log(a) - math.log1p(a * tau.tau(a)) / a for a in tail]
    assert all(b < a for a, b in zip(logs, logs[1:]))
    assert logs[-1] < -1000


def test_arc_ansatz_flat_on_arc_grid():
    tau = TauSpec.power(-0.5)
    for L in (1, 5):
        logs = [-L * math.log(a) - math.log1p(a * tau.tau(a)) / a for a in log_grid(1e-8, 1e-2, 13)[::-1][::-1]]
        assert all(b < a for a, b in zip(logs, logs[1:]))


# Theorem B, offline


def test_offline_arc_ratio_identity():
    m = ClosedFormModel.constant(2.0, 1.0, -2.0)
    tau = TauSpec.power(-0.5)
    for a in offline_arc(m, tau, log_grid(1e-6, 1e-2, 9)):
        assert a.ratio == pytest.approx(2.0 * math.log1p(a.h) / a.h, rel=1e-12)


@pytest.mark.parametrize("T0", [-1.0, -2.0])
def test_offline_theorem_b_limit(T0):
    m = ClosedFormModel.constant(2.0, 1.0, T0, 0.3)
    arc = offline_arc(m, TauSpec.power(-0.5), log_grid(1e-4, 1e-2, 9))
    rep = verify_theorem_b(arc, T0)
    assert rep.limit_error <= 1e-3
    assert rep.verdict() == "PASS"


def test_theorem_b_needs_samples():
    m = ClosedFormModel.constant(2.0, 1.0, -1.0)
    with pytest.raises(InsufficientSamples):
        verify_theorem_b(offline_arc(m, TauSpec.power(-0.5), [1e-2, 1e-3, 1e-4]), -1.0)
    with pytest.raises(InsufficientSamples):
        verify_theorem_b(offline_arc(m, TauSpec.power(-0.5), log_grid(1e-3, 1e-2, 6)), -1.0)


def test_design_arc_recovers_preimage():
    m = two_param_model()
    arc = design_arc(m, None, (0.0, 0.0), TauSpec.power(-0.5), free_params=(0, 1), newton_tol=1e-12)
    M = np.array([[0.25, 1.0], [1.0, 0.5]])  # rows: grad r, grad A
    for a in arc:
        assert a.ok
        assert max(a.newton_residuals) <= 1e-12
        exact = np.linalg.solve(M, [a.alpha, a.h])
        assert np.allclose(a.mu.components, exact, rtol=0, atol=1e-12)
        assert a.ansatz_error <= 1e-9
    assert verify_theorem_b(arc, -2.0).limit_error <= 1e-3


def test_design_arc_rank_deficient():
    with pytest.raises(RankDeficient):
        design_arc(two_param_model(grad_A=(1.0, 2.0), grad_r=(0.5, 1.0)), None, (0.0, 0.0),
                   TauSpec.power(-0.5), free_params=("x", "y"))


def test_design_arc_needs_center_seed():
    with pytest.raises(DomainError):
        design_arc(two_param_model(), None, (0.1, 0.0), TauSpec.power(-0.5), free_params=(0, 1))


class _SaturatingModel(ClosedFormModel):
    # r cannot exceed 1.02, so the arc has no solution for larger alpha
    def graphic(self, mu):
        return 1 + 0.02 * math.tanh(50 * (super().graphic(mu) - 1))


def test_design_arc_flags_divergence_and_continues():
    m = _SaturatingModel(("x", "y"), (0.0, 0.0), 1.0, 1.0, -2.0, 0.5, (1.0, 0.5), (0.25, 1.0))
    arc = design_arc(m, None, (0.0, 0.0), TauSpec.power(-0.5), alpha_grid=[0.05, 0.03, 0.01, 0.005, 0.001],
                     free_params=(0, 1))
    assert [a.status for a in arc] == ["ok", "ok", "ok", "failed:NewtonDiverged", "failed:NewtonDiverged"]


# Kolmogorov


@pytest.fixture(scope="module")
def kolmogorov():
    cfg = load_config(shipped_config("kolmogorov.toml"))
    return cfg, log_grid(1e-12, 1e-8, 12)


def test_kolmogorov_reference_point(kolmogorov):
    cfg, _ = kolmogorov
    star = find_reference_point(cfg.family, cfg.skeleton, (0.1, -2, 1.5), (0.1, -2, 2.5), cfg.integrator)
    assert star["q"] == pytest.approx(2.0, abs=1e-10)


def test_kolmogorov_unique_cycle_near_prediction(kolmogorov):
    cfg, grid = kolmogorov
    mu = (0.1, -2.0, 2.004)
    model_r = (-1 - mu[1]) / (mu[2] - 1)
    from polycycles.models import as_model
    model = as_model(cfg.family, cfg.skeleton, cfg.integrator)
    fit = fit_power_law(model.samples(mu, grid), noise_floor=cfg.fit_noise_floor)
    assert (model_r - 1) * (fit.A_hat - 1) > 0
    s_pred = predicted_location(fit.A_hat, model_r)
    cyc = find_limit_cycle(model, mu, bracket=(s_pred * 1e-3, min(s_pred * 1e3, 1e-2)))
    assert cyc.s_star == pytest.approx(s_pred, rel=0.1)
    _, changes = displacement_scan(model, mu, window=(cyc.s_star * 1e-3, 1e-2), n=15)
    assert changes == 1
