import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kswave.errors import BlowUp, DegenerateDenominator, FitIllConditioned, NegativeUTilde
from kswave.model import ModelParams, fast_rhs
from kswave.ode import Event, integrate
from kswave.perturbed import (
    S_A_EPS,
    S_R_EPS,
    convergence_study,
    invariance_residual,
    perturbed_point,
    profile_distance,
    shoot_heteroclinic,
)
from kswave.singular import S_A, S_R, branch_point


def test_perturbed_point_reference_values(base):
    pt = perturbed_point(S_R_EPS, 1.0, base, 0.1)
    np.testing.assert_allclose(pt, (0.475, 0.5, 2 / 1.9, 1.0), rtol=1e-15)
    assert perturbed_point(S_A_EPS, 3.0, base, 0.3) == branch_point(S_A, 3.0, base)
    np.testing.assert_allclose(perturbed_point(S_R_EPS, 3.0, base, 0.0), branch_point(S_R, 3.0, base), rtol=1e-15)


def test_perturbed_point_guards(base):
    with pytest.raises(DegenerateDenominator):
        perturbed_point(S_R_EPS, 1.0, base, 2.0)
    with pytest.raises(NegativeUTilde):
        perturbed_point(S_R_EPS, -1.0, base, 0.1)
    with pytest.raises(ValueError):
        perturbed_point("S_x", 1.0, base, 0.1)


@pytest.mark.parametrize("ut", [0.1, 1.0, 10.0])
@pytest.mark.parametrize("eps", [0.01, 0.1, 0.5])
def test_sr_eps_is_invariant(base, ut, eps):
    assert invariance_residual(S_R_EPS, ut, base, eps) < 1e-12
    assert invariance_residual(S_A_EPS, ut, base, eps) == 0.0


def test_invariance_negative_control(base):
    u, v, w, ut = perturbed_point(S_R_EPS, 1.0, base, 0.1)
    assert invariance_residual(S_R_EPS, 1.0, base, 0.1, point=(u, v, 1.01 * w, ut)) > 1e-3


@settings(max_examples=300, deadline=None)
@given(
    chi=st.floats(0.5, 10),
    K=st.floats(0.1, 10),
    c=st.floats(0.1, 10),
    mu=st.floats(0.0, 10),
    frac=st.floats(0.0, 0.9),
    ut=st.floats(0.1, 10),
)
def test_invariance_random_parameters(chi, K, c, mu, frac, ut):
    p = ModelParams(chi=chi, K=K, c=c, mu=mu)
    assert invariance_residual(S_R_EPS, ut, p, frac * chi) < 1e-12


def test_trajectory_stays_on_sr_eps(base):
    eps = 0.1
    p = base.replace(eps=eps)
    start = np.array(perturbed_point(S_R_EPS, 1.0, p, eps))
    tr = integrate(lambda _, x: fast_rhs(x, p), start, (0.0, 5.0), rtol=1e-12, atol=1e-14)
    ut = tr.y[:, 3]
    expected = np.array([perturbed_point(S_R_EPS, s, p, eps) for s in ut])
    assert np.max(np.abs(tr.y - expected)) < 1e-7
    # slow drift u_tilde_y = eps c u_tilde / (chi - eps)
    np.testing.assert_allclose(ut[-1], np.exp(eps * 2 / 1.9 * 5.0), rtol=1e-8)


def test_event_localizes_jump_level(base):
    eps = 0.1
    p = base.replace(eps=eps)
    start = np.array(perturbed_point(S_R_EPS, 1.0, p, eps))
    target = p.c * p.u_r
    ev = Event(lambda _, x: x[3] - target, "jump", True, 1)
    tr = integrate(lambda _, x: fast_rhs(x, p), start, (0.0, 100.0), rtol=1e-12, atol=1e-14, events=[ev])
    assert tr.event_name == "jump"
    assert abs(tr.y[-1, 3] - target) < 1e-10


def test_shoot_layer_limit_lands_on_u_r(base):
    r = shoot_heteroclinic(base, epsilon=0.0)
    assert r.profile.coordinate == "y"
    assert abs(r.u_end - base.u_r) < 1e-9
    np.testing.assert_allclose(r.profile.u_tilde, base.c * base.u_r, rtol=1e-14)


def test_shoot_wrong_side_blows_up(base):
    with pytest.raises(BlowUp):
        shoot_heteroclinic(base, epsilon=1e-2, delta=-1e-8)


def test_shoot_profile_is_physical(base):
    r = shoot_heteroclinic(base, epsilon=1e-2)
    assert np.all(r.profile.u > 0) and np.all(r.profile.w >= 0)
    assert abs(r.profile.w[-1]) < 1e-8
    assert r.end_state_gap >= 0 and r.end_state_gap < 0.05
    assert r.speed_offset == pytest.approx(base.c * r.end_state_gap / base.u_r)
    assert np.all(np.diff(r.profile.z) > 0)


def test_shoot_is_independent_of_start_and_offset(base):
    a = shoot_heteroclinic(base, epsilon=3e-2)
    b = shoot_heteroclinic(base, epsilon=3e-2, u_tilde_start=0.3, delta=1e-7)
    assert abs(a.u_end - b.u_end) < 1e-6


@pytest.fixture(scope="module")
def sweep():
    p = ModelParams(chi=2.0, K=1.0, c=2.0, u_r=1.0, A=4.0, mu=1.0)
    return convergence_study(p, [1e-1, 3e-2, 1e-2, 3e-3])


@pytest.mark.slow
def test_convergence_order_is_one(sweep):
    assert np.all(np.diff(sweep.epsilons) < 0)
    assert np.all(np.diff(sweep.gaps) < 0)
    assert np.all(np.diff(sweep.distances) < 0)
    assert abs(sweep.slope - 1.0) <= 0.3
    assert len(sweep.rows()) == 4


@pytest.mark.slow
def test_profiles_converge_to_singular_orbit(sweep, base):
    # u distance also includes the profile near the jump
    for r, d in zip(sweep.results, sweep.distances):
        assert d == profile_distance(r, base)
    assert sweep.distances[-1] < 0.05


def test_convergence_preconditions(base):
    with pytest.raises(FitIllConditioned):
        convergence_study(base, [1e-2])
    with pytest.raises(FitIllConditioned):
        convergence_study(base, [1e-1, 8e-2, 5e-2])


def test_convergence_parallel_matches_serial(base):
    eps = [1e-1, 3e-2, 1e-2]
    serial = convergence_study(base, eps)
    parallel = convergence_study(base, eps, workers=2)
    np.testing.assert_array_equal(serial.gaps, parallel.gaps)
    assert serial.slope == parallel.slope
