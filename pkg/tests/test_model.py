import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kswave.errors import DiffusionExceedsChi, NonPositiveParameter, SingularState
from kswave.model import (
    ModelParams,
    PhasePoint,
    fast_rhs,
    full_slow_rhs_scaled,
    layer_jacobian,
    on_critical_manifold,
    slow_rhs_scaled,
    validate,
)

pos = st.floats(0.1, 10.0)


def test_validate_accepts_reference_parameters(base):
    assert validate(base) is base
    assert base.d_u == pytest.approx(0.1) and base.d_w == 0.1


def test_validate_rejects_diffusion_above_chi(base):
    with pytest.raises(DiffusionExceedsChi):
        validate(base.replace(eps=2.5), exact=True)
    validate(base.replace(eps=2.5))  # fine outside the closed-form context


@pytest.mark.parametrize("name", ["chi", "K", "c", "u_r", "A"])
def test_validate_names_offending_field(base, name):
    with pytest.raises(NonPositiveParameter) as info:
        validate(base.replace(**{name: 0.0}))
    assert info.value.field == name


def test_validate_rejects_negative_mu(base):
    with pytest.raises(NonPositiveParameter):
        validate(base.replace(mu=-1.0))


def test_fast_rhs_hand_values(base):
    assert fast_rhs((1, 0, 0, 2), base) == (0, 0, 0, 0)
    assert fast_rhs((1, 1, 2, 2), base) == pytest.approx((0, 0, 0, 0.2))
    assert fast_rhs((1, 0, 1, 2), base) == pytest.approx((0, 1, -2, 0.1))


def test_fast_rhs_refuses_u_zero(base):
    with pytest.raises(SingularState):
        fast_rhs((0.0, 0.0, 0.0, 0.0), base)
    with pytest.raises(SingularState):
        layer_jacobian((1e-301, 0, 0, 0), base)


def test_layer_jacobian_spectra(base):
    ev = np.sort(np.linalg.eigvals(layer_jacobian((1, 0, 0, 2), base)).real)
    np.testing.assert_allclose(ev, [-2, -2, -2], atol=1e-12)
    ev = np.sort(np.linalg.eigvals(layer_jacobian((1, 1, 2, 2), base)).real)
    np.testing.assert_allclose(ev, [-1 - np.sqrt(5), -2, -1 + np.sqrt(5)], atol=1e-12)
    ev4 = np.sort(np.linalg.eigvals(layer_jacobian((2, 2, 4, 4), base)).real)
    np.testing.assert_allclose(ev4, ev, atol=1e-12)


def test_layer_jacobian_against_finite_differences():
    rng = np.random.default_rng(7)
    for _ in range(100):
        chi, K, c, mu = rng.uniform(0.1, 10, 4)
        p = ModelParams(chi=chi, K=K, c=c, mu=mu, eps=rng.uniform(0, 1))
        x = np.array([rng.uniform(0.1, 5), rng.uniform(-5, 5), rng.uniform(0, 5), rng.uniform(0, 10)])
        J = layer_jacobian(x, p)
        fd = np.empty((3, 3))
        for j in range(3):
            h = 1e-6 * max(1.0, abs(x[j]))
            xp, xm = x.copy(), x.copy()
            xp[j] += h
            xm[j] -= h
            fd[:, j] = (np.array(fast_rhs(xp, p))[:3] - np.array(fast_rhs(xm, p))[:3]) / (2 * h)
        scale = np.abs(J).max()
        np.testing.assert_allclose(fd, J, rtol=1e-6, atol=1e-6 * scale)


@settings(max_examples=200, deadline=None)
@given(chi=pos, K=pos, c=pos, mu=pos, ut=st.floats(1e-3, 100.0))
def test_fast_rhs_vanishes_on_critical_set(chi, K, c, mu, ut):
    p = ModelParams(chi=chi, K=K, c=c, mu=mu, eps=0.3)
    for pt in [(ut / c, 0, 0, ut), (ut / c, ut / chi, c * ut / (chi * K), ut)]:
        d = fast_rhs(pt, p)
        assert np.allclose(d[:3], 0, atol=1e-12 * max(1.0, ut) * max(c, chi, 1 / mu, K, 1 / K))
        assert on_critical_manifold(pt, p, tol=1e-9)


@given(w=st.floats(0, 1e3), eps=st.floats(0, 10), u=st.floats(1e-6, 1e3), v=st.floats(-1e3, 1e3))
def test_u_tilde_monotone_for_nonnegative_w(w, eps, u, v):
    assert fast_rhs((u, v, w, 1.0), ModelParams(eps=eps))[3] >= 0


def test_six_variable_form_reduces_with_zero_fluxes(base):
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = rng.uniform(0.1, 3, 4)
        six = full_slow_rhs_scaled(x, base)
        np.testing.assert_array_equal(six[:4], slow_rhs_scaled(x, base))
        np.testing.assert_array_equal(six[4:], 0.0)
    # nonzero conserved fluxes change the vector field
    assert not np.allclose(full_slow_rhs_scaled(x, base, v_tilde=0.5)[:4], slow_rhs_scaled(x, base))


def test_slow_and_fast_systems_agree(base):
    x = (0.7, 0.3, 1.2, 1.5)
    fast = np.array(fast_rhs(x, base))
    scaled = slow_rhs_scaled(x, base)
    eps, mu = base.eps, base.mu
    # d/dz = (1/eps) d/dy
    np.testing.assert_allclose(scaled, fast / eps * np.array([mu * eps, mu * eps, eps, 1.0]))


def test_phase_point_roundtrip():
    p = PhasePoint(1.0, 2.0, 3.0, 4.0)
    np.testing.assert_array_equal(p.as_array(), [1, 2, 3, 4])
