import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from hermite_onestep.systems import (
    SYSTEMS,
    AeroParams,
    State,
    build_system,
    eom_residual,
    make_aeroelastic,
    make_double_well,
    make_duffing,
    make_free_particle,
    make_sho,
)

AERO = dict(m_T=1.0, m_W=0.5, x_alpha=0.25, I_alpha=0.25, b=1.0, a=-0.4, k_h=1.0, k_a0=1.5,
            k_a1=0.3, k_a2=10.0, c_h=0.3, c_alpha=0.05, rho=0.1, U=0.4, C_L_alpha=6.28,
            C_M_alpha=1.0)

ALL_SYSTEMS = {
    "free_particle": make_free_particle(2.0),
    "sho": make_sho(1.7),
    "double_well": make_double_well(),
    "duffing": make_duffing(0.1),
    "aeroelastic": make_aeroelastic(AeroParams(**AERO)),
}

states = st.lists(st.floats(-1.5, 1.5), min_size=4, max_size=4)


def _qv(sys, vals):
    d = sys.dim
    return np.array(vals[:d]), np.array(vals[2:2 + d])


def test_state_validation():
    s = State(0, [1.0], [0.0])
    assert s.dim == 1 and s.q.dtype == float
    with pytest.raises(ValueError):
        State(0, [1.0, 2.0], [0.0])
    with pytest.raises(ValueError):
        State(0, [np.nan], [0.0])
    with pytest.raises(ValueError):
        s.q[0] = 2.0


@pytest.mark.parametrize("name", ALL_SYSTEMS)
@given(vals=states)
def test_gradient_consistency(name, vals):
    sys = ALL_SYSTEMS[name]
    q, v = _qv(sys, vals)
    h = 1e-6
    for i in range(sys.dim):
        e = np.eye(sys.dim)[i] * h
        dq = (sys.lagrangian(q + e, v) - sys.lagrangian(q - e, v)) / (2 * h)
        dv = (sys.lagrangian(q, v + e) - sys.lagrangian(q, v - e)) / (2 * h)
        assert dq == pytest.approx(sys.dL_dq(q, v)[i], rel=1e-6, abs=1e-7)
        assert dv == pytest.approx(sys.dL_dv(q, v)[i], rel=1e-6, abs=1e-7)


@pytest.mark.parametrize("name", ALL_SYSTEMS)
@given(vals=states)
def test_hessian_and_force_jacobian_consistency(name, vals):
    sys = ALL_SYSTEMS[name]
    q, v = _qv(sys, vals)
    h = 1e-6
    H = sys.potential_hessian(q)
    for i in range(sys.dim):
        e = np.eye(sys.dim)[i] * h
        col = (sys.potential_grad(q + e) - sys.potential_grad(q - e)) / (2 * h)
        assert_allclose(H[:, i], col, rtol=1e-6, atol=1e-7)
    if sys.force_jacobian is not None:
        Fq, Fv = sys.force_jacobian(q, v)
        for i in range(sys.dim):
            e = np.eye(sys.dim)[i] * h
            assert_allclose(Fq[:, i], (sys.force(q + e, v) - sys.force(q - e, v)) / (2 * h), atol=1e-7)
            assert_allclose(Fv[:, i], (sys.force(q, v + e) - sys.force(q, v - e)) / (2 * h), atol=1e-7)


@pytest.mark.parametrize("name", ALL_SYSTEMS)
@given(vals=states)
def test_power_balance(name, vals):
    # along an exact solution dE/dt = f . v
    sys = ALL_SYSTEMS[name]
    q, v = _qv(sys, vals)
    M = sys.mass_matrix(q)
    a = np.linalg.solve(M, sys.force(q, v) - sys.potential_grad(q))
    assert_allclose(eom_residual(sys, q, v, a), 0.0, atol=1e-12)
    dE = v @ M @ a + sys.potential_grad(q) @ v
    assert dE == pytest.approx(sys.force(q, v) @ v, abs=1e-12)


@given(x=st.floats(-2, 2), v=st.floats(-2, 2))
def test_duffing_dissipation(x, v):
    sys = make_duffing(0.3)
    assert sys.force([x], [v]) @ np.array([v]) == pytest.approx(-0.3 * v * v)
    assert -0.3 * v * v <= 0.0


@pytest.mark.parametrize("name", ALL_SYSTEMS)
def test_lagrangian_is_separable(name):
    sys = ALL_SYSTEMS[name]
    q, v = np.full(sys.dim, 0.3), np.full(sys.dim, -0.7)
    split = 0.5 * v @ sys.mass_matrix(q) @ v - sys.potential(q)
    assert sys.lagrangian(q, v) == pytest.approx(split, abs=1e-12)


def test_eom_examples():
    assert_allclose(eom_residual(make_free_particle(), [0.3], [1.0], [0.0]), 0.0)
    assert_allclose(eom_residual(make_double_well(), [1.0], [0.0], [-1.0]), 0.0, atol=1e-15)
    delta, alpha, beta = 0.2, 1.0, 0.5
    sys = make_duffing(delta, alpha, beta)
    assert_allclose(eom_residual(sys, [1.0], [0.0], [-alpha - beta]), 0.0, atol=1e-15)
    w = 1.3
    assert_allclose(eom_residual(make_sho(w), [1.0], [0.0], [-w * w]), 0.0, atol=1e-15)


def test_eom_dimension_mismatch():
    with pytest.raises(ValueError):
        eom_residual(make_sho(), [1.0, 2.0], [0.0], [0.0])


def test_double_well_values():
    dw = make_double_well()
    assert dw.energy(np.array([0.74]), np.array([0.0])) == pytest.approx(-0.12386712, abs=1e-8)
    assert dw.energy(np.array([0.0]), np.array([1.0])) == pytest.approx(0.5)
    assert_allclose(dw.potential_grad(np.array([0.0])), 0.0)


def test_duffing_defaults_give_double_well():
    x = np.linspace(-1.5, 1.5, 11)[:, None]
    assert_allclose(make_duffing(0.0).potential(x), make_double_well().potential(x), atol=1e-15)
    assert make_duffing(0.1).force(np.array([5.0]), np.array([2.0]))[0] == pytest.approx(-0.2)
    assert make_duffing(0.0).conservative and not make_duffing(0.1).conservative


def test_sho_energy():
    sys = make_sho(2.0)
    assert sys.energy(np.array([0.5]), np.array([1.0])) == pytest.approx(0.5 + 0.5 * 4 * 0.25)


def test_aeroelastic_equilibrium_and_alpha_eff():
    p = AeroParams(**AERO)
    sys = make_aeroelastic(p)
    z = np.zeros(2)
    assert_allclose(sys.force(z, z), 0.0)
    assert_allclose(eom_residual(sys, z, z, z), 0.0)
    assert p.alpha_eff(np.array([0.0, 0.1]), z) == pytest.approx(0.1)
    assert np.linalg.eigvalsh(p.mass()).min() > 0


def test_aeroelastic_forces_use_alpha_eff():
    p = AeroParams(**AERO)
    sys = make_aeroelastic(p)
    q, v = np.array([0.1, 0.05]), np.array([0.2, -0.3])
    ae = p.alpha_eff(q, v)
    f = sys.force(q, v)
    assert f[0] == pytest.approx(-p.c_h * v[0] + p.rho * p.U**2 * p.b * p.C_L_alpha * ae)
    assert f[1] == pytest.approx(-p.c_alpha * v[1] + p.rho * p.U**2 * p.b**2 * p.C_M_alpha * ae)


@pytest.mark.parametrize("change", [dict(m_T=0.0), dict(b=-1.0), dict(rho=0.0), dict(U=-1.0),
                                    dict(I_alpha=0.01, x_alpha=1.0), dict(k_h=np.inf)])
def test_aeroelastic_invalid_parameters(change):
    with pytest.raises(ValueError):
        AeroParams(**{**AERO, **change})


def test_aeroelastic_has_no_defaults():
    with pytest.raises(TypeError):
        AeroParams(m_T=1.0)


@pytest.mark.parametrize("factory", [lambda: make_sho(0.0), lambda: make_double_well(-1.0),
                                     lambda: make_free_particle(0.0)])
def test_invalid_factory_arguments(factory):
    with pytest.raises(ValueError):
        factory()


def test_registry():
    assert set(SYSTEMS) == {"free_particle", "sho", "double_well", "duffing", "aeroelastic"}
    assert build_system("duffing", {"delta": 0.1}).params["alpha"] == -1.0
    assert build_system("aeroelastic", AERO).dim == 2
    with pytest.raises(KeyError, match="valid systems"):
        build_system("pendulum")
    with pytest.raises(KeyError, match="delta"):
        build_system("duffing", {})
    with pytest.raises(KeyError, match="does not take"):
        build_system("sho", {"mass": 1.0})
    with pytest.raises(KeyError, match="k_h"):
        build_system("aeroelastic", {k: v for k, v in AERO.items() if k != "k_h"})
