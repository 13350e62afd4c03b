import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aggflow.ch import (ChStepProblem, ch_residual, ch_solve, chempot_diagnostics, mu_from_phi)
from aggflow.errors import DomainError
from aggflow.grid import MacGrid, integral
from aggflow.model import CoefficientProfile, ModelParams, PotentialSpec
from aggflow.stepper import free_energy
from aggflow.verify import newton_tail_ratio, smooth_ch_problem

from conftest import random_noslip

LOG = ModelParams()


def psi_prime(s, theta=1.0, theta_c=2.0):
    return 0.5 * theta * math.log((1 + s) / (1 - s)) - theta_c * s


def test_mu_uniform_examples():
    g = MacGrid(6, 5)
    zero = np.zeros(g.cell_shape)
    assert np.all(mu_from_phi(g, LOG, zero, zero) == 0.0)
    c = np.full(g.cell_shape, 0.3)
    # 0.5 ln(1.3/0.7) - 0.6
    np.testing.assert_allclose(mu_from_phi(g, LOG, c, c), -0.2904803957968883, rtol=1e-13)


def test_mu_rejects_outside_domain():
    g = MacGrid(4, 4)
    c = np.zeros(g.cell_shape)
    c[0, 0] = 1.0
    with pytest.raises(DomainError):
        mu_from_phi(g, LOG, c, np.zeros(g.cell_shape))


def test_problem_rejects_pure_phase():
    g = MacGrid(4, 4)
    with pytest.raises(DomainError):
        ChStepProblem(g, LOG, np.full(g.cell_shape, 1.0), g.zero_faces(), 0.1)
    with pytest.raises(ValueError):
        ChStepProblem(g, LOG, np.zeros(g.cell_shape), g.zero_faces(), 0.0)


def test_residual_uniform_steady():
    g = MacGrid(5, 6)
    c = np.full(g.cell_shape, -0.4)
    pb = ChStepProblem(g, LOG, c, g.zero_faces(), 0.01)
    assert np.max(np.abs(ch_residual(pb, c))) <= 1e-14


def test_residual_integral_identity(rng):
    # advection and diffusion terms are in conservation form
    g = MacGrid(7, 6, 1.4, 1.2)
    phi_k = rng.uniform(-0.5, 0.5, g.cell_shape)
    phi = phi_k + 0.05 * rng.standard_normal(g.cell_shape)
    p = ModelParams(mobility=CoefficientProfile.table([-1, 1], [0.5, 2.0]))
    pb = ChStepProblem(g, p, phi_k, random_noslip(g, rng), 0.02)
    r = ch_residual(pb, phi)
    assert integral(g, r) == pytest.approx(integral(g, phi - phi_k) / 0.02, rel=1e-10, abs=1e-11)


def test_residual_loop_oracle(rng):
    # direct cell-by-cell evaluation on a 4x4 grid, a = 1, constant mobility m
    g = MacGrid(4, 4, 2.0, 1.0)
    hx, hy = g.hx, g.hy
    m = 0.8
    p = ModelParams(mobility=CoefficientProfile.const(m))
    phi_k = rng.uniform(-0.5, 0.5, g.cell_shape)
    phi = phi_k + 0.05 * rng.standard_normal(g.cell_shape)
    v = random_noslip(g, rng)
    h = 0.1
    pb = ChStepProblem(g, p, phi_k, v, h)

    def lap(c):
        out = np.zeros_like(c)
        for i in range(4):
            for j in range(4):
                for di, dj, d in ((1, 0, hx), (-1, 0, hx), (0, 1, hy), (0, -1, hy)):
                    a, b = i + di, j + dj
                    if 0 <= a < 4 and 0 <= b < 4:
                        out[i, j] += (c[a, b] - c[i, j]) / d ** 2
        return out

    kt = 1.0
    dpsi = np.vectorize(psi_prime)
    mu = -lap(phi) + dpsi(phi) + kt * phi - 0.5 * kt * (phi + phi_k)
    adv = np.zeros_like(phi)
    for i in range(4):
        for j in range(4):
            fe = v.u[i + 1, j] * (0.5 * (phi_k[i, j] + phi_k[i + 1, j]) if i < 3 else 0.0)
            fw = v.u[i, j] * (0.5 * (phi_k[i, j] + phi_k[i - 1, j]) if i > 0 else 0.0)
            fn = v.w[i, j + 1] * (0.5 * (phi_k[i, j] + phi_k[i, j + 1]) if j < 3 else 0.0)
            fs = v.w[i, j] * (0.5 * (phi_k[i, j] + phi_k[i, j - 1]) if j > 0 else 0.0)
            adv[i, j] = (fe - fw) / hx + (fn - fs) / hy
    expected = (phi - phi_k) / h + adv - m * lap(mu)
    np.testing.assert_allclose(mu_from_phi(g, p, phi, phi_k), mu, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(ch_residual(pb, phi), expected, rtol=1e-11, atol=1e-10)


def test_fixed_point_one_iteration():
    g = MacGrid(8, 8)
    c = np.full(g.cell_shape, 0.2)
    res = ch_solve(ChStepProblem(g, LOG, c, g.zero_faces(), 0.1))
    assert res.newton_iters == 1
    np.testing.assert_array_equal(res.phi, c)
    np.testing.assert_allclose(res.mu, psi_prime(0.2), rtol=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.floats(-0.95, 0.95))
def test_uniform_states_are_fixed_points(c):
    g = MacGrid(4, 4)
    phi = np.full(g.cell_shape, c)
    res = ch_solve(ChStepProblem(g, LOG, phi, g.zero_faces(), 0.5))
    assert res.newton_iters == 1 and np.all(res.phi == phi)


def _tanh_state(g):
    x, _ = g.cell_centers()
    return 0.9 * np.tanh((x - 0.5 * g.Lx) / 0.3)


def test_mass_and_confinement_over_20_steps():
    g = MacGrid(32, 4, 3.2, 0.4)
    phi = _tanh_state(g)
    m0 = integral(g, phi)
    E = [free_energy(g, LOG, phi)]
    for _ in range(20):
        res = ch_solve(ChStepProblem(g, LOG, phi, g.zero_faces(), 0.01))
        phi = res.phi
        assert abs(integral(g, phi) - m0) <= 1e-12 * g.area
        assert np.max(np.abs(phi)) < 1.0
        E.append(free_energy(g, LOG, phi))
    # without flow the free energy alone is nonincreasing
    assert all(b <= a + 1e-12 * abs(E[0]) for a, b in zip(E, E[1:]))


def test_confinement_near_pure_phases():
    g = MacGrid(16, 16, 1.6, 1.6)
    x, y = g.cell_centers()
    phi = 0.999 * np.tanh((np.hypot(x - 0.8, y - 0.8) - 0.4) / 0.05)
    for _ in range(3):
        res = ch_solve(ChStepProblem(g, LOG, phi, g.zero_faces(), 0.05))
        assert res.max_phi < 1.0 and res.min_phi > -1.0
        phi = res.phi


def test_newton_superlinear_tail():
    res = ch_solve(smooth_ch_problem(LOG))
    hist = res.residual_history
    assert len(hist) >= 3
    assert all(b < a for a, b in zip(hist, hist[1:]))
    assert newton_tail_ratio(hist) <= 10.0


def test_shift_enters_mu_only():
    g = MacGrid(4, 4)
    c = np.full(g.cell_shape, 0.1)
    shift = np.full(g.cell_shape, 0.25)
    np.testing.assert_allclose(mu_from_phi(g, LOG, c, c, shift), psi_prime(0.1) - 0.25, rtol=1e-13)


def test_diagnostics_examples():
    g = MacGrid(6, 6, 2.0, 2.0)
    c = np.full(g.cell_shape, 0.3)
    mu = mu_from_phi(g, LOG, c, c)
    d = chempot_diagnostics(g, LOG, c, mu, c)
    assert d["mean_mu"] == pytest.approx(psi_prime(0.3), rel=1e-13)
    assert d["abs_int_mu"] == pytest.approx(abs(psi_prime(0.3)) * 4.0, rel=1e-13)
    assert d["l2_grad_phi"] == 0.0 and d["l2_grad_mu"] == 0.0
    convex = ModelParams(potential=PotentialSpec(theta=2.0, theta_c=1.0))
    z = np.zeros(g.cell_shape)
    assert chempot_diagnostics(g, convex, z, z, z)["l2_psi0_prime"] == 0.0
