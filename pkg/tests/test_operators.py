"""Sparse assemblies against matrix-free kernels and dense oracles."""

import numpy as np
import pytest

from aggflow import grid as G
from aggflow import model
from aggflow.ch import ChStepProblem, ch_jacobian, ch_residual
from aggflow.grid import FaceField, MacGrid
from aggflow.model import CoefficientProfile, ModelParams, PotentialSpec, rho_of_phi
from aggflow.ns import (MomentumForm, NsStepProblem, assemble_momentum, compute_Jtilde,
                        rotation_matrix)
from aggflow.operators import operators_for

from conftest import random_noslip


def dense_from(op, apply):
    """Dense matrix whose j-th column is apply(unit face field j), packed."""
    cols = []
    for j in range(op.n):
        e = np.zeros(op.n)
        e[j] = 1.0
        cols.append(op.pack(apply(op.unpack(e))))
    return np.column_stack(cols)


def test_sparse_operators_match_kernels(rng):
    g = MacGrid(7, 5, 1.3, 0.8)
    op = operators_for(g)
    v, w = random_noslip(g, rng), random_noslip(g, rng)
    p = rng.standard_normal(g.cell_shape)
    eta = rng.uniform(0.5, 2.0, g.cell_shape)
    x = op.pack(v)
    np.testing.assert_allclose(op.div @ x, G.div_faces(g, v).ravel(), atol=1e-12)
    np.testing.assert_allclose(op.grad @ p.ravel(), op.pack(G.grad_cells(g, p)), atol=1e-12)
    np.testing.assert_allclose(op.skew(w) @ x, op.pack(G.skew_convection(g, w, v)), atol=1e-12)
    np.testing.assert_allclose(op.viscous(eta) @ x, op.pack(G.viscous_force(g, v, eta)),
                               rtol=1e-12, atol=1e-10)
    k = G.interp_center_to_face(g, rng.uniform(0.5, 2.0, g.cell_shape))
    np.testing.assert_allclose((op.laplacian(op.pack(k)) @ p.ravel()).reshape(g.cell_shape),
                               G.laplace_neumann(g, p, k), atol=1e-10)
    assert op.unpack(x).max_abs() == v.max_abs()
    np.testing.assert_array_equal(op.pack(op.unpack(x)), x)


def _momentum_problem(rng, form, rho=(1.0, 3.0)):
    g = MacGrid(4, 4, 1.0, 1.0)
    params = ModelParams(rho1=rho[0], rho2=rho[1],
                         viscosity=CoefficientProfile.table([-1, 0, 1], [1.0, 2.0, 0.5]),
                         mobility=CoefficientProfile.const(1.5))
    phi_k = rng.uniform(-0.8, 0.8, g.cell_shape)
    phi_new = np.clip(phi_k + 0.05 * rng.standard_normal(g.cell_shape), -0.9, 0.9)
    mu = rng.standard_normal(g.cell_shape)
    rho_k, rho_new = rho_of_phi(phi_k, params), rho_of_phi(phi_new, params)
    jt = compute_Jtilde(g, phi_k, mu, params) if form is MomentumForm.AGG else g.zero_faces()
    return NsStepProblem(g, params, rho_k, rho_new, phi_k, mu, jt, random_noslip(g, rng),
                         random_noslip(g, rng), h=0.01, form=form)


def test_agg_momentum_dense_oracle(rng):
    pb = _momentum_problem(rng, MomentumForm.AGG)
    g, h = pb.grid, pb.h
    op = operators_for(g)
    sys_ = assemble_momentum(pb)
    rk = G.interp_center_to_face(g, pb.rho_k)
    rn = G.interp_center_to_face(g, pb.rho_new)
    eta = pb.params.viscosity.value(pb.phi_k)
    flux = pb.v_transport.scaled(rk.u, rk.w) + pb.Jtilde

    def apply(e):
        time = e.scaled((rn.u + rk.u) / (2 * h), (rn.w + rk.w) / (2 * h))
        return time + G.skew_convection(g, flux, e) + G.viscous_force(g, e, eta)

    dense = dense_from(op, apply)
    A = sys_.A.toarray()
    assert np.max(np.abs(A - dense)) <= 1e-10 * np.max(np.abs(dense))
    T = sys_.transport.toarray()
    V = sys_.viscous.toarray()
    assert np.max(np.abs(T + T.T)) <= 1e-14 * np.max(np.abs(T))
    assert np.max(np.abs(V - V.T)) <= 1e-14 * np.max(np.abs(V))
    assert np.linalg.eigvalsh(V).min() >= -1e-12 * np.abs(V).max()
    cap = FaceField(G.interp_center_to_face(g, pb.mu).u * G.grad_cells(g, pb.phi_k).u,
                    G.interp_center_to_face(g, pb.mu).w * G.grad_cells(g, pb.phi_k).w)
    rhs = op.pack(pb.v_k.scaled(rk.u / h, rk.w / h) + cap)
    np.testing.assert_allclose(sys_.rhs, rhs, rtol=1e-13, atol=1e-12)


def test_agg_momentum_energy_identity(rng):
    # testing the velocity block with v gives the kinetic telescoping exactly
    pb = _momentum_problem(rng, MomentumForm.AGG)
    g, h = pb.grid, pb.h
    op = operators_for(g)
    sys_ = assemble_momentum(pb)
    v = random_noslip(g, rng)
    x, xk = op.pack(v), op.pack(pb.v_k)
    rk = op.pack(G.interp_center_to_face(g, pb.rho_k))
    rn = op.pack(G.interp_center_to_face(g, pb.rho_new))
    lhs = (x @ (sys_.time @ x) - x @ (rk * xk) / h) * g.vol
    expected = 0.5 * np.sum(rn * x * x - rk * xk * xk + rk * (x - xk) ** 2) * g.vol / h
    assert lhs == pytest.approx(expected, rel=1e-12)
    assert abs(x @ (sys_.transport @ x)) <= 1e-13 * np.abs(sys_.transport).max() * (x @ x)


def test_appendix_rotation_dense_oracle(rng):
    pb = _momentum_problem(rng, MomentumForm.APPENDIX)
    g = pb.grid
    op = operators_for(g)
    w = pb.v_transport
    wx, wy = G.interp_face_to_center(g, w)
    gx, gy = G.interp_face_to_center(g, G.grad_cells(g, pb.rho_k))
    s = wx * gy - wy * gx

    def apply(e):
        cu, cw = G.interp_face_to_center(g, e)
        zx, zy = 0.5 * s * cw, -0.5 * s * cu
        out = g.zero_faces()
        out.u[1:-1, :] = 0.5 * (zx[:-1, :] + zx[1:, :])
        out.w[:, 1:-1] = 0.5 * (zy[:, :-1] + zy[:, 1:])
        return out

    Z = rotation_matrix(g, pb.rho_k, w).toarray()
    dense = dense_from(op, apply)
    assert np.max(np.abs(Z - dense)) <= 1e-14 * np.abs(dense).max()
    assert np.max(np.abs(Z + Z.T)) == 0.0


def test_model_h_assembly_dropout(rng):
    pb = _momentum_problem(rng, MomentumForm.AGG, rho=(2.0, 2.0))
    assert pb.Jtilde.max_abs() == 0.0
    a = assemble_momentum(pb)
    pb.form = MomentumForm.MODEL_H
    b = assemble_momentum(pb)
    assert np.max(np.abs((a.A - b.A).toarray())) <= 1e-14
    assert np.max(np.abs(a.rhs - b.rhs)) <= 1e-14


def test_zero_forcing_rhs_is_zero(rng):
    pb = _momentum_problem(rng, MomentumForm.AGG)
    pb.v_k = pb.grid.zero_faces()
    pb.mu = np.zeros(pb.grid.cell_shape)
    assert np.all(assemble_momentum(pb).rhs == 0.0)


# -- Cahn-Hilliard Jacobian ----------------------------------------------------

def _ch_problem(rng, params):
    g = MacGrid(4, 4, 1.0, 1.0)
    phi_k = rng.uniform(-0.6, 0.6, g.cell_shape)
    return ChStepProblem(g, params, phi_k, random_noslip(g, rng), h=0.05), \
        np.clip(phi_k + 0.1 * rng.standard_normal(g.cell_shape), -0.8, 0.8)


def test_ch_jacobian_dense_oracle_constant_a(rng):
    # with a = 1: A(s) = s, F = 1, so mu = -L phi + Psi0~'(phi) - kt (phi + phi_k)/2
    # and J = I/h - L_m (-L + diag(Psi'' + kappa) - kt/2)
    params = ModelParams(mobility=CoefficientProfile.table([-1, 1], [0.5, 2.0]))
    pb, phi = _ch_problem(rng, params)
    g = pb.grid
    n = g.nx * g.ny
    ones = FaceField(np.ones((5, 4)), np.ones((4, 5)))
    mf = G.interp_center_to_face(g, params.mobility.value(pb.phi_k))

    def column_matrix(apply):
        cols = []
        for j in range(n):
            e = np.zeros(n)
            e[j] = 1.0
            cols.append(apply(e.reshape(g.cell_shape)).ravel())
        return np.column_stack(cols)

    L = column_matrix(lambda c: G.laplace_neumann(g, c, ones))
    Lm = column_matrix(lambda c: G.laplace_neumann(g, c, mf))
    kt = params.kappa_tilde
    assert kt == params.potential.kappa == 1.0
    d2 = params.potential.d2psi(phi).ravel() + params.potential.kappa
    J = np.eye(n) / pb.h - Lm @ (-L + np.diag(d2) - 0.5 * kt * np.eye(n))
    Jh = ch_jacobian(pb, phi).toarray()
    assert np.max(np.abs(Jh - J)) <= 1e-10 * np.abs(J).max()


def test_ch_jacobian_fourth_order_fd_variable_a(rng):
    params = ModelParams(a_coeff=CoefficientProfile.table([-1, -0.5, 0, 0.5, 1], [1.0, 1.25, 2.0, 1.25, 1.0]),
                         mobility=CoefficientProfile.const(0.7),
                         potential=PotentialSpec(theta=1.0, theta_c=2.0))
    pb, phi = _ch_problem(rng, params)
    n = phi.size
    J = ch_jacobian(pb, phi).toarray()
    eps = 1e-3
    fd = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = eps
        e = e.reshape(phi.shape)
        r = [ch_residual(pb, phi + k * e).ravel() for k in (-2, -1, 1, 2)]
        fd[:, j] = (r[0] - 8 * r[1] + 8 * r[2] - r[3]) / (12 * eps)
    assert np.max(np.abs(J - fd)) <= 1e-7 * np.abs(J).max()


def test_potential_block_matches_chain_rule(rng):
    params = ModelParams(a_coeff=CoefficientProfile.table([-1, 0, 1], [1.0, 3.0, 1.0]))
    tA = params.transform
    s = rng.uniform(-0.9, 0.9, 50)
    eps = 1e-6
    f = lambda x: model.tilde_psi0_prime_at(x, params.potential, tA, params.kappa_tilde)
    fd = (f(s + eps) - f(s - eps)) / (2 * eps)
    from aggflow.ch import potential_block
    np.testing.assert_allclose(potential_block(params, s), fd, rtol=1e-6)
    assert np.all(potential_block(params, s) >= 0)
