"""Momentum/pressure stage: the linear saddle-point problem for (v, g) at
frozen phase-field data and a lagged transport velocity w.

AGG form (energy-exact for every w)::

    ((rho + rho_k)/2 v - rho_k v_k)/h + C(rho_k w + J; v) - div(2 eta D v) + grad g = mu grad phi_k

where C is the skew convection operator and J the relative mass flux.
Appendix form::

    (rho v - rho_k v_k)/h + C(rho_k w; v) + Z(w; v) - div(2 eta D v) + grad g = mu grad phi_k

with Z the skew part of ``div(rho_k w (x) v) - |v|^2/2 grad rho_k``. The
Model-H form uses a constant density and no relative flux.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import LinearSolveFailed
from .grid import (FaceField, MacGrid, face_inner, grad_cells, interp_center_to_face,
                   interp_face_to_center)
from .model import ModelParams
from .operators import VelocityOperators, operators_for


class MomentumForm(str, enum.Enum):
    AGG = "agg"
    APPENDIX = "appendix"
    MODEL_H = "model_h"


@dataclass
class NsStepProblem:
    grid: MacGrid
    params: ModelParams
    rho_k: np.ndarray
    rho_new: np.ndarray
    phi_k: np.ndarray
    mu: np.ndarray
    Jtilde: FaceField
    v_k: FaceField
    v_transport: FaceField
    h: float
    form: MomentumForm = MomentumForm.AGG
    lin_tol: float = 1e-10

    def __post_init__(self) -> None:
        g = self.grid
        if not self.h > 0:
            raise ValueError("time step must be positive")
        self.form = MomentumForm(self.form)
        for name in ("rho_k", "rho_new", "phi_k", "mu"):
            setattr(self, name, g.check_cells(getattr(self, name)))
        for f in (self.Jtilde, self.v_k, self.v_transport):
            g.check_faces(f)
        floor = min(self.params.rho1, self.params.rho2)
        if self.rho_k.min() < floor * (1 - 1e-12) or self.rho_new.min() < floor * (1 - 1e-12):
            raise ValueError("densities fall below min(rho1, rho2)")


@dataclass
class NsStepResult:
    v: FaceField
    g: np.ndarray
    lin_iters: int
    div_inf: float
    rel_residual: float


@dataclass
class MomentumSystem:
    """Velocity block ``A`` split into its parts, and the packed right-hand side."""

    op: VelocityOperators
    time: sp.csr_matrix
    transport: sp.csr_matrix
    viscous: sp.csr_matrix
    rhs: np.ndarray

    @property
    def A(self) -> sp.csr_matrix:
        return (self.time + self.transport + self.viscous).tocsr()


def compute_Jtilde(grid: MacGrid, phi_k: np.ndarray, mu: np.ndarray, params: ModelParams) -> FaceField:
    """Relative mass flux -beta m(phi_k) grad mu on faces (zero on walls)."""
    mf = interp_center_to_face(grid, params.mobility.value(grid.check_cells(phi_k)))
    gm = grad_cells(grid, mu)
    b = params.beta()
    return FaceField(-b * mf.u * gm.u, -b * mf.w * gm.w)


def capillary_force(grid: MacGrid, mu: np.ndarray, phi_k: np.ndarray) -> FaceField:
    mf = interp_center_to_face(grid, mu)
    gp = grad_cells(grid, phi_k)
    return FaceField(mf.u * gp.u, mf.w * gp.w)


def rotation_matrix(grid: MacGrid, rho_k: np.ndarray, w: FaceField) -> sp.csr_matrix:
    """Antisymmetric Z(w; .) with Z_x = s v_y / 2, Z_y = -s v_x / 2 and
    s = w_x d_y rho_k - w_y d_x rho_k at cell centres."""
    op = operators_for(grid)
    wx, wy = interp_face_to_center(grid, w)
    gx, gy = interp_face_to_center(grid, grad_cells(grid, rho_k))
    s = sp.diags((wx * gy - wy * gx).ravel())
    half = 0.5 * (op.px.T @ s @ op.py)
    return (half - half.T).tocsr()


def assemble_momentum(problem: NsStepProblem) -> MomentumSystem:
    g, p = problem.grid, problem.params
    op = operators_for(g)
    h = problem.h
    form = problem.form
    w = problem.v_transport
    rho_kf = interp_center_to_face(g, problem.rho_k)
    if form is MomentumForm.MODEL_H:
        rho_bar = p.rho_mean
        time = sp.diags(np.full(op.n, rho_bar / h))
        transport = op.skew(w * rho_bar)
        rhs = np.full(op.n, rho_bar) * op.pack(problem.v_k) / h
    else:
        rho_new = op.pack_cells_to_faces(problem.rho_new)
        rho_old = op.pack(rho_kf)
        mass_flux = w.scaled(rho_kf.u, rho_kf.w)
        if form is MomentumForm.AGG:
            time = sp.diags(rho_new / h) - sp.diags((rho_new - rho_old) / (2.0 * h))
            transport = op.skew(mass_flux + problem.Jtilde)
        else:
            time = sp.diags(rho_new / h)
            transport = op.skew(mass_flux) + rotation_matrix(g, problem.rho_k, w)
        rhs = rho_old * op.pack(problem.v_k) / h
    rhs = rhs + op.pack(capillary_force(g, problem.mu, problem.phi_k))
    visc = op.viscous(p.viscosity.value(problem.phi_k))
    return MomentumSystem(op=op, time=time.tocsr(), transport=transport.tocsr(),
                          viscous=visc, rhs=rhs)


def saddle_matrix(system: MomentumSystem) -> sp.csc_matrix:
    """[[A, G'], [D', 0]] with the first pressure unknown pinned to zero and
    the matching (redundant) divergence row removed.

    The divergence rows sum to zero, so dropping one loses nothing; a dense
    mean-zero border would instead ruin the sparsity of the factors.
    """
    op = system.op
    return sp.bmat([[system.A, op.grad[:, 1:]], [op.div[1:, :], None]], format="csc")


def solve_saddle(system: MomentumSystem, tol: float = 1e-10) -> NsStepResult:
    op = system.op
    K = saddle_matrix(system)
    b = np.concatenate([system.rhs, np.zeros(op.nc - 1)])
    try:
        lu = splu(K)
    except RuntimeError as exc:
        raise LinearSolveFailed(f"saddle factorization failed: {exc}") from exc
    x = lu.solve(b)
    bnorm = max(np.linalg.norm(b), 1e-300)
    rel = np.linalg.norm(K @ x - b) / bnorm
    if rel > tol:
        x = x + lu.solve(b - K @ x)
        rel = np.linalg.norm(K @ x - b) / bnorm
    if not np.all(np.isfinite(x)) or rel > tol:
        raise LinearSolveFailed(f"saddle solve residual {rel:.3e} exceeds {tol:.3e}")
    v = op.unpack(x[: op.n])
    gfield = np.concatenate([[0.0], x[op.n:]])
    gfield = (gfield - gfield.mean()).reshape(op.grid.cell_shape)
    div_inf = float(np.max(np.abs(op.div @ x[: op.n])))
    return NsStepResult(v=v, g=gfield, lin_iters=1 if np.any(b) else 0,
                        div_inf=div_inf, rel_residual=float(rel))


def ns_solve(problem: NsStepProblem) -> NsStepResult:
    return solve_saddle(assemble_momentum(problem), problem.lin_tol)


def kinetic_terms(grid: MacGrid, v: FaceField, v_k: FaceField, rho_k: np.ndarray,
                  rho_new: np.ndarray) -> dict:
    rk = interp_center_to_face(grid, rho_k)
    rn = interp_center_to_face(grid, rho_new)
    dv = v - v_k
    return {
        "E_kin_new": 0.5 * face_inner(grid, v.scaled(rn.u, rn.w), v),
        "E_kin_old": 0.5 * face_inner(grid, v_k.scaled(rk.u, rk.w), v_k),
        "inertia_defect": 0.5 * face_inner(grid, dv.scaled(rk.u, rk.w), dv),
    }
