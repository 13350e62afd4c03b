"""Implicit Cahn-Hilliard stage: given phi_k and a frozen velocity, find
(phi, mu) with

    (phi - phi_k)/h + div(phi_k v) = div(m(phi_k) grad mu),
    mu = F(phi, phi_k) (-lap A(phi) + Psi0~'(A(phi)) - kappa~ (A(phi) + A(phi_k))/2) - shift,

where F is the difference quotient of A and ``shift`` is an optional extra
chemical-potential term (used by the appendix model). mu is eliminated and
damped Newton is run on the phi-residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import model
from .errors import DomainError, NewtonDiverged, StepNotAdmissible
from .grid import (FaceField, MacGrid, advect_conservative, cell_norm, face_norm,
                   grad_cells, integral, interp_center_to_face, laplace_neumann)
from .model import ModelParams
from .operators import operators_for

ADMISSIBLE_MARGIN = 1e-10


@dataclass
class ChStepProblem:
    grid: MacGrid
    params: ModelParams
    phi_k: np.ndarray
    v: FaceField
    h: float
    newton_tol: float = 1e-10
    newton_max_iter: int = 25
    damping_min: float = 2.0 ** -20
    shift: np.ndarray | None = None
    phi_init: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not self.h > 0:
            raise ValueError("time step must be positive")
        self.phi_k = self.grid.check_cells(self.phi_k)
        self.grid.check_faces(self.v)
        mean = integral(self.grid, self.phi_k) / self.grid.area
        if not -1.0 < mean < 1.0:
            raise DomainError("mean of phi_k must lie in (-1, 1)")


@dataclass
class ChStepResult:
    phi: np.ndarray
    mu: np.ndarray
    newton_iters: int
    residual_norm: float
    min_phi: float
    max_phi: float
    residual_history: list[float] = field(default_factory=list)


def _unit_faces(grid: MacGrid) -> FaceField:
    return FaceField(np.ones((grid.nx + 1, grid.ny)), np.ones((grid.nx, grid.ny + 1)))


def _check_admissible(params: ModelParams, phi: np.ndarray) -> None:
    if params.potential.singular and np.any(np.abs(phi) >= 1.0):
        raise DomainError("phi must satisfy |phi| < 1 for the logarithmic potential")


def _bracket(grid: MacGrid, params: ModelParams, phi, a_phi, a_phik):
    tA = params.transform
    kt = params.kappa_tilde
    lap = laplace_neumann(grid, a_phi, _unit_faces(grid))
    return (-lap + model.tilde_psi0_prime_at(phi, params.potential, tA, kt)
            - 0.5 * kt * (a_phi + a_phik))


def mu_from_phi(grid: MacGrid, params: ModelParams, phi, phi_k, shift=None) -> np.ndarray:
    """Chemical potential from the transformed potential equation."""
    phi = grid.check_cells(phi)
    phi_k = grid.check_cells(phi_k)
    _check_admissible(params, phi)
    tA = params.transform
    a_phi, a_phik = tA.A(phi), tA.A(phi_k)
    mu = tA.F(phi, phi_k) * _bracket(grid, params, phi, a_phi, a_phik)
    if shift is not None:
        mu = mu - shift
    return mu


def _mobility_faces(grid: MacGrid, params: ModelParams, phi_k) -> FaceField:
    return interp_center_to_face(grid, params.mobility.value(phi_k))


def ch_residual(problem: ChStepProblem, phi: np.ndarray) -> np.ndarray:
    g, p = problem.grid, problem.params
    mu = mu_from_phi(g, p, phi, problem.phi_k, problem.shift)
    adv = advect_conservative(g, problem.v, problem.phi_k)
    diff = laplace_neumann(g, mu, _mobility_faces(g, p, problem.phi_k))
    return (phi - problem.phi_k) / problem.h + adv - diff


def potential_block(params: ModelParams, phi: np.ndarray) -> np.ndarray:
    """d/dphi of Psi0~'(A(phi)) = Psi0~''(A(phi)) sqrt(a(phi)); nonnegative."""
    tA = params.transform
    return model.tilde_psi0_second_at(phi, params.potential, tA, params.kappa_tilde) * tA.dA(phi)


def ch_jacobian(problem: ChStepProblem, phi: np.ndarray) -> sp.csr_matrix:
    g, p = problem.grid, problem.params
    op = operators_for(g)
    tA = p.transform
    phi_k = problem.phi_k
    a_phi, a_phik = tA.A(phi), tA.A(phi_k)
    dA_phi = tA.dA(phi).ravel()
    br = _bracket(g, p, phi, a_phi, a_phik).ravel()
    F = tA.F(phi, phi_k).ravel()
    dF = tA.dF_ds(phi, phi_k).ravel()
    lap1 = op.laplacian(np.ones(op.n))
    lapm = op.laplacian(op.pack(_mobility_faces(g, p, phi_k)))
    inner = -lap1 @ sp.diags(dA_phi) + sp.diags(
        potential_block(p, phi).ravel() - 0.5 * p.kappa_tilde * dA_phi)
    dmu = sp.diags(dF * br) + sp.diags(F) @ inner
    return (sp.identity(op.nc) / problem.h - lapm @ dmu).tocsc()


def ch_solve(problem: ChStepProblem) -> ChStepResult:
    g, p = problem.grid, problem.params
    phi = problem.phi_k.copy() if problem.phi_init is None else g.check_cells(problem.phi_init).copy()
    _check_admissible(p, phi)
    tol = problem.newton_tol * (1.0 + cell_norm(g, problem.phi_k))
    limit = 1.0 - ADMISSIBLE_MARGIN
    history: list[float] = []
    for _ in range(problem.newton_max_iter):
        res = ch_residual(problem, phi)
        rn = cell_norm(g, res)
        history.append(rn)
        if not np.isfinite(rn):
            raise NewtonDiverged("non-finite Cahn-Hilliard residual")
        if rn <= tol:
            break
        delta = splu(ch_jacobian(problem, phi)).solve(-res.ravel()).reshape(g.cell_shape)
        alpha = 1.0
        while True:
            trial = phi + alpha * delta
            if not p.potential.singular or np.max(np.abs(trial)) <= limit:
                break
            alpha *= 0.5
            if alpha < problem.damping_min:
                raise StepNotAdmissible("damping cannot keep |phi| < 1")
        phi = trial
    else:
        raise NewtonDiverged(
            f"Newton did not reach {tol:.3e} in {problem.newton_max_iter} iterations "
            f"(last residual {history[-1]:.3e})")
    mu = mu_from_phi(g, p, phi, problem.phi_k, problem.shift)
    return ChStepResult(phi=phi, mu=mu, newton_iters=len(history), residual_norm=history[-1],
                        min_phi=float(phi.min()), max_phi=float(phi.max()),
                        residual_history=history)


def chempot_diagnostics(grid: MacGrid, params: ModelParams, phi, mu, phi_k) -> dict:
    """Quantities bounded in the chemical-potential estimate, for logging."""
    tA = params.transform
    psi0 = model.tilde_psi0_prime_at(phi, params.potential, tA, params.kappa_tilde)
    int_mu = integral(grid, mu)
    return {
        "mean_mu": int_mu / grid.area,
        "abs_int_mu": abs(int_mu),
        "l2_psi0_prime": cell_norm(grid, psi0),
        "l2_grad_phi": face_norm(grid, grad_cells(grid, phi)),
        "l2_grad_mu": face_norm(grid, grad_cells(grid, mu)),
    }
