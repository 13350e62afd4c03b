"""Time stepping: outer fixed-point coupling of the Cahn-Hilliard and
momentum stages, energy bookkeeping and the per-step audit of the discrete
energy estimate.

Every step reports the terms of

    E_tot(new) + inertia_defect + transform_defect + visc_diss + mob_diss <= E_tot(old)

and ``ineq_residual`` is the slack of that inequality. With the skew
discretization the slack equals the convexity gap of the reparametrized
potential, so it is nonnegative up to the outer-loop tolerance.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .ch import ChStepProblem, ch_solve, chempot_diagnostics, mu_from_phi
from .errors import AbortedAfterRetries, OuterNoConvergence, SolverError, ValidationError
from .grid import (FaceField, MacGrid, cell_norm, face_inner, face_norm, grad_cells, integral,
                   interp_center_to_face, div_faces, strain_dissipation)
from .model import ModelParams, Variant, rho_of_phi
from .ns import MomentumForm, NsStepProblem, compute_Jtilde, kinetic_terms, ns_solve

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "step", "time", "E_kin", "E_free", "E_tot", "visc_diss", "mob_diss", "inertia_defect",
    "transform_defect", "ineq_residual", "mass", "min_phi", "max_phi", "div_v_inf",
    "outer_iters", "newton_iters", "lin_iters",
)


@dataclass
class SimState:
    t: float
    step: int
    v: FaceField
    phi: np.ndarray
    mu: np.ndarray
    g: np.ndarray

    def copy(self) -> SimState:
        return SimState(self.t, self.step, self.v.copy(), self.phi.copy(), self.mu.copy(),
                        self.g.copy())


@dataclass
class EnergyReport:
    step: int
    time: float
    E_kin: float
    E_free: float
    E_tot: float
    visc_diss: float = 0.0
    mob_diss: float = 0.0
    inertia_defect: float = 0.0
    transform_defect: float = 0.0
    ineq_residual: float = 0.0
    mass: float = 0.0
    min_phi: float = 0.0
    max_phi: float = 0.0
    div_v_inf: float = 0.0
    outer_iters: int = 0
    newton_iters: int = 0
    lin_iters: int = 0
    E_tot_old: float = 0.0
    h: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def row(self) -> tuple:
        return tuple(getattr(self, c) for c in CSV_COLUMNS)


@dataclass
class StepperConfig:
    h: float = 1e-3
    outer_tol: float = 1e-10
    outer_max_iter: int = 60
    under_relaxation: float = 0.7
    eps_audit: float | None = None
    variant: Variant = Variant.AGG
    newton_tol: float = 1e-10
    newton_max_iter: int = 25
    damping_min: float = 2.0 ** -20
    lin_tol: float = 1e-10
    max_retries: int = 5

    def __post_init__(self) -> None:
        self.variant = Variant(self.variant)
        if not self.h > 0:
            raise ValidationError("h must be > 0")
        for name in ("outer_tol", "newton_tol", "lin_tol", "damping_min"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be > 0")
        if not 0 < self.under_relaxation <= 1:
            raise ValidationError("under_relaxation must lie in (0, 1]")
        if self.outer_max_iter < 1 or self.newton_max_iter < 1 or self.max_retries < 0:
            raise ValidationError("iteration limits must be positive")
        if self.eps_audit is not None and self.eps_audit < 0:
            raise ValidationError("eps_audit must be >= 0")

    def audit_tolerance(self, E0: float) -> float:
        if self.eps_audit is not None:
            return self.eps_audit
        return max(1e-10 * abs(E0), 10.0 * self.outer_tol * abs(E0))


# -- energies ------------------------------------------------------------------

def _grad_sq_integral(grid: MacGrid, c: np.ndarray) -> float:
    return face_norm(grid, grad_cells(grid, c)) ** 2


def free_energy(grid: MacGrid, params: ModelParams, phi: np.ndarray) -> float:
    psi = params.potential.psi(phi)
    return integral(grid, psi) + 0.5 * _grad_sq_integral(grid, params.transform.A(phi))


def kinetic_energy(grid: MacGrid, rho: np.ndarray, v: FaceField) -> float:
    rf = interp_center_to_face(grid, rho)
    return 0.5 * face_inner(grid, v.scaled(rf.u, rf.w), v)


def total_energy(grid: MacGrid, params: ModelParams, state: SimState,
                 model_h: bool = False) -> tuple[float, float, float]:
    rho = (np.full(grid.cell_shape, params.rho_mean) if model_h
           else rho_of_phi(state.phi, params))
    ek = kinetic_energy(grid, rho, state.v)
    ef = free_energy(grid, params, state.phi)
    return ek, ef, ek + ef


def appendix_chempot_term(grid: MacGrid, v: FaceField, params: ModelParams) -> np.ndarray:
    """beta |v|^2 / 2 at cell centres, with |v|^2 averaged from the faces."""
    grid.check_faces(v)
    u2 = 0.5 * (v.u[1:, :] ** 2 + v.u[:-1, :] ** 2)
    w2 = 0.5 * (v.w[:, 1:] ** 2 + v.w[:, :-1] ** 2)
    return params.beta() * 0.5 * (u2 + w2)


def initial_report(grid: MacGrid, params: ModelParams, state: SimState,
                   model_h: bool = False) -> EnergyReport:
    ek, ef, et = total_energy(grid, params, state, model_h)
    return EnergyReport(
        step=state.step, time=state.t, E_kin=ek, E_free=ef, E_tot=et,
        mass=integral(grid, state.phi), min_phi=float(state.phi.min()),
        max_phi=float(state.phi.max()), div_v_inf=float(np.max(np.abs(div_faces(grid, state.v)))),
        E_tot_old=et,
        diagnostics=chempot_diagnostics(grid, params, state.phi, state.mu, state.phi))


def initial_state(grid: MacGrid, params: ModelParams, phi0: np.ndarray,
                  v0: FaceField | None = None) -> SimState:
    phi0 = grid.check_cells(phi0).copy()
    v0 = grid.zero_faces() if v0 is None else grid.check_faces(v0).copy().enforce_no_slip()
    mu0 = mu_from_phi(grid, params, phi0, phi0)
    return SimState(t=0.0, step=0, v=v0, phi=phi0, mu=mu0, g=grid.zeros())


# -- one step ------------------------------------------------------------------

def _combined_norm(grid: MacGrid, v: FaceField, phi: np.ndarray, mu: np.ndarray) -> float:
    return math.sqrt(face_norm(grid, v) ** 2 + cell_norm(grid, phi) ** 2 + cell_norm(grid, mu) ** 2)


def _coupled_step(grid: MacGrid, params: ModelParams, state: SimState, cfg: StepperConfig,
                  form: MomentumForm) -> tuple[SimState, EnergyReport]:
    h = cfg.h
    phi_k, v_k = state.phi, state.v
    if form is MomentumForm.MODEL_H:
        rho_k = np.full(grid.cell_shape, params.rho_mean)
    else:
        rho_k = rho_of_phi(phi_k, params)
    zero_flux = grid.zero_faces()
    v_it, phi_it, mu_it = v_k.copy(), phi_k, state.mu
    newton_iters = lin_iters = 0
    omega = cfg.under_relaxation
    for outer in range(1, cfg.outer_max_iter + 1):
        shift = appendix_chempot_term(grid, v_it, params) if form is MomentumForm.APPENDIX else None
        ch = ch_solve(ChStepProblem(
            grid, params, phi_k, v_it, h, newton_tol=cfg.newton_tol,
            newton_max_iter=cfg.newton_max_iter, damping_min=cfg.damping_min,
            shift=shift, phi_init=phi_it))
        newton_iters += ch.newton_iters
        lin_iters += ch.newton_iters - 1
        if form is MomentumForm.MODEL_H:
            rho_new = rho_k
        else:
            rho_new = rho_of_phi(ch.phi, params)
        jt = compute_Jtilde(grid, phi_k, ch.mu, params) if form is MomentumForm.AGG else zero_flux
        ns = ns_solve(NsStepProblem(grid, params, rho_k, rho_new, phi_k, ch.mu, jt, v_k, v_it, h,
                                    form=form, lin_tol=cfg.lin_tol))
        lin_iters += ns.lin_iters
        dv = ns.v - v_it
        update = _combined_norm(grid, dv, ch.phi - phi_it, ch.mu - mu_it)
        scale = _combined_norm(grid, ns.v, ch.phi, ch.mu)
        phi_it, mu_it = ch.phi, ch.mu
        if update <= cfg.outer_tol * scale:
            break
        v_it = v_it + omega * dv
    else:
        raise OuterNoConvergence(
            f"outer loop: update {update:.3e} > {cfg.outer_tol:.1e} * {scale:.3e} "
            f"after {cfg.outer_max_iter} iterations")

    new = SimState(t=state.t + h, step=state.step + 1, v=ns.v, phi=ch.phi, mu=ch.mu, g=ns.g)
    rep = energy_report(grid, params, state, new, rho_k, rho_new, h)
    rep.outer_iters, rep.newton_iters, rep.lin_iters = outer, newton_iters, lin_iters
    rep.div_v_inf = ns.div_inf
    return new, rep


def energy_report(grid: MacGrid, params: ModelParams, old: SimState, new: SimState,
                  rho_k: np.ndarray, rho_new: np.ndarray, h: float) -> EnergyReport:
    kin = kinetic_terms(grid, new.v, old.v, rho_k, rho_new)
    ef_old = free_energy(grid, params, old.phi)
    ef_new = free_energy(grid, params, new.phi)
    eta_k = params.viscosity.value(old.phi)
    visc = h * strain_dissipation(grid, new.v, eta_k)
    mf = interp_center_to_face(grid, params.mobility.value(old.phi))
    gm = grad_cells(grid, new.mu)
    mob = h * face_inner(grid, gm.scaled(mf.u, mf.w), gm)
    tA = params.transform
    tdef = 0.5 * _grad_sq_integral(grid, tA.A(new.phi) - tA.A(old.phi))
    e_old = kin["E_kin_old"] + ef_old
    e_new = kin["E_kin_new"] + ef_new
    return EnergyReport(
        step=new.step, time=new.t, E_kin=kin["E_kin_new"], E_free=ef_new, E_tot=e_new,
        visc_diss=visc, mob_diss=mob, inertia_defect=kin["inertia_defect"],
        transform_defect=tdef,
        ineq_residual=e_old - e_new - visc - mob - kin["inertia_defect"] - tdef,
        mass=integral(grid, new.phi), min_phi=float(new.phi.min()),
        max_phi=float(new.phi.max()), E_tot_old=e_old, h=h,
        diagnostics=chempot_diagnostics(grid, params, new.phi, new.mu, old.phi))


def step(grid: MacGrid, params: ModelParams, state: SimState,
         cfg: StepperConfig) -> tuple[SimState, EnergyReport]:
    """One implicit step of the AGG model or of the appendix model."""
    form = MomentumForm.APPENDIX if cfg.variant is Variant.APPENDIX else MomentumForm.AGG
    return _coupled_step(grid, params, state, cfg, form)


def step_model_h(grid: MacGrid, params: ModelParams, state: SimState,
                 cfg: StepperConfig) -> tuple[SimState, EnergyReport]:
    """One step of the matched-density model with density (rho1 + rho2)/2."""
    return _coupled_step(grid, params, state, cfg, MomentumForm.MODEL_H)


# -- audit and trajectories ----------------------------------------------------

@dataclass
class AuditResult:
    passed: bool
    residual: float
    tolerance: float


def audit_energy_inequality(report: EnergyReport, cfg: StepperConfig, E0: float) -> AuditResult:
    """Recompute the slack from the report terms and compare with -eps_audit."""
    res = (report.E_tot_old - (report.E_kin + report.E_free) - report.visc_diss
           - report.mob_diss - report.inertia_defect - report.transform_defect)
    tol = cfg.audit_tolerance(E0)
    ok = bool(np.isfinite(res) and res >= -tol)
    return AuditResult(passed=ok, residual=float(res), tolerance=tol)


@dataclass
class Trajectory:
    initial: EnergyReport
    reports: list[EnergyReport]
    state: SimState
    audits: list[AuditResult]
    h_final: float

    @property
    def all_reports(self) -> list[EnergyReport]:
        return [self.initial, *self.reports]


def iterate(grid: MacGrid, params: ModelParams, state: SimState, cfg: StepperConfig,
            n_steps: int, model_h: bool = False) -> Iterator[tuple[SimState, EnergyReport]]:
    """Yield (state, report) per step; h is halved on solver failure."""
    stepper = step_model_h if model_h else step
    cfg = dataclasses.replace(cfg)
    for _ in range(n_steps):
        for attempt in range(cfg.max_retries + 1):
            try:
                state, rep = stepper(grid, params, state, cfg)
                break
            except SolverError as exc:
                if attempt == cfg.max_retries:
                    raise AbortedAfterRetries(
                        f"step {state.step + 1}: gave up after {cfg.max_retries} halvings "
                        f"(h = {cfg.h:.3e}): {exc}") from exc
                log.warning("step %d failed (%s); halving h to %.3e", state.step + 1, exc, cfg.h / 2)
                cfg.h /= 2.0
        yield state, rep


def run(grid: MacGrid, params: ModelParams, state: SimState, cfg: StepperConfig, n_steps: int,
        model_h: bool = False,
        callback: Callable[[SimState, EnergyReport], None] | None = None) -> Trajectory:
    init = initial_report(grid, params, state, model_h)
    reports, audits = [], []
    h = cfg.h
    for state, rep in iterate(grid, params, state, cfg, n_steps, model_h):
        reports.append(rep)
        audits.append(audit_energy_inequality(rep, cfg, init.E_tot))
        h = rep.h
        if callback is not None:
            callback(state, rep)
    return Trajectory(initial=init, reports=reports, state=state, audits=audits, h_final=h)
