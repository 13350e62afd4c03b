"""Invariant suites behind ``aggflow verify``.

Each suite returns a list of :class:`Check` records; a check passes when its
measured value is within the stated tolerance.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .ch import ChStepProblem, ch_jacobian, ch_residual, ch_solve, mu_from_phi, potential_block
from .grid import (FaceField, MacGrid, cell_inner, cell_norm, div_faces, face_inner, face_norm,
                   grad_cells, integral, laplace_neumann, skew_convection,
                   skew_flux_term, strain_dissipation, viscous_force)
from .model import CoefficientProfile, ModelParams, rho_of_phi
from .ns import (MomentumForm, NsStepProblem, assemble_momentum, compute_Jtilde, solve_saddle)
from .operators import operators_for
from .stepper import StepperConfig, initial_state, run


@dataclass
class Check:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tol)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag}  {self.name:<44s} {self.value:.3e} <= {self.tol:.1e}"


def random_grid(rng: np.random.Generator) -> MacGrid:
    return MacGrid(int(rng.integers(4, 13)), int(rng.integers(4, 13)),
                   float(rng.uniform(0.5, 3.0)), float(rng.uniform(0.5, 3.0)))


def random_faces(grid: MacGrid, rng: np.random.Generator) -> FaceField:
    """Random face field with zero boundary values."""
    v = FaceField(rng.standard_normal((grid.nx + 1, grid.ny)),
                  rng.standard_normal((grid.nx, grid.ny + 1)))
    return v.enforce_no_slip()


def _positive_faces(grid: MacGrid, rng: np.random.Generator) -> FaceField:
    return FaceField(rng.uniform(0.5, 2.0, (grid.nx + 1, grid.ny)),
                     rng.uniform(0.5, 2.0, (grid.nx, grid.ny + 1)))


def _worst(values) -> float:
    return float(max(values))


# -- ops -----------------------------------------------------------------------

def suite_ops(instances: int = 100, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    sbp, skew, flux, sym, zero, visc = [], [], [], [], [], []
    for _ in range(instances):
        g = random_grid(rng)
        u, v = random_faces(g, rng), random_faces(g, rng)
        p, q = rng.standard_normal(g.cell_shape), rng.standard_normal(g.cell_shape)
        du, gp = div_faces(g, u), grad_cells(g, p)
        sbp.append(abs(cell_inner(g, du, p) + face_inner(g, u, gp))
                   / (cell_norm(g, du) * cell_norm(g, p) + face_norm(g, u) * face_norm(g, gp)))
        c = skew_convection(g, u, v)
        skew.append(abs(face_inner(g, c, v)) / (face_norm(g, c) * face_norm(g, v)))
        jt = FaceField(*(-1.5 * a for a in (gp.u, gp.w)))
        t = skew_flux_term(g, jt, v)
        flux.append(abs(face_inner(g, t, v)) / (face_norm(g, t) * face_norm(g, v)))
        k = _positive_faces(g, rng)
        lp, lq = laplace_neumann(g, p, k), laplace_neumann(g, q, k)
        sym.append(abs(cell_inner(g, lp, q) - cell_inner(g, p, lq))
                   / (cell_norm(g, lp) * cell_norm(g, q) + cell_norm(g, p) * cell_norm(g, lq)))
        zero.append(abs(integral(g, lp)) / (np.sum(np.abs(lp)) * g.vol))
        eta = rng.uniform(0.5, 2.0, g.cell_shape)
        d = strain_dissipation(g, v, eta)
        visc.append(abs(face_inner(g, viscous_force(g, v, eta), v) - d) / d)
    checks = [
        Check("summation by parts <div u,p> = -<u,grad p>", _worst(sbp), 1e-13),
        Check("skew convection <C(w;v),v> = 0", _worst(skew), 1e-13),
        Check("skew flux term <T(J;v),v> = 0", _worst(flux), 1e-13),
        Check("laplacian symmetry", _worst(sym), 1e-13),
        Check("laplacian zero integral", _worst(zero), 1e-13),
        Check("viscous pairing equals strain dissipation", _worst(visc), 1e-12),
    ]
    if kernels.compiled is not None:
        checks.append(Check("compiled and python kernels agree", _backend_gap(rng), 1e-12))
    return checks


def _backend_gap(rng: np.random.Generator) -> float:
    py, cy = kernels.python, kernels.compiled
    g = MacGrid(9, 7, 1.3, 0.8)
    u, v = random_faces(g, rng), random_faces(g, rng)
    c = rng.standard_normal(g.cell_shape)
    k = _positive_faces(g, rng)
    eta = rng.uniform(0.5, 2.0, g.cell_shape)
    eta_n = np.ascontiguousarray(py.eta_to_nodes(eta))
    pairs = [
        (py.div_faces(u.u, u.w, g.hx, g.hy), cy.div_faces(u.u, u.w, g.hx, g.hy)),
        (py.laplace_neumann(c, k.u, k.w, g.hx, g.hy), cy.laplace_neumann(c, k.u, k.w, g.hx, g.hy)),
        (np.concatenate([a.ravel() for a in py.skew_convection(u.u, u.w, v.u, v.w, g.hx, g.hy)]),
         np.concatenate([a.ravel() for a in cy.skew_convection(u.u, u.w, v.u, v.w, g.hx, g.hy)])),
        (np.concatenate([a.ravel() for a in py.viscous_apply(v.u, v.w, eta, eta_n, g.hx, g.hy)]),
         np.concatenate([a.ravel() for a in cy.viscous_apply(v.u, v.w, eta, eta_n, g.hx, g.hy)])),
    ]
    return max(float(np.max(np.abs(np.asarray(a) - np.asarray(b))) / max(1.0, np.max(np.abs(a))))
               for a, b in pairs)


# -- ch ------------------------------------------------------------------------

def _tanh_profile(g: MacGrid) -> np.ndarray:
    x, _ = g.cell_centers()
    return 0.8 * np.tanh((x - 0.5 * g.Lx) / (np.sqrt(2.0) * 0.6))


def suite_ch(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    p = ModelParams(rho1=1.0, rho2=3.0, a_coeff=CoefficientProfile.table([-1, 0, 1], [1.0, 1.5, 2.0]),
                    mobility=CoefficientProfile.table([-1, 1], [0.5, 1.5]))
    checks = []

    g = MacGrid(8, 8, 2.0, 2.0)
    phi_k = np.full(g.cell_shape, 0.2)
    res = ch_solve(ChStepProblem(g, p, phi_k, g.zero_faces(), 1e-2))
    checks.append(Check("uniform state is a fixed point", float(np.max(np.abs(res.phi - 0.2))), 1e-14))

    g = MacGrid(32, 8, 6.4, 1.6)
    phi = _tanh_profile(g)
    m0 = integral(g, phi)
    drift, worst = 0.0, 0.0
    for _ in range(20):
        r = ch_solve(ChStepProblem(g, p, phi, g.zero_faces(), 1e-2))
        phi = r.phi
        drift = max(drift, abs(integral(g, phi) - m0) / g.area)
        worst = max(worst, float(np.max(np.abs(phi))))
    checks.append(Check("mass drift over 20 steps / |Omega|", drift, 1e-12))
    checks.append(Check("max |phi| over 20 steps", worst, 1.0 - 1e-10))

    g = MacGrid(12, 10, 2.4, 2.0)
    phi_k = 0.4 * np.tanh(rng.standard_normal(g.cell_shape))
    v = random_faces(g, rng) * 0.3
    prob = ChStepProblem(g, p, phi_k, v, 5e-3)
    x = phi_k + 0.01 * rng.standard_normal(g.cell_shape)
    d = rng.standard_normal(g.cell_shape)
    e = 1e-6
    fd = ((ch_residual(prob, x + e * d) - ch_residual(prob, x - e * d)) / (2 * e)).ravel()
    jd = ch_jacobian(prob, x) @ d.ravel()
    checks.append(Check("Jacobian vs finite differences (relative)",
                        float(np.max(np.abs(fd - jd)) / np.max(np.abs(fd))), 1e-5))
    checks.append(Check("potential block nonnegative (min, negated)",
                        max(0.0, -float(potential_block(p, x).min())), 0.0))
    hist = ch_solve(smooth_ch_problem(p)).residual_history
    checks.append(Check("Newton tail r[n+1] / r[n]^2 (32x32 smooth)", newton_tail_ratio(hist), 10.0))
    return checks


def newton_tail_ratio(history: list[float]) -> float:
    """Largest r[n+1]/r[n]^2 over the last three informative pairs.

    Pairs whose second residual is within 10x of the final one are at the
    roundoff floor and carry no information about the convergence rate.
    """
    floor = 10.0 * history[-1]
    pairs = [(a, b) for a, b in zip(history, history[1:]) if b > floor]
    return max((b / a ** 2 for a, b in pairs[-3:]), default=0.0)


def smooth_ch_problem(params: ModelParams, h: float = 0.1) -> ChStepProblem:
    g = MacGrid(32, 32, 6.4, 6.4)
    x, y = g.cell_centers()
    phi_k = 0.5 * np.cos(np.pi * x / g.Lx) * np.cos(2.0 * np.pi * y / g.Ly)
    return ChStepProblem(g, params, phi_k, g.zero_faces(), h)


# -- ns ------------------------------------------------------------------------

def suite_ns(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    p = ModelParams(rho1=1.0, rho2=3.0, viscosity=CoefficientProfile.table([-1, 1], [0.5, 2.0]))
    g = MacGrid(10, 8, 2.0, 1.6)
    phi_k = 0.5 * np.tanh(rng.standard_normal(g.cell_shape))
    phi = phi_k + 0.01 * rng.standard_normal(g.cell_shape)
    mu = mu_from_phi(g, p, phi, phi_k)
    vk, w = random_faces(g, rng), random_faces(g, rng)
    checks = []
    worst_div, worst_skew = 0.0, 0.0
    for form in MomentumForm:
        prob = NsStepProblem(g, p, rho_of_phi(phi_k, p), rho_of_phi(phi, p), phi_k, mu,
                             compute_Jtilde(g, phi_k, mu, p), vk, w, 1e-2, form=form)
        sysm = assemble_momentum(prob)
        res = solve_saddle(sysm)
        worst_div = max(worst_div, res.div_inf / max(face_norm(g, res.v), 1e-300))
        x = sysm.op.pack(random_faces(g, rng))
        tx = sysm.transport @ x
        worst_skew = max(worst_skew, abs(x @ tx) / (np.linalg.norm(tx) * np.linalg.norm(x)))
    checks.append(Check("max |div v| / ||v|| after solve", worst_div, 1e-8))
    checks.append(Check("assembled transport annihilates v", worst_skew, 1e-13))

    g4 = MacGrid(4, 4, 1.0, 1.0)
    eta = rng.uniform(0.5, 2.0, g4.cell_shape)
    V = operators_for(g4).viscous(eta).toarray()
    checks.append(Check("viscous block symmetric", float(np.max(np.abs(V - V.T))), 1e-12))
    checks.append(Check("viscous block PSD (min eigenvalue, negated)",
                        max(0.0, -float(np.linalg.eigvalsh(0.5 * (V + V.T)).min())), 1e-12))

    pm = dataclasses.replace(p, rho1=2.0, rho2=2.0)
    rho = rho_of_phi(phi_k, pm)
    jt = compute_Jtilde(g, phi_k, mu, pm)
    a = assemble_momentum(NsStepProblem(g, pm, rho, rho_of_phi(phi, pm), phi_k, mu, jt, vk, w, 1e-2))
    b = assemble_momentum(NsStepProblem(g, pm, rho, rho, phi_k, mu, jt, vk, w, 1e-2,
                                        form=MomentumForm.MODEL_H))
    gap = max(abs(a.A - b.A).max(), float(np.max(np.abs(a.rhs - b.rhs))))
    checks.append(Check("matched densities: AGG assembly equals Model-H", gap, 1e-14))
    return checks


# -- energy --------------------------------------------------------------------

def suite_energy(steps: int = 10) -> list[Check]:
    from .scenarios import spinodal
    g = MacGrid(16, 16, 3.2, 3.2)
    phi0 = spinodal(g, seed=7, amplitude=0.3)
    checks = []
    for variant in ("AGG", "AppendixModel"):
        p = ModelParams(rho1=1.0, rho2=3.0)
        cfg = StepperConfig(h=1e-3, variant=variant)
        traj = run(g, p, initial_state(g, p, phi0), cfg, steps)
        E0 = abs(traj.initial.E_tot)
        checks.append(Check(f"{variant}: worst audit deficit / |E0|",
                            max(-a.residual for a in traj.audits) / E0, 1e-8))
        e = [r.E_tot for r in traj.all_reports]
        checks.append(Check(f"{variant}: E_tot increase / |E0|",
                            max(0.0, max(b - a for a, b in zip(e, e[1:]))) / E0, 1e-12))
        checks.append(Check(f"{variant}: mass drift / |Omega|",
                            max(abs(r.mass - traj.initial.mass) for r in traj.reports) / g.area,
                            1e-10))
    p = ModelParams(rho1=1.0, rho2=3.0)
    uni = np.full(g.cell_shape, 0.1)
    traj = run(g, p, initial_state(g, p, uni), StepperConfig(h=1e-3), 3)
    checks.append(Check("uniform state: |ineq_residual|",
                        max(abs(r.ineq_residual) for r in traj.reports), 1e-14))
    return checks


SUITES: dict[str, Callable[[], list[Check]]] = {
    "ops": suite_ops, "ch": suite_ch, "ns": suite_ns, "energy": suite_energy,
}
