"""Multi-run studies: temporal self-convergence and the matched-density
comparison against the Model-H path."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .grid import FaceField, MacGrid, cell_norm
from .model import ModelParams
from .stepper import StepperConfig, initial_state, iterate, run


@dataclass
class ConvergenceResult:
    hs: list[float]
    h_ref: float
    errors: list[float]
    pairwise_orders: list[float]
    fitted_order: float


def _steps_for(T: float, h: float) -> int:
    n = round(T / h)
    if n < 1 or abs(n * h - T) > 1e-9 * T:
        raise ValidationError(f"final time {T} is not a multiple of h = {h}")
    return n


def final_phi(grid: MacGrid, params: ModelParams, phi0: np.ndarray, cfg: StepperConfig,
              h: float, T: float, v0: FaceField | None = None) -> np.ndarray:
    c = dataclasses.replace(cfg, h=h, max_retries=0)
    traj = run(grid, params, initial_state(grid, params, phi0, v0), c, _steps_for(T, h))
    return traj.state.phi


def fitted_slope(hs, errors) -> float:
    """Least-squares slope of log(error) against log(h)."""
    x, y = np.log(np.asarray(hs, float)), np.log(np.asarray(errors, float))
    return float(np.polyfit(x, y, 1)[0])


def temporal_convergence(grid: MacGrid, params: ModelParams, phi0: np.ndarray,
                         cfg: StepperConfig, hs: list[float], h_ref: float, T: float,
                         v0: FaceField | None = None) -> ConvergenceResult:
    """L2 errors of phi(T) for each h against a run with step ``h_ref``.

    The reported order is the least-squares slope over all levels; the
    pairwise orders are biased by the reference error and are listed only
    for information.
    """
    ref = final_phi(grid, params, phi0, cfg, h_ref, T, v0)
    errors = [cell_norm(grid, final_phi(grid, params, phi0, cfg, h, T, v0) - ref) for h in hs]
    pairwise = [math.log(errors[i] / errors[i + 1]) / math.log(hs[i] / hs[i + 1])
                for i in range(len(hs) - 1)]
    return ConvergenceResult(hs=list(hs), h_ref=h_ref, errors=errors, pairwise_orders=pairwise,
                             fitted_order=fitted_slope(hs, errors))


@dataclass
class MatchedComparison:
    steps: int
    max_phi: float
    max_mu: float
    max_v: float

    @property
    def max_discrepancy(self) -> float:
        return max(self.max_phi, self.max_mu, self.max_v)


def matched_params(params: ModelParams) -> ModelParams:
    rho = params.rho_mean
    return dataclasses.replace(params, rho1=rho, rho2=rho)


def compare_matched(grid: MacGrid, params: ModelParams, phi0: np.ndarray, cfg: StepperConfig,
                    steps: int, other_cfg: StepperConfig | None = None,
                    other_model_h: bool = True) -> MatchedComparison:
    """Run the AGG path with equal densities beside a second path (the
    Model-H path by default) and record the largest field differences."""
    p = matched_params(params)
    other_cfg = cfg if other_cfg is None else other_cfg
    a = iterate(grid, p, initial_state(grid, p, phi0), cfg, steps)
    b = iterate(grid, p, initial_state(grid, p, phi0), other_cfg, steps, model_h=other_model_h)
    dphi = dmu = dv = 0.0
    for (sa, _), (sb, _) in zip(a, b):
        dphi = max(dphi, float(np.max(np.abs(sa.phi - sb.phi))))
        dmu = max(dmu, float(np.max(np.abs(sa.mu - sb.mu))))
        dv = max(dv, (sa.v - sb.v).max_abs())
    return MatchedComparison(steps=steps, max_phi=dphi, max_mu=dmu, max_v=dv)
