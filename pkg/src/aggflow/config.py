"""Run configuration: a flat JSON object with dotted keys.

Every tunable has a default; unknown keys are rejected. ``echo`` writes the
fully resolved configuration, which loads back to the same values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .errors import AggflowError, ParseError, ValidationError
from .grid import MacGrid
from .model import CoefficientProfile, ModelParams, PotentialSpec, Variant
from .scenarios import Scenario
from .stepper import StepperConfig

DEFAULTS: dict[str, Any] = {
    "name": "run",
    "grid.nx": 64,
    "grid.ny": 64,
    "grid.Lx": 12.8,
    "grid.Ly": 12.8,
    "scenario.kind": "spinodal",
    "scenario.seed": 1,
    "scenario.mean": 0.0,
    "scenario.amplitude": 0.05,
    "scenario.center_x": None,
    "scenario.center_y": None,
    "scenario.radius": None,
    "scenario.height": None,
    "scenario.width": None,
    "scenario.peak": 0.95,
    "scenario.smoothing_sweeps": 0,
    "scenario.swirl": 0.0,
    "model.rho1": 1.0,
    "model.rho2": 3.0,
    "model.variant": "AGG",
    "model.potential.kind": "logarithmic",
    "model.potential.theta": 1.0,
    "model.potential.theta_c": 2.0,
    "model.potential.scale": 1.0,
    "model.a": 1.0,
    "model.mobility": 1.0,
    "model.viscosity": 1.0,
    "model.m0": 1e-3,
    "model.K": 1e3,
    "stepper.h": 1e-3,
    "stepper.steps": 100,
    "stepper.outer_tol": 1e-10,
    "stepper.outer_max_iter": 60,
    "stepper.under_relaxation": 0.7,
    "stepper.eps_audit": None,
    "stepper.newton_tol": 1e-10,
    "stepper.newton_max_iter": 25,
    "stepper.damping_min": 2.0 ** -20,
    "stepper.lin_tol": 1e-10,
    "stepper.max_retries": 5,
    "output.dir": "out",
    "output.snapshot_every": 0,
    "output.vtk": False,
    "output.diagnostics": True,
}

_INT_KEYS = {"grid.nx", "grid.ny", "scenario.seed", "scenario.smoothing_sweeps", "stepper.steps",
             "stepper.outer_max_iter", "stepper.newton_max_iter", "stepper.max_retries",
             "output.snapshot_every"}
_STR_KEYS = {"name", "scenario.kind", "model.variant", "model.potential.kind", "output.dir"}
_BOOL_KEYS = {"output.vtk", "output.diagnostics"}
_PROFILE_KEYS = {"model.a", "model.mobility", "model.viscosity"}


def _coerce(key: str, value: Any) -> Any:
    if value is None:
        if DEFAULTS[key] is None:
            return None
        raise ValidationError(f"{key}: null is not allowed")
    if key in _BOOL_KEYS:
        if not isinstance(value, bool):
            raise ValidationError(f"{key}: expected true/false, got {value!r}")
        return value
    if key in _STR_KEYS:
        if not isinstance(value, str):
            raise ValidationError(f"{key}: expected a string, got {value!r}")
        return value
    if isinstance(value, bool):
        raise ValidationError(f"{key}: expected a number, got {value!r}")
    if key in _INT_KEYS:
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            raise ValidationError(f"{key}: expected an integer, got {value!r}")
        return value
    if key in _PROFILE_KEYS and isinstance(value, dict):
        if set(value) != {"nodes", "values"}:
            raise ValidationError(f"{key}: table needs exactly 'nodes' and 'values'")
        try:
            return {"nodes": [float(x) for x in value["nodes"]],
                    "values": [float(x) for x in value["values"]]}
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"{key}: table entries must be numbers") from exc
    if not isinstance(value, (int, float)):
        raise ValidationError(f"{key}: expected a number, got {value!r}")
    return float(value)


def _profile(key: str, value) -> CoefficientProfile:
    try:
        if isinstance(value, dict):
            return CoefficientProfile.table(value["nodes"], value["values"])
        return CoefficientProfile.const(value)
    except AggflowError as exc:
        raise ValidationError(f"{key}: {exc}") from exc


@dataclass
class RunConfig:
    values: dict[str, Any]

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def grid(self) -> MacGrid:
        v = self.values
        return MacGrid(v["grid.nx"], v["grid.ny"], v["grid.Lx"], v["grid.Ly"])

    def params(self) -> ModelParams:
        v = self.values
        pot = PotentialSpec(kind=v["model.potential.kind"], theta=v["model.potential.theta"],
                            theta_c=v["model.potential.theta_c"], scale=v["model.potential.scale"])
        return ModelParams(
            rho1=v["model.rho1"], rho2=v["model.rho2"],
            a_coeff=_profile("model.a", v["model.a"]),
            mobility=_profile("model.mobility", v["model.mobility"]),
            viscosity=_profile("model.viscosity", v["model.viscosity"]),
            potential=pot, variant=Variant(v["model.variant"]), m0=v["model.m0"], K=v["model.K"])

    def stepper(self) -> StepperConfig:
        v = self.values
        return StepperConfig(
            h=v["stepper.h"], outer_tol=v["stepper.outer_tol"],
            outer_max_iter=v["stepper.outer_max_iter"],
            under_relaxation=v["stepper.under_relaxation"], eps_audit=v["stepper.eps_audit"],
            variant=Variant(v["model.variant"]), newton_tol=v["stepper.newton_tol"],
            newton_max_iter=v["stepper.newton_max_iter"], damping_min=v["stepper.damping_min"],
            lin_tol=v["stepper.lin_tol"], max_retries=v["stepper.max_retries"])

    def scenario(self) -> Scenario:
        v = self.values
        opts = {k.split(".", 1)[1]: val for k, val in v.items()
                if k.startswith("scenario.") and val is not None
                and k not in ("scenario.kind", "scenario.smoothing_sweeps")}
        return Scenario(name=v["name"], grid=self.grid(), params=self.params(),
                        kind=v["scenario.kind"], options=opts,
                        smoothing_sweeps=v["scenario.smoothing_sweeps"])

    def echo(self) -> str:
        return json.dumps(self.values, indent=2, sort_keys=True) + "\n"


def resolve(raw: dict[str, Any]) -> RunConfig:
    if not isinstance(raw, dict):
        raise ParseError("configuration must be a JSON object")
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        raise ValidationError(f"unknown configuration keys: {', '.join(unknown)}")
    values = dict(DEFAULTS)
    for key, val in raw.items():
        values[key] = _coerce(key, val)
    cfg = RunConfig(values)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    v = cfg.values
    if v["scenario.kind"] not in ("spinodal", "bubble", "stratified"):
        raise ValidationError(f"scenario.kind: unknown kind {v['scenario.kind']!r}")
    if v["stepper.steps"] < 0:
        raise ValidationError("stepper.steps must be >= 0")
    if v["output.snapshot_every"] < 0:
        raise ValidationError("output.snapshot_every must be >= 0")
    if not 0.0 < v["scenario.peak"] <= 1.0 - 1e-6:
        raise ValidationError("scenario.peak must lie in (0, 1 - 1e-6]")
    if v["scenario.seed"] < 0:
        raise ValidationError("scenario.seed must be >= 0")
    try:
        Variant(v["model.variant"])
    except ValueError as exc:
        raise ValidationError(f"model.variant: {exc}") from exc
    # constructing the objects runs their own bound checks
    for build in (cfg.grid, cfg.params, cfg.stepper):
        try:
            build()
        except ValidationError:
            raise
        except (AggflowError, ValueError) as exc:
            raise ValidationError(str(exc)) from exc


def loads(text: str) -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return resolve(raw)


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return loads(text)
