"""Initial data generators.

The spinodal generator uses a fixed 64-bit linear congruential generator so
the same seed gives the same field in any language::

    x_{n+1} = (6364136223846793005 * x_n + 1442695040888963407) mod 2**64
    u_n     = (x_n >> 11) * 2**-53                   # uniform in [0, 1)
    phi     = mean + amplitude * (2 u_n - 1)

with ``x_0 = seed``. Values fill the ``(nx, ny)`` cell array in C order
(x index outermost), one draw per cell, starting with ``x_1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .grid import FaceField, MacGrid, integral, laplace_neumann
from .model import ModelParams

LCG_A = 6364136223846793005
LCG_C = 1442695040888963407
_MASK = (1 << 64) - 1
PHI_BOUND = 1.0 - 1e-6
MAX_SMOOTHING_SWEEPS = 5


def lcg_uniform(seed: int, n: int) -> np.ndarray:
    out = np.empty(n)
    x = int(seed) & _MASK
    for i in range(n):
        x = (LCG_A * x + LCG_C) & _MASK
        out[i] = (x >> 11) * 2.0 ** -53
    return out


def spinodal(grid: MacGrid, seed: int, mean: float = 0.0, amplitude: float = 0.05) -> np.ndarray:
    u = lcg_uniform(seed, grid.nx * grid.ny).reshape(grid.cell_shape)
    return mean + amplitude * (2.0 * u - 1.0)


def bubble(grid: MacGrid, center: tuple[float, float], radius: float, width: float,
           peak: float = 0.95) -> np.ndarray:
    """phi = +peak inside the disc, -peak outside, tanh profile of the given width."""
    x, y = grid.cell_centers()
    r = np.hypot(x - center[0], y - center[1])
    return peak * np.tanh((radius - r) / (np.sqrt(2.0) * width))


def stratified(grid: MacGrid, height: float, width: float, peak: float = 0.95) -> np.ndarray:
    """phi = +peak above y = height, -peak below."""
    _, y = grid.cell_centers()
    return peak * np.tanh((y - height) / (np.sqrt(2.0) * width))


def swirl(grid: MacGrid, amplitude: float) -> FaceField:
    """Divergence-free single vortex from the node stream function
    amplitude * sin^2(pi x / Lx) sin^2(pi y / Ly); zero on the walls."""
    x = np.arange(grid.nx + 1) * grid.hx
    y = np.arange(grid.ny + 1) * grid.hy
    X, Y = np.meshgrid(x, y, indexing="ij")
    psi = amplitude * np.sin(np.pi * X / grid.Lx) ** 2 * np.sin(np.pi * Y / grid.Ly) ** 2
    return FaceField(np.diff(psi, axis=1) / grid.hy, -np.diff(psi, axis=0) / grid.hx).enforce_no_slip()


def smooth(grid: MacGrid, phi: np.ndarray, sweeps: int) -> np.ndarray:
    """Explicit Neumann heat-equation sweeps; conserve mass and obey the
    maximum principle."""
    if not 0 <= sweeps <= MAX_SMOOTHING_SWEEPS:
        raise ValidationError(f"smoothing sweeps must lie in [0, {MAX_SMOOTHING_SWEEPS}]")
    ones = FaceField(np.ones((grid.nx + 1, grid.ny)), np.ones((grid.nx, grid.ny + 1)))
    dt = 0.4 / (2.0 / grid.hx ** 2 + 2.0 / grid.hy ** 2)
    for _ in range(sweeps):
        phi = phi + dt * laplace_neumann(grid, phi, ones)
    return phi


def check_initial(grid: MacGrid, phi: np.ndarray) -> None:
    if not np.all(np.isfinite(phi)):
        raise ValidationError("initial phase field is not finite")
    if np.max(np.abs(phi)) > PHI_BOUND:
        raise ValidationError(f"initial |phi| exceeds {PHI_BOUND}")
    mean = integral(grid, phi) / grid.area
    if not -1.0 < mean < 1.0:
        raise ValidationError("initial mean of phi must lie in (-1, 1)")


@dataclass
class Scenario:
    name: str
    grid: MacGrid
    params: ModelParams
    kind: str = "spinodal"
    options: dict = field(default_factory=dict)
    smoothing_sweeps: int = 0

    def initial_phi(self) -> np.ndarray:
        g, o = self.grid, self.options
        if self.kind == "spinodal":
            phi = spinodal(g, o.get("seed", 1), o.get("mean", 0.0), o.get("amplitude", 0.05))
        elif self.kind == "bubble":
            center = (o.get("center_x", 0.5 * g.Lx), o.get("center_y", 0.5 * g.Ly))
            phi = bubble(g, center, o.get("radius", 0.25 * min(g.Lx, g.Ly)),
                         o.get("width", 2.0 * g.hx), o.get("peak", 0.95))
        elif self.kind == "stratified":
            phi = stratified(g, o.get("height", 0.5 * g.Ly), o.get("width", 2.0 * g.hy),
                             o.get("peak", 0.95))
        else:
            raise ValidationError(f"unknown scenario kind {self.kind!r}")
        phi = smooth(g, phi, self.smoothing_sweeps)
        check_initial(g, phi)
        return phi

    def initial_velocity(self) -> FaceField:
        amp = self.options.get("swirl", 0.0)
        return swirl(self.grid, amp) if amp else self.grid.zero_faces()
