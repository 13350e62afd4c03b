"""Staggered (MAC) rectangular grid, the fields living on it, and the
discrete operators.

Scalars (phi, mu, g, rho) live at cell centres as ``(nx, ny)`` arrays.
Velocities and fluxes are :class:`FaceField` objects: x-components on the
``(nx+1, ny)`` vertical faces and y-components on the ``(nx, ny+1)``
horizontal faces. Velocity boundary faces are zero (no-slip); scalar
gradients vanish on boundary faces (homogeneous Neumann).

The operators are built so that, in the grid inner products,

* ``<div u, p> = -<u, grad p>`` for every ``u`` with zero boundary normals,
* ``<skew_convection(W, v), v> = 0`` for every no-slip ``v``,
* ``laplace_neumann`` is symmetric and integrates to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NonPositiveCoefficient, ShapeMismatch, ValidationError


@dataclass(frozen=True)
class MacGrid:
    nx: int
    ny: int
    Lx: float = 1.0
    Ly: float = 1.0

    def __post_init__(self) -> None:
        if self.nx < 4 or self.ny < 4:
            raise ValidationError("grid needs nx, ny >= 4")
        if not (self.Lx > 0 and self.Ly > 0):
            raise ValidationError("domain extents must be positive")

    @property
    def hx(self) -> float:
        return self.Lx / self.nx

    @property
    def hy(self) -> float:
        return self.Ly / self.ny

    @property
    def vol(self) -> float:
        return self.hx * self.hy

    @property
    def area(self) -> float:
        return self.Lx * self.Ly

    @property
    def cell_shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def x_faces(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.nx + 1) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def y_faces(self) -> tuple[np.ndarray, np.ndarray]:
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = np.arange(self.ny + 1) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def zeros(self) -> np.ndarray:
        return np.zeros(self.cell_shape)

    def zero_faces(self) -> FaceField:
        return FaceField(np.zeros((self.nx + 1, self.ny)), np.zeros((self.nx, self.ny + 1)))

    def check_cells(self, c: np.ndarray) -> np.ndarray:
        c = np.ascontiguousarray(c, dtype=float)
        if c.shape != self.cell_shape:
            raise ShapeMismatch(f"cell field has shape {c.shape}, grid wants {self.cell_shape}")
        return c

    def check_faces(self, v: FaceField) -> FaceField:
        if v.u.shape != (self.nx + 1, self.ny) or v.w.shape != (self.nx, self.ny + 1):
            raise ShapeMismatch(
                f"face field shapes {v.u.shape}, {v.w.shape} do not fit a "
                f"{self.nx}x{self.ny} grid")
        return v


@dataclass
class FaceField:
    u: np.ndarray
    w: np.ndarray

    def __post_init__(self) -> None:
        self.u = np.ascontiguousarray(self.u, dtype=float)
        self.w = np.ascontiguousarray(self.w, dtype=float)

    def copy(self) -> FaceField:
        return FaceField(self.u.copy(), self.w.copy())

    def __add__(self, other: FaceField) -> FaceField:
        return FaceField(self.u + other.u, self.w + other.w)

    def __sub__(self, other: FaceField) -> FaceField:
        return FaceField(self.u - other.u, self.w - other.w)

    def __mul__(self, a: float) -> FaceField:
        return FaceField(a * self.u, a * self.w)

    __rmul__ = __mul__

    def __neg__(self) -> FaceField:
        return FaceField(-self.u, -self.w)

    def scaled(self, cu: np.ndarray, cw: np.ndarray) -> FaceField:
        return FaceField(cu * self.u, cw * self.w)

    def max_abs(self) -> float:
        return float(max(np.max(np.abs(self.u)), np.max(np.abs(self.w))))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.w)))

    def enforce_no_slip(self) -> FaceField:
        self.u[0, :] = self.u[-1, :] = 0.0
        self.w[:, 0] = self.w[:, -1] = 0.0
        return self


# -- inner products and norms --------------------------------------------------

def integral(grid: MacGrid, c: np.ndarray) -> float:
    return float(np.sum(c)) * grid.vol


def cell_inner(grid: MacGrid, a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sum(a * b)) * grid.vol


def face_inner(grid: MacGrid, a: FaceField, b: FaceField) -> float:
    return (float(np.sum(a.u * b.u)) + float(np.sum(a.w * b.w))) * grid.vol


def cell_norm(grid: MacGrid, a: np.ndarray) -> float:
    return float(np.sqrt(cell_inner(grid, a, a)))


def face_norm(grid: MacGrid, a: FaceField) -> float:
    return float(np.sqrt(face_inner(grid, a, a)))


# -- operators -----------------------------------------------------------------

def div_faces(grid: MacGrid, v: FaceField) -> np.ndarray:
    grid.check_faces(v)
    return kernels.div_faces(v.u, v.w, grid.hx, grid.hy)


def grad_cells(grid: MacGrid, p: np.ndarray) -> FaceField:
    p = grid.check_cells(p)
    return FaceField(*kernels.grad_cells(p, grid.hx, grid.hy))


def _check_positive_faces(grid: MacGrid, k: FaceField) -> None:
    if np.any(k.u[1:-1, :] <= 0) or np.any(k.w[:, 1:-1] <= 0):
        raise NonPositiveCoefficient("face coefficient must be > 0 on interior faces")


def laplace_neumann(grid: MacGrid, c: np.ndarray, coeff: FaceField) -> np.ndarray:
    """div(coeff grad c) with zero boundary flux."""
    c = grid.check_cells(c)
    grid.check_faces(coeff)
    _check_positive_faces(grid, coeff)
    return kernels.laplace_neumann(c, coeff.u, coeff.w, grid.hx, grid.hy)


def interp_center_to_face(grid: MacGrid, c: np.ndarray) -> FaceField:
    """Two-point averages; boundary faces copy the adjacent cell."""
    c = grid.check_cells(c)
    return FaceField(*kernels.center_to_face(c))


def interp_face_to_center(grid: MacGrid, v: FaceField) -> tuple[np.ndarray, np.ndarray]:
    grid.check_faces(v)
    return kernels.face_to_center(v.u, v.w)


def skew_convection(grid: MacGrid, flux: FaceField, v: FaceField) -> FaceField:
    """div(W (x) v) - div(W) v / 2 for a face mass flux W."""
    grid.check_faces(flux)
    grid.check_faces(v)
    return FaceField(*kernels.skew_convection(flux.u, flux.w, v.u, v.w, grid.hx, grid.hy))


def skew_flux_term(grid: MacGrid, jt: FaceField, v: FaceField) -> FaceField:
    """(J.grad) v + div(J) v / 2.

    Since (J.grad) v = div(J (x) v) - div(J) v this is the same skew
    operator as :func:`skew_convection` with J as the transporting flux.
    """
    return skew_convection(grid, jt, v)


def _eta_fields(grid: MacGrid, eta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    eta = grid.check_cells(eta)
    if np.any(eta <= 0):
        raise NonPositiveCoefficient("viscosity must be > 0")
    return eta, np.ascontiguousarray(kernels.eta_to_nodes(eta))


def strain_dissipation(grid: MacGrid, v: FaceField, eta: np.ndarray) -> float:
    """Discrete integral of 2 eta |D v|^2 for cell-centred viscosity ``eta``."""
    grid.check_faces(v)
    eta_c, eta_n = _eta_fields(grid, eta)
    return float(kernels.strain_dissipation(v.u, v.w, eta_c, eta_n, grid.hx, grid.hy))


def viscous_force(grid: MacGrid, v: FaceField, eta: np.ndarray) -> FaceField:
    """-div(2 eta D v) on interior faces; pairs with v to strain_dissipation."""
    grid.check_faces(v)
    eta_c, eta_n = _eta_fields(grid, eta)
    return FaceField(*kernels.viscous_apply(v.u, v.w, eta_c, eta_n, grid.hx, grid.hy))


def advect_conservative(grid: MacGrid, v: FaceField, c: np.ndarray) -> np.ndarray:
    """div(c_face v): the transport term v.grad c in conservation form."""
    cf = interp_center_to_face(grid, c)
    return div_faces(grid, v.scaled(cf.u, cf.w))
