"""Sparse matrix forms of the grid operators acting on the velocity unknowns.

Unknowns are the interior faces only: the ``(nx-1)*ny`` interior x-faces
followed by the ``nx*(ny-1)`` interior y-faces, both in C order.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import kernels
from .grid import FaceField, MacGrid


class VelocityOperators:
    """Operator matrices for one grid; obtain via :func:`operators_for`."""

    def __init__(self, grid: MacGrid):
        self.grid = grid
        nx, ny = grid.nx, grid.ny
        self.nu = (nx - 1) * ny
        self.nw = nx * (ny - 1)
        self.n = self.nu + self.nw
        self.nc = nx * ny
        self.uid = np.arange(self.nu).reshape(nx - 1, ny)
        self.wid = self.nu + np.arange(self.nw).reshape(nx, ny - 1)
        self.cid = np.arange(self.nc).reshape(nx, ny)
        self.div = self._build_div()
        self.grad = (-self.div.T).tocsr()
        self.sxx, self.syy, self.sxy = self._build_strain()
        self.px, self.py = self._build_averaging()

    # -- packing -----------------------------------------------------------------
    def pack(self, v: FaceField) -> np.ndarray:
        return np.concatenate([v.u[1:-1, :].ravel(), v.w[:, 1:-1].ravel()])

    def unpack(self, x: np.ndarray) -> FaceField:
        g = self.grid
        v = g.zero_faces()
        v.u[1:-1, :] = x[: self.nu].reshape(g.nx - 1, g.ny)
        v.w[:, 1:-1] = x[self.nu:].reshape(g.nx, g.ny - 1)
        return v

    def pack_cells_to_faces(self, c: np.ndarray) -> np.ndarray:
        cu, cw = kernels.center_to_face(np.ascontiguousarray(c, dtype=float))
        return np.concatenate([cu[1:-1, :].ravel(), cw[:, 1:-1].ravel()])

    # -- fixed operators ---------------------------------------------------------
    def _build_div(self) -> sp.csr_matrix:
        g = self.grid
        nx, ny = g.nx, g.ny
        rows, cols, vals = [], [], []
        # x-face f (1..nx-1) feeds cell f-1 with +1/hx and cell f with -1/hx
        f, j = np.meshgrid(np.arange(1, nx), np.arange(ny), indexing="ij")
        col = self.uid[f - 1, j].ravel()
        rows += [self.cid[f - 1, j].ravel(), self.cid[f, j].ravel()]
        cols += [col, col]
        vals += [np.full(col.size, 1.0 / g.hx), np.full(col.size, -1.0 / g.hx)]
        i, gg = np.meshgrid(np.arange(nx), np.arange(1, ny), indexing="ij")
        col = self.wid[i, gg - 1].ravel()
        rows += [self.cid[i, gg - 1].ravel(), self.cid[i, gg].ravel()]
        cols += [col, col]
        vals += [np.full(col.size, 1.0 / g.hy), np.full(col.size, -1.0 / g.hy)]
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.nc, self.n))

    def _build_strain(self):
        g = self.grid
        nx, ny = g.nx, g.ny
        sxx = self.div[:, : self.nu].copy()
        sxx = sp.hstack([sxx, sp.csr_matrix((self.nc, self.nw))]).tocsr()
        syy = sp.hstack([sp.csr_matrix((self.nc, self.nu)), self.div[:, self.nu:]]).tocsr()
        nid = np.arange((nx + 1) * (ny + 1)).reshape(nx + 1, ny + 1)
        rows, cols, vals = [], [], []
        # dxy = (dudy + dwdx) / 2 at nodes; wall ghosts are reflections
        for f in range(1, nx):
            for gn in range(ny + 1):
                if gn > 0:
                    c = 1.0 / g.hy if gn < ny else 2.0 / g.hy
                    rows.append(nid[f, gn]); cols.append(self.uid[f - 1, gn - 1]); vals.append(-0.5 * c)
                if gn < ny:
                    c = 1.0 / g.hy if gn > 0 else 2.0 / g.hy
                    rows.append(nid[f, gn]); cols.append(self.uid[f - 1, gn]); vals.append(0.5 * c)
        for i in range(nx):
            for gn in range(1, ny):
                # node (f, gn) with f = i and f = i + 1
                c = 1.0 / g.hx if i + 1 < nx else 2.0 / g.hx
                rows.append(nid[i + 1, gn]); cols.append(self.wid[i, gn - 1]); vals.append(-0.5 * c)
                c = 1.0 / g.hx if i > 0 else 2.0 / g.hx
                rows.append(nid[i, gn]); cols.append(self.wid[i, gn - 1]); vals.append(0.5 * c)
        sxy = sp.csr_matrix((vals, (rows, cols)), shape=((nx + 1) * (ny + 1), self.n))
        return sxx, syy, sxy

    def _build_averaging(self):
        """Cell averages of the x- and y-face unknowns (boundary faces are zero)."""
        g = self.grid
        nx, ny = g.nx, g.ny
        f, j = np.meshgrid(np.arange(1, nx), np.arange(ny), indexing="ij")
        col = self.uid[f - 1, j].ravel()
        rows = np.concatenate([self.cid[f - 1, j].ravel(), self.cid[f, j].ravel()])
        px = sp.csr_matrix((np.full(2 * col.size, 0.5), (rows, np.concatenate([col, col]))),
                           shape=(self.nc, self.n))
        i, gg = np.meshgrid(np.arange(nx), np.arange(1, ny), indexing="ij")
        col = self.wid[i, gg - 1].ravel()
        rows = np.concatenate([self.cid[i, gg - 1].ravel(), self.cid[i, gg].ravel()])
        py = sp.csr_matrix((np.full(2 * col.size, 0.5), (rows, np.concatenate([col, col]))),
                           shape=(self.nc, self.n))
        return px, py

    # -- coefficient-dependent operators ----------------------------------------
    def laplacian(self, k_faces: np.ndarray) -> sp.csr_matrix:
        """Cell matrix of div(k grad .) given packed interior face values of k."""
        return (self.div @ sp.diags(k_faces) @ self.grad).tocsr()

    def viscous(self, eta: np.ndarray) -> sp.csr_matrix:
        g = self.grid
        eta = np.asarray(eta, dtype=float)
        eta_n = kernels.eta_to_nodes(eta) * kernels.node_weights(g.nx, g.ny)
        dc = sp.diags(2.0 * eta.ravel())
        dn = sp.diags(4.0 * eta_n.ravel())
        return (self.sxx.T @ dc @ self.sxx + self.syy.T @ dc @ self.syy
                + self.sxy.T @ dn @ self.sxy).tocsr()

    def skew(self, flux: FaceField) -> sp.csr_matrix:
        """Matrix of v -> skew_convection(flux, v) on the unknowns."""
        g = self.grid
        nx, ny = g.nx, g.ny
        vol2 = 2.0 * g.vol
        wu, ww = flux.u, flux.w
        rows, cols, vals = [], [], []

        wc = 0.5 * (wu[:-1, :] + wu[1:, :])          # cell centres
        wn = 0.5 * (ww[:-1, :] + ww[1:, :])          # nodes f = 1..nx-1
        f, j = np.meshgrid(np.arange(1, nx), np.arange(ny), indexing="ij")
        r = self.uid[f - 1, j]
        m = f + 1 <= nx - 1
        rows.append(r[m]); cols.append(self.uid[f[m], j[m]]); vals.append(wc[f[m], j[m]] * g.hy / vol2)
        m = f - 1 >= 1
        rows.append(r[m]); cols.append(self.uid[f[m] - 2, j[m]]); vals.append(-wc[f[m] - 1, j[m]] * g.hy / vol2)
        m = j + 1 <= ny - 1
        rows.append(r[m]); cols.append(self.uid[f[m] - 1, j[m] + 1]); vals.append(wn[f[m] - 1, j[m] + 1] * g.hx / vol2)
        m = j >= 1
        rows.append(r[m]); cols.append(self.uid[f[m] - 1, j[m] - 1]); vals.append(-wn[f[m] - 1, j[m]] * g.hx / vol2)

        wcy = 0.5 * (ww[:, :-1] + ww[:, 1:])
        we = 0.5 * (wu[:, :-1] + wu[:, 1:])          # nodes g = 1..ny-1
        i, gg = np.meshgrid(np.arange(nx), np.arange(1, ny), indexing="ij")
        r = self.wid[i, gg - 1]
        m = gg + 1 <= ny - 1
        rows.append(r[m]); cols.append(self.wid[i[m], gg[m]]); vals.append(wcy[i[m], gg[m]] * g.hx / vol2)
        m = gg - 1 >= 1
        rows.append(r[m]); cols.append(self.wid[i[m], gg[m] - 2]); vals.append(-wcy[i[m], gg[m] - 1] * g.hx / vol2)
        m = i + 1 <= nx - 1
        rows.append(r[m]); cols.append(self.wid[i[m] + 1, gg[m] - 1]); vals.append(we[i[m] + 1, gg[m] - 1] * g.hy / vol2)
        m = i >= 1
        rows.append(r[m]); cols.append(self.wid[i[m] - 1, gg[m] - 1]); vals.append(-we[i[m], gg[m] - 1] * g.hy / vol2)

        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n, self.n))


@lru_cache(maxsize=16)
def operators_for(grid: MacGrid) -> VelocityOperators:
    return VelocityOperators(grid)
