"""Pure numpy implementations of the staggered-grid stencil kernels.

Layout: cell arrays are ``(nx, ny)``; x-face arrays ``(nx+1, ny)`` where face
``f`` separates cells ``f-1`` and ``f``; y-face arrays ``(nx, ny+1)``;
node arrays ``(nx+1, ny+1)``. All kernels take and return plain arrays.
The compiled extension exposes the same functions with the same semantics.
"""

import numpy as np

BACKEND = "python"


def div_faces(u, w, hx, hy):
    return (u[1:, :] - u[:-1, :]) / hx + (w[:, 1:] - w[:, :-1]) / hy


def grad_cells(p, hx, hy):
    nx, ny = p.shape
    gu = np.zeros((nx + 1, ny))
    gw = np.zeros((nx, ny + 1))
    gu[1:-1, :] = (p[1:, :] - p[:-1, :]) / hx
    gw[:, 1:-1] = (p[:, 1:] - p[:, :-1]) / hy
    return gu, gw


def laplace_neumann(c, ku, kw, hx, hy):
    gu, gw = grad_cells(c, hx, hy)
    return div_faces(ku * gu, kw * gw, hx, hy)


def center_to_face(c):
    nx, ny = c.shape
    cu = np.empty((nx + 1, ny))
    cw = np.empty((nx, ny + 1))
    cu[1:-1, :] = 0.5 * (c[1:, :] + c[:-1, :])
    cu[0, :] = c[0, :]
    cu[-1, :] = c[-1, :]
    cw[:, 1:-1] = 0.5 * (c[:, 1:] + c[:, :-1])
    cw[:, 0] = c[:, 0]
    cw[:, -1] = c[:, -1]
    return cu, cw


def face_to_center(u, w):
    return 0.5 * (u[1:, :] + u[:-1, :]), 0.5 * (w[:, 1:] + w[:, :-1])


def skew_convection(wu, ww, u, w, hx, hy):
    """Central skew-symmetric transport of (u, w) by the face flux (wu, ww).

    Returns div(W (x) v) - div(W) v / 2 on interior faces (zero on boundary
    faces). Fluxes through the walls are taken as zero.
    """
    vol2 = 2.0 * hx * hy
    cu = np.zeros_like(u)
    cw = np.zeros_like(w)

    # x-momentum control volumes around interior x-faces
    wc = 0.5 * (wu[:-1, :] + wu[1:, :])                 # cells
    acc = (wc[1:, :] * u[2:, :] - wc[:-1, :] * u[:-2, :]) * hy
    wn = 0.5 * (ww[:-1, :] + ww[1:, :])                 # nodes f=1..nx-1
    ui = u[1:-1, :]
    acc[:, :-1] += wn[:, 1:-1] * ui[:, 1:] * hx
    acc[:, 1:] -= wn[:, 1:-1] * ui[:, :-1] * hx
    cu[1:-1, :] = acc / vol2

    # y-momentum control volumes around interior y-faces
    wcy = 0.5 * (ww[:, :-1] + ww[:, 1:])                # cells
    acc = (wcy[:, 1:] * w[:, 2:] - wcy[:, :-1] * w[:, :-2]) * hx
    we = 0.5 * (wu[:, :-1] + wu[:, 1:])                 # nodes g=1..ny-1
    wi = w[:, 1:-1]
    acc[:-1, :] += we[1:-1, :] * wi[1:, :] * hy
    acc[1:, :] -= we[1:-1, :] * wi[:-1, :] * hy
    cw[:, 1:-1] = acc / vol2
    return cu, cw


def node_weights(nx, ny):
    om = np.ones((nx + 1, ny + 1))
    om[0, :] *= 0.5
    om[-1, :] *= 0.5
    om[:, 0] *= 0.5
    om[:, -1] *= 0.5
    return om


def eta_to_nodes(eta):
    """Average of the (up to four) cells touching each node."""
    nx, ny = eta.shape
    pad = np.zeros((nx + 2, ny + 2))
    cnt = np.zeros((nx + 2, ny + 2))
    pad[1:-1, 1:-1] = eta
    cnt[1:-1, 1:-1] = 1.0
    s = pad[:-1, :-1] + pad[1:, :-1] + pad[:-1, 1:] + pad[1:, 1:]
    n = cnt[:-1, :-1] + cnt[1:, :-1] + cnt[:-1, 1:] + cnt[1:, 1:]
    return s / n


def strain_rates(u, w, hx, hy):
    """Symmetric gradient: dxx, dyy at cells, dxy at nodes (no-slip ghosts)."""
    nx, ny = u.shape[0] - 1, u.shape[1]
    dxx = (u[1:, :] - u[:-1, :]) / hx
    dyy = (w[:, 1:] - w[:, :-1]) / hy
    dudy = np.empty((nx + 1, ny + 1))
    dudy[:, 1:-1] = (u[:, 1:] - u[:, :-1]) / hy
    dudy[:, 0] = 2.0 * u[:, 0] / hy
    dudy[:, -1] = -2.0 * u[:, -1] / hy
    dwdx = np.empty((nx + 1, ny + 1))
    dwdx[1:-1, :] = (w[1:, :] - w[:-1, :]) / hx
    dwdx[0, :] = 2.0 * w[0, :] / hx
    dwdx[-1, :] = -2.0 * w[-1, :] / hx
    return dxx, dyy, 0.5 * (dudy + dwdx)


def strain_dissipation(u, w, eta_c, eta_n, hx, hy):
    """sum 2 eta |D v|^2 over the grid (cells plus trapezoid-weighted nodes)."""
    nx, ny = eta_c.shape
    dxx, dyy, dxy = strain_rates(u, w, hx, hy)
    om = node_weights(nx, ny)
    cell = np.sum(2.0 * eta_c * (dxx * dxx + dyy * dyy))
    node = np.sum(4.0 * eta_n * om * dxy * dxy)
    return (cell + node) * hx * hy


def viscous_apply(u, w, eta_c, eta_n, hx, hy):
    """Face force whose pairing with v equals strain_dissipation(v)."""
    nx, ny = eta_c.shape
    dxx, dyy, dxy = strain_rates(u, w, hx, hy)
    txx = 2.0 * eta_c * dxx
    tyy = 2.0 * eta_c * dyy
    t = eta_n * node_weights(nx, ny) * dxy      # half of 4 eta om dxy, times 1/2 from dxy

    fu = np.zeros_like(u)
    fw = np.zeros_like(w)
    fu[1:-1, :] = -(txx[1:, :] - txx[:-1, :]) / hx
    fw[:, 1:-1] = -(tyy[:, 1:] - tyy[:, :-1]) / hy

    # d(dudy)/du : node g=j gets +c_j, node g=j+1 gets -c_{j+1}
    cy = np.full(ny + 1, 1.0 / hy)
    cy[0] = cy[-1] = 2.0 / hy
    gu = 2.0 * (t[:, :-1] * cy[:-1] - t[:, 1:] * cy[1:])
    fu[1:-1, :] += gu[1:-1, :]
    cx = np.full(nx + 1, 1.0 / hx)
    cx[0] = cx[-1] = 2.0 / hx
    gw = 2.0 * (t[:-1, :] * cx[:-1, None] - t[1:, :] * cx[1:, None])
    fw[:, 1:-1] += gw[:, 1:-1]
    return fu, fw
