# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled staggered-grid stencil kernels.

Same functions and array layout as :mod:`aggflow._kernels_py`.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def div_faces(double[:, ::1] u, double[:, ::1] w, double hx, double hy):
    cdef Py_ssize_t nx = w.shape[0], ny = u.shape[1], i, j
    out = np.empty((nx, ny))
    cdef double[:, ::1] o = out
    for i in range(nx):
        for j in range(ny):
            o[i, j] = (u[i + 1, j] - u[i, j]) / hx + (w[i, j + 1] - w[i, j]) / hy
    return out


def grad_cells(double[:, ::1] p, double hx, double hy):
    cdef Py_ssize_t nx = p.shape[0], ny = p.shape[1], i, j
    gu_a = np.zeros((nx + 1, ny))
    gw_a = np.zeros((nx, ny + 1))
    cdef double[:, ::1] gu = gu_a
    cdef double[:, ::1] gw = gw_a
    for i in range(1, nx):
        for j in range(ny):
            gu[i, j] = (p[i, j] - p[i - 1, j]) / hx
    for i in range(nx):
        for j in range(1, ny):
            gw[i, j] = (p[i, j] - p[i, j - 1]) / hy
    return gu_a, gw_a


def laplace_neumann(double[:, ::1] c, double[:, ::1] ku, double[:, ::1] kw,
                    double hx, double hy):
    cdef Py_ssize_t nx = c.shape[0], ny = c.shape[1], i, j
    cdef double fe, fw, fn, fs
    out = np.empty((nx, ny))
    cdef double[:, ::1] o = out
    for i in range(nx):
        for j in range(ny):
            fe = ku[i + 1, j] * (c[i + 1, j] - c[i, j]) / hx if i + 1 < nx else 0.0
            fw = ku[i, j] * (c[i, j] - c[i - 1, j]) / hx if i > 0 else 0.0
            fn = kw[i, j + 1] * (c[i, j + 1] - c[i, j]) / hy if j + 1 < ny else 0.0
            fs = kw[i, j] * (c[i, j] - c[i, j - 1]) / hy if j > 0 else 0.0
            o[i, j] = (fe - fw) / hx + (fn - fs) / hy
    return out


def center_to_face(double[:, ::1] c):
    cdef Py_ssize_t nx = c.shape[0], ny = c.shape[1], i, j
    cu_a = np.empty((nx + 1, ny))
    cw_a = np.empty((nx, ny + 1))
    cdef double[:, ::1] cu = cu_a
    cdef double[:, ::1] cw = cw_a
    for j in range(ny):
        cu[0, j] = c[0, j]
        cu[nx, j] = c[nx - 1, j]
        for i in range(1, nx):
            cu[i, j] = 0.5 * (c[i, j] + c[i - 1, j])
    for i in range(nx):
        cw[i, 0] = c[i, 0]
        cw[i, ny] = c[i, ny - 1]
        for j in range(1, ny):
            cw[i, j] = 0.5 * (c[i, j] + c[i, j - 1])
    return cu_a, cw_a


def face_to_center(double[:, ::1] u, double[:, ::1] w):
    cdef Py_ssize_t nx = w.shape[0], ny = u.shape[1], i, j
    uc_a = np.empty((nx, ny))
    wc_a = np.empty((nx, ny))
    cdef double[:, ::1] uc = uc_a
    cdef double[:, ::1] wc = wc_a
    for i in range(nx):
        for j in range(ny):
            uc[i, j] = 0.5 * (u[i + 1, j] + u[i, j])
            wc[i, j] = 0.5 * (w[i, j + 1] + w[i, j])
    return uc_a, wc_a


def skew_convection(double[:, ::1] wu, double[:, ::1] ww,
                    double[:, ::1] u, double[:, ::1] w, double hx, double hy):
    cdef Py_ssize_t nx = w.shape[0], ny = u.shape[1], f, j, i, g
    cdef double vol2 = 2.0 * hx * hy, acc, fl
    cu_a = np.zeros((nx + 1, ny))
    cw_a = np.zeros((nx, ny + 1))
    cdef double[:, ::1] cu = cu_a
    cdef double[:, ::1] cw = cw_a
    for f in range(1, nx):
        for j in range(ny):
            acc = 0.5 * (wu[f, j] + wu[f + 1, j]) * u[f + 1, j] * hy
            acc -= 0.5 * (wu[f - 1, j] + wu[f, j]) * u[f - 1, j] * hy
            if j + 1 < ny:
                fl = 0.5 * (ww[f - 1, j + 1] + ww[f, j + 1])
                acc += fl * u[f, j + 1] * hx
            if j > 0:
                fl = 0.5 * (ww[f - 1, j] + ww[f, j])
                acc -= fl * u[f, j - 1] * hx
            cu[f, j] = acc / vol2
    for i in range(nx):
        for g in range(1, ny):
            acc = 0.5 * (ww[i, g] + ww[i, g + 1]) * w[i, g + 1] * hx
            acc -= 0.5 * (ww[i, g - 1] + ww[i, g]) * w[i, g - 1] * hx
            if i + 1 < nx:
                fl = 0.5 * (wu[i + 1, g - 1] + wu[i + 1, g])
                acc += fl * w[i + 1, g] * hy
            if i > 0:
                fl = 0.5 * (wu[i, g - 1] + wu[i, g])
                acc -= fl * w[i - 1, g] * hy
            cw[i, g] = acc / vol2
    return cu_a, cw_a


cdef inline double _om(Py_ssize_t f, Py_ssize_t g, Py_ssize_t nx, Py_ssize_t ny) nogil:
    cdef double o = 1.0
    if f == 0 or f == nx:
        o *= 0.5
    if g == 0 or g == ny:
        o *= 0.5
    return o


cdef void _dxy(double[:, ::1] u, double[:, ::1] w, double hx, double hy,
               double[:, ::1] out) nogil:
    cdef Py_ssize_t nx = w.shape[0], ny = u.shape[1], f, g
    cdef double dudy, dwdx
    for f in range(nx + 1):
        for g in range(ny + 1):
            if g == 0:
                dudy = 2.0 * u[f, 0] / hy
            elif g == ny:
                dudy = -2.0 * u[f, ny - 1] / hy
            else:
                dudy = (u[f, g] - u[f, g - 1]) / hy
            if f == 0:
                dwdx = 2.0 * w[0, g] / hx
            elif f == nx:
                dwdx = -2.0 * w[nx - 1, g] / hx
            else:
                dwdx = (w[f, g] - w[f - 1, g]) / hx
            out[f, g] = 0.5 * (dudy + dwdx)


def strain_rates(double[:, ::1] u, double[:, ::1] w, double hx, double hy):
    cdef Py_ssize_t nx = w.shape[0], ny = u.shape[1], i, j
    dxx_a = np.empty((nx, ny))
    dyy_a = np.empty((nx, ny))
    dxy_a = np.empty((nx + 1, ny + 1))
    cdef double[:, ::1] dxx = dxx_a
    cdef double[:, ::1] dyy = dyy_a
    for i in range(nx):
        for j in range(ny):
            dxx[i, j] = (u[i + 1, j] - u[i, j]) / hx
            dyy[i, j] = (w[i, j + 1] - w[i, j]) / hy
    _dxy(u, w, hx, hy, dxy_a)
    return dxx_a, dyy_a, dxy_a


def strain_dissipation(double[:, ::1] u, double[:, ::1] w, double[:, ::1] eta_c,
                       double[:, ::1] eta_n, double hx, double hy):
    cdef Py_ssize_t nx = w.shape[0], ny = u.shape[1], i, j
    cdef double a, b, cell = 0.0, node = 0.0
    dxy_a = np.empty((nx + 1, ny + 1))
    cdef double[:, ::1] dxy = dxy_a
    _dxy(u, w, hx, hy, dxy)
    for i in range(nx):
        for j in range(ny):
            a = (u[i + 1, j] - u[i, j]) / hx
            b = (w[i, j + 1] - w[i, j]) / hy
            cell += 2.0 * eta_c[i, j] * (a * a + b * b)
    for i in range(nx + 1):
        for j in range(ny + 1):
            node += 4.0 * eta_n[i, j] * _om(i, j, nx, ny) * dxy[i, j] * dxy[i, j]
    return (cell + node) * hx * hy


def viscous_apply(double[:, ::1] u, double[:, ::1] w, double[:, ::1] eta_c,
                  double[:, ::1] eta_n, double hx, double hy):
    cdef Py_ssize_t nx = w.shape[0], ny = u.shape[1], f, j, i, g
    cdef double cj, cj1, t0, t1
    dxy_a = np.empty((nx + 1, ny + 1))
    cdef double[:, ::1] dxy = dxy_a
    _dxy(u, w, hx, hy, dxy)
    fu_a = np.zeros((nx + 1, ny))
    fw_a = np.zeros((nx, ny + 1))
    cdef double[:, ::1] fu = fu_a
    cdef double[:, ::1] fw = fw_a
    for f in range(1, nx):
        for j in range(ny):
            t1 = 2.0 * eta_c[f, j] * (u[f + 1, j] - u[f, j]) / hx
            t0 = 2.0 * eta_c[f - 1, j] * (u[f, j] - u[f - 1, j]) / hx
            cj = 2.0 / hy if j == 0 else 1.0 / hy
            cj1 = 2.0 / hy if j + 1 == ny else 1.0 / hy
            fu[f, j] = -(t1 - t0) / hx + 2.0 * (
                eta_n[f, j] * _om(f, j, nx, ny) * dxy[f, j] * cj
                - eta_n[f, j + 1] * _om(f, j + 1, nx, ny) * dxy[f, j + 1] * cj1)
    for i in range(nx):
        for g in range(1, ny):
            t1 = 2.0 * eta_c[i, g] * (w[i, g + 1] - w[i, g]) / hy
            t0 = 2.0 * eta_c[i, g - 1] * (w[i, g] - w[i, g - 1]) / hy
            cj = 2.0 / hx if i == 0 else 1.0 / hx
            cj1 = 2.0 / hx if i + 1 == nx else 1.0 / hx
            fw[i, g] = -(t1 - t0) / hy + 2.0 * (
                eta_n[i, g] * _om(i, g, nx, ny) * dxy[i, g] * cj
                - eta_n[i + 1, g] * _om(i + 1, g, nx, ny) * dxy[i + 1, g] * cj1)
    return fu_a, fw_a
