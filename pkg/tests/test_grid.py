import numpy as np
import pytest

from aggflow import grid as G
from aggflow import kernels
from aggflow.errors import NonPositiveCoefficient, ShapeMismatch, ValidationError
from aggflow.grid import FaceField, MacGrid

from conftest import random_noslip


def ones_faces(g):
    return FaceField(np.ones((g.nx + 1, g.ny)), np.ones((g.nx, g.ny + 1)))


def test_grid_geometry():
    g = MacGrid(8, 4, 2.0, 1.0)
    assert (g.hx, g.hy, g.vol, g.area) == (0.25, 0.25, 0.0625, 2.0)
    with pytest.raises(ValidationError):
        MacGrid(3, 8)
    x, y = g.cell_centers()
    assert x[0, 0] == 0.125 and y[0, -1] == 0.875


def test_shape_checks():
    g = MacGrid(5, 6)
    with pytest.raises(ShapeMismatch):
        G.div_faces(g, FaceField(np.zeros((5, 6)), np.zeros((5, 7))))
    with pytest.raises(ShapeMismatch):
        G.grad_cells(g, np.zeros((6, 5)))


def test_div_constant_and_telescoping(rng):
    g = MacGrid(7, 5, 1.4, 1.0)
    c = FaceField(np.full((8, 5), 3.0), np.full((7, 6), -2.0))
    np.testing.assert_allclose(G.div_faces(g, c)[1:-1, 1:-1], 0.0, atol=1e-14)
    for _ in range(20):
        u = random_noslip(g, rng)
        assert abs(G.integral(g, G.div_faces(g, u))) <= 1e-13 * G.face_norm(g, u)


def test_grad_constant_and_linear():
    g = MacGrid(6, 4, 1.5, 1.0)
    assert G.grad_cells(g, np.full(g.cell_shape, 2.0)).max_abs() == 0.0
    x, _ = g.cell_centers()
    gr = G.grad_cells(g, x)
    np.testing.assert_allclose(gr.u[1:-1], 1.0, rtol=1e-14)
    assert np.all(gr.u[[0, -1]] == 0.0) and np.all(gr.w == 0.0)


def test_adjointness_100_pairs(rng):
    for _ in range(100):
        g = MacGrid(int(rng.integers(4, 10)), int(rng.integers(4, 10)), rng.uniform(.5, 2), rng.uniform(.5, 2))
        u = random_noslip(g, rng)
        p = rng.standard_normal(g.cell_shape)
        lhs = G.cell_inner(g, G.div_faces(g, u), p) + G.face_inner(g, u, G.grad_cells(g, p))
        assert abs(lhs) <= 1e-13 * G.face_norm(g, u) * np.abs(p).max() / min(g.hx, g.hy) * g.area


def test_laplacian_properties(rng):
    g = MacGrid(9, 6, 1.0, 0.7)
    k = FaceField(rng.uniform(.5, 2, (10, 6)), rng.uniform(.5, 2, (9, 7)))
    assert np.max(np.abs(G.laplace_neumann(g, np.full(g.cell_shape, 4.0), k))) == 0.0
    c, d = rng.standard_normal((2, *g.cell_shape))
    lc, ld = G.laplace_neumann(g, c, k), G.laplace_neumann(g, d, k)
    assert abs(G.cell_inner(g, lc, d) - G.cell_inner(g, c, ld)) <= 1e-13 * np.abs(lc).sum() * g.vol
    assert abs(G.integral(g, lc)) <= 1e-13 * np.abs(lc).sum() * g.vol
    assert G.cell_inner(g, lc, c) <= 0.0
    bad = k.copy()
    bad.u[3, 2] = 0.0
    with pytest.raises(NonPositiveCoefficient):
        G.laplace_neumann(g, c, bad)


def test_laplacian_hand_stencil():
    # unit coefficient, 4x4 unit-spacing grid: interior cell sees 4 neighbours,
    # corner cell sees 2 (Neumann walls contribute nothing)
    g = MacGrid(4, 4, 4.0, 4.0)
    c = np.zeros((4, 4))
    c[1, 1] = 1.0
    lap = G.laplace_neumann(g, c, ones_faces(g))
    assert lap[1, 1] == -4.0 and lap[0, 1] == 1.0 and lap[1, 2] == 1.0 and lap[2, 2] == 0.0
    c = np.zeros((4, 4))
    c[0, 0] = 1.0
    assert G.laplace_neumann(g, c, ones_faces(g))[0, 0] == -2.0


def test_interpolation_constants_linear_bounds(rng):
    g = MacGrid(6, 5, 1.2, 1.0)
    f = G.interp_center_to_face(g, np.full(g.cell_shape, 1.7))
    assert np.all(f.u == 1.7) and np.all(f.w == 1.7)
    x, _ = g.cell_centers()
    xf, _ = g.x_faces()
    np.testing.assert_allclose(G.interp_center_to_face(g, x).u[1:-1], xf[1:-1], rtol=1e-14)
    c = rng.standard_normal(g.cell_shape)
    f = G.interp_center_to_face(g, c)
    assert f.u.max() <= c.max() and f.w.min() >= c.min()
    v = FaceField(np.full((7, 5), 2.0), np.full((6, 6), -1.0))
    uc, wc = G.interp_face_to_center(g, v)
    assert np.all(uc == 2.0) and np.all(wc == -1.0)


def test_skew_annihilation_200_pairs(rng):
    for _ in range(200):
        g = MacGrid(int(rng.integers(4, 10)), int(rng.integers(4, 10)), rng.uniform(.5, 2), rng.uniform(.5, 2))
        w, v = random_noslip(g, rng), random_noslip(g, rng)
        c = G.skew_convection(g, w, v)
        scale = G.face_norm(g, w) * G.face_norm(g, v) ** 2 / (min(g.hx, g.hy) * g.vol)
        assert abs(G.face_inner(g, c, v)) <= 1e-13 * scale
        j = G.grad_cells(g, rng.standard_normal(g.cell_shape))
        t = G.skew_flux_term(g, j, v)
        assert abs(G.face_inner(g, t, v)) <= 1e-13 * G.face_norm(g, t) * G.face_norm(g, v)


def test_skew_zero_inputs(rng):
    g = MacGrid(5, 5)
    v = random_noslip(g, rng)
    assert G.skew_convection(g, g.zero_faces(), v).max_abs() == 0.0
    assert G.skew_convection(g, v, g.zero_faces()).max_abs() == 0.0


def test_skew_convection_is_second_order_for_uniform_transport():
    # div-free uniform x-transport: C = W du/dx, error shrinks 4x per refinement
    errs = []
    for n in (16, 32, 64):
        g = MacGrid(n, 4, 1.0, 1.0)
        W = FaceField(np.ones((n + 1, 4)), np.zeros((n, 5)))
        xf, _ = g.x_faces()
        v = FaceField(np.sin(np.pi * xf) ** 2, np.zeros((n, 5)))
        c = G.skew_convection(g, W, v)
        exact = np.pi * np.sin(2 * np.pi * xf)
        errs.append(np.max(np.abs(c.u[2:-2] - exact[2:-2])))
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_strain_dissipation_shear_hand_value():
    # u = y on interior x-faces of a 4x4 unit grid, eta = 1. With reflected
    # wall ghosts du/dy is 1 at interior nodes, 2*u_wall/hy at the walls.
    g = MacGrid(4, 4, 1.0, 1.0)
    _, yf = g.x_faces()
    v = FaceField(yf.copy(), np.zeros((4, 5))).enforce_no_slip()
    eta = np.ones(g.cell_shape)
    d = G.strain_dissipation(g, v, eta)
    # diss = (sum 2 eta dxx^2 over cells + sum 4 eta_n w_n dxy^2 over nodes) vol;
    # dxx is nonzero next to the x-walls where u drops to zero
    hx = hy = 0.25
    dxx = np.diff(v.u, axis=0) / hx
    u = v.u[1:-1, :]
    dudy = np.zeros((3, 5))
    dudy[:, 1:-1] = (u[:, 1:] - u[:, :-1]) / hy
    dudy[:, 0] = 2 * u[:, 0] / hy
    dudy[:, -1] = -2 * u[:, -1] / hy
    weights = np.ones(5)
    weights[[0, -1]] = 0.5
    expected = (np.sum(2 * dxx ** 2) + np.sum(4 * (0.5 * dudy) ** 2 * weights[None, :])) * g.vol
    assert d == pytest.approx(expected, rel=1e-14)


def test_strain_dissipation_quadratic_and_zero(rng):
    g = MacGrid(6, 5)
    v = random_noslip(g, rng)
    eta = rng.uniform(.5, 2, g.cell_shape)
    assert G.strain_dissipation(g, g.zero_faces(), eta) == 0.0
    assert G.strain_dissipation(g, v * 2.0, eta) == pytest.approx(4 * G.strain_dissipation(g, v, eta))
    assert G.strain_dissipation(g, v, eta) > 0
    with pytest.raises(NonPositiveCoefficient):
        G.strain_dissipation(g, v, -eta)


def test_viscous_force_pairs_with_dissipation(rng):
    g = MacGrid(7, 6, 1.1, 0.9)
    v = random_noslip(g, rng)
    eta = rng.uniform(.5, 2, g.cell_shape)
    assert G.face_inner(g, G.viscous_force(g, v, eta), v) == pytest.approx(
        G.strain_dissipation(g, v, eta), rel=1e-13)


def test_linearity(rng):
    g = MacGrid(6, 7)
    a, b = 0.7, -1.3
    u, w, v = (random_noslip(g, rng) for _ in range(3))
    lhs = G.skew_convection(g, w, u * a + v * b)
    rhs = G.skew_convection(g, w, u) * a + G.skew_convection(g, w, v) * b
    assert (lhs - rhs).max_abs() <= 1e-13 * lhs.max_abs()
    p, q = rng.standard_normal((2, *g.cell_shape))
    np.testing.assert_allclose(G.div_faces(g, u * a + v * b),
                               a * G.div_faces(g, u) + b * G.div_faces(g, v), atol=1e-12)
    gl = G.grad_cells(g, a * p + b * q) - (G.grad_cells(g, p) * a + G.grad_cells(g, q) * b)
    assert gl.max_abs() <= 1e-12


@pytest.mark.skipif(kernels.compiled is None, reason="compiled kernels not built")
def test_backends_agree(rng):
    py, cy = kernels.python, kernels.compiled
    g = MacGrid(11, 8, 1.3, 0.9)
    u, w = random_noslip(g, rng), random_noslip(g, rng)
    c = rng.standard_normal(g.cell_shape)
    ku, kw = rng.uniform(.5, 2, (12, 8)), rng.uniform(.5, 2, (11, 9))
    eta = rng.uniform(.5, 2, g.cell_shape)
    en = np.ascontiguousarray(py.eta_to_nodes(eta))
    h = (g.hx, g.hy)
    np.testing.assert_allclose(cy.div_faces(u.u, u.w, *h), py.div_faces(u.u, u.w, *h), rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(cy.laplace_neumann(c, ku, kw, *h), py.laplace_neumann(c, ku, kw, *h), rtol=1e-13, atol=1e-12)
    for a, b in zip(cy.grad_cells(c, *h), py.grad_cells(c, *h)):
        np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-14)
    for a, b in zip(cy.skew_convection(w.u, w.w, u.u, u.w, *h), py.skew_convection(w.u, w.w, u.u, u.w, *h)):
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-12)
    for a, b in zip(cy.viscous_apply(u.u, u.w, eta, en, *h), py.viscous_apply(u.u, u.w, eta, en, *h)):
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-11)
    assert cy.strain_dissipation(u.u, u.w, eta, en, *h) == pytest.approx(
        py.strain_dissipation(u.u, u.w, eta, en, *h), rel=1e-13)
    for a, b in zip(cy.center_to_face(c), py.center_to_face(c)):
        np.testing.assert_array_equal(a, b)


def test_pure_python_backend_selected_by_env():
    import subprocess
    import sys
    out = subprocess.run([sys.executable, "-c", "from aggflow import kernels; print(kernels.BACKEND)"],
                         env={"AGGFLOW_PURE_PYTHON": "1", "PATH": ""}, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
