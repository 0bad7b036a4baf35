import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from solsurf.numerics import (ContourPath, Grid2, GridError, ScalarField,
                              contour_integral, diff, integrate_line,
                              staircase_path)
from solsurf.report import convergence_order


def test_grid_nodes_exact():
    g = Grid2(-1.0, 2.0, 0.0, 1.0, 7, 5)
    u, v = g.axes()
    assert u[0] == -1.0 and v[0] == 0.0
    np.testing.assert_array_equal(u, -1.0 + g.hu * np.arange(7))
    np.testing.assert_array_equal(v, 0.0 + g.hv * np.arange(5))


def test_grid_too_coarse_rejected():
    with pytest.raises(GridError, match="grid too coarse"):
        Grid2(0, 1, 0, 1, 2, 5)


def test_diff_constant_is_zero():
    g = Grid2.square(2.0, 31)
    f = ScalarField(g, np.full(g.shape, 3.7))
    for d in ("u", "v", "z", "zbar"):
        # edge stencils leave (-3f + 4f - f)/2h roundoff
        assert np.abs(diff(f, d).values).max() < 1e-13


def test_diff_exact_for_quadratics():
    # central difference of u^2 is exact at interior nodes; the one-sided
    # 3-point edge stencils are also exact for quadratics
    g = Grid2(-1.0, 1.0, -1.0, 1.0, 21, 21)
    U, V = g.meshgrid()
    fu = diff(ScalarField(g, U ** 2), "u").values
    np.testing.assert_allclose(fu, 2 * U, atol=1e-13)


def test_diff_second_order_convergence():
    errs = []
    for n in (41, 81, 161):
        g = Grid2(-2.0, 2.0, -1.0, 1.0, n, 11)
        U, _ = g.meshgrid()
        fd = diff(ScalarField(g, np.sin(U)), "u").values
        errs.append(np.abs(fd - np.cos(U)).max())
    r1, r2 = errs[0] / errs[1], errs[1] / errs[2]
    assert 3.5 < r1 < 4.5 and 3.5 < r2 < 4.5
    assert convergence_order(errs) > 1.9


def test_wirtinger_derivatives():
    g = Grid2.square(1.0, 101, plane="complex")
    z = g.zgrid()
    # f = z^2: d f = 2z, dbar f = 0 up to stencil error
    f = ScalarField(g, z ** 2)
    dz = diff(f, "z").values
    dzb = diff(f, "zbar").values
    np.testing.assert_allclose(dz, 2 * z, atol=1e-12)
    np.testing.assert_allclose(dzb, 0, atol=1e-12)


# ---------------------------------------------------------------------------
# line integration
# ---------------------------------------------------------------------------

def test_integrate_line_zero_rhs():
    R = np.zeros((11, 2, 2), dtype=complex)
    Y = integrate_line(R, np.eye(2), 0.1)
    np.testing.assert_array_equal(Y, np.broadcast_to(np.eye(2), (11, 2, 2)))


def test_integrate_line_constant_matches_expm():
    C = np.array([[0.3, -1.1], [0.7, -0.2]], dtype=complex)
    m = 101
    h = 1.0 / (m - 1)
    R = np.broadcast_to(C, (m, 2, 2)).copy()
    Y = integrate_line(R, np.eye(2), h)
    worst = max(np.abs(Y[k] - expm(k * h * C)).max() for k in range(m))
    # the double-step sweep costs 2^4 over plain-h RK4; measured 6.7e-10
    assert worst <= 1.5e-9


def test_integrate_line_fourth_order():
    C = np.array([[0, 1.0], [-1.0, 0]], dtype=complex)
    errs = []
    for m in (51, 101, 201):
        h = 1.0 / (m - 1)
        R = np.broadcast_to(C, (m, 2, 2)).copy()
        Y = integrate_line(R, np.eye(2), h)
        errs.append(np.abs(Y[-1] - expm(C)).max())
    assert convergence_order(errs) > 3.8


def test_integrate_line_unitarity_for_antihermitian():
    rng = np.random.default_rng(3)
    m = 101
    h = 1.0 / (m - 1)
    # anti-Hermitian traceless samples varying along the line
    s = np.linspace(0, 1, m)
    a = np.sin(2 * s)
    b = np.cos(s) + 1j * s
    R = np.zeros((m, 2, 2), dtype=complex)
    R[:, 0, 0] = 1j * a
    R[:, 1, 1] = -1j * a
    R[:, 0, 1] = b
    R[:, 1, 0] = -np.conj(b)
    Y = integrate_line(R, np.eye(2), h)
    drift = np.abs(np.conj(np.swapaxes(Y, -1, -2)) @ Y - np.eye(2)).max()
    assert drift <= 1e-8


def test_integrate_line_blowup_reports_index():
    from solsurf.numerics import IntegrationBlowup
    R = np.zeros((9, 2, 2), dtype=complex)
    R[4:] = np.nan
    with pytest.raises(IntegrationBlowup):
        integrate_line(R, np.eye(2), 0.1)


# ---------------------------------------------------------------------------
# contour quadrature
# ---------------------------------------------------------------------------

def _unit_field(g, val):
    return ScalarField(g, np.full(g.shape, val, dtype=complex))


def test_contour_dz_exact():
    g = Grid2.square(1.0, 21, plane="complex")
    one = _unit_field(g, 1.0)
    zero = _unit_field(g, 0.0)
    p = staircase_path(g, (0, 0), (15, 7))
    z = g.zgrid()
    assert abs(contour_integral(one, zero, p) - (z[15, 7] - z[0, 0])) < 1e-14


def test_contour_closed_loop_small():
    # omega = z^2 dz is closed; trapezoid loop defect stays O(h^2)*perimeter
    g = Grid2.square(1.0, 201, plane="complex")
    z = g.zgrid()
    om = ScalarField(g, z ** 2)
    zero = _unit_field(g, 0.0)
    loop = (staircase_path(g, (20, 20), (180, 160), row_first=True)
            .concat(staircase_path(g, (180, 160), (20, 20), row_first=True)))
    per = 2 * (160 + 140) * g.hu
    assert abs(contour_integral(om, zero, loop)) <= 1e-6 * per


def test_contour_gw_integrand_path_independent():
    # two staircases for the closed N=1 generalized Weierstrass integrand
    from solsurf.weierstrass import PoleConfig, pole_sigma_field, rho_to_spinors
    g = Grid2.square(3.0, 401, plane="complex")
    rho = pole_sigma_field(PoleConfig((1.0,), r_excl=0.9), g)
    s = rho_to_spinors(rho)
    P = ScalarField(g, 2j * np.conj(s.psi1.values) ** 2)
    Q = ScalarField(g, -2j * np.conj(s.psi2.values) ** 2)
    a, b = (40, 40), (360, 300)
    va = contour_integral(P, Q, staircase_path(g, a, b, row_first=True))
    vb = contour_integral(P, Q, staircase_path(g, a, b, row_first=False))
    # measured 7.9e-6 at this grid/margin; O(h^2) under refinement
    assert abs(va - vb) <= 2e-5


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 19), st.integers(0, 19), st.integers(0, 19), st.integers(0, 19),
       st.integers(0, 19), st.integers(0, 19))
def test_contour_additive_and_antisymmetric(i0, j0, i1, j1, i2, j2):
    g = Grid2.square(1.0, 20, plane="complex")
    z = g.zgrid()
    P = ScalarField(g, np.exp(0.3 * z))
    Q = ScalarField(g, z * np.conj(z))
    pa = staircase_path(g, (i0, j0), (i1, j1))
    pb = staircase_path(g, (i1, j1), (i2, j2))
    whole = pa.concat(pb)
    va = contour_integral(P, Q, pa)
    vb = contour_integral(P, Q, pb)
    vw = contour_integral(P, Q, whole)
    assert abs((va + vb) - vw) < 1e-12
    assert abs(contour_integral(P, Q, pa.reversed()) + va) < 1e-12


def test_path_validation():
    g = Grid2.square(1.0, 5)
    with pytest.raises(GridError, match="not grid-adjacent"):
        ContourPath(g, [(0, 0), (2, 0)])
    with pytest.raises(GridError, match="leaves the grid"):
        ContourPath(g, [(0, 0), (0, -1)])
