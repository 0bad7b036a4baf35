"""Analytic seed solutions used by the verification suites and the CLI.

Every family here was checked against its governing equation numerically
before being frozen in (see tests/test_solutions.py for the residual
studies); the derivative fields are exact formulas, not stencils.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ellipj

from .backlund import SGSolution, sg_residual
from .frames import OneForm
from .geometry import Immersion3
from .numerics import Grid2, ScalarField
from .soliton import SGLaxData, So3Coefficients, SymmetryField
from .weierstrass import MeanCurvatureField, SigmaField


# ---------------------------------------------------------------------------
# sine-Gordon
# ---------------------------------------------------------------------------

def lightcone_kink(grid: Grid2, a: float = 1.0, shift: float = 0.0) -> SGSolution:
    """u = 4 arctan(exp(a x + t/a + shift)) solving u_xt = sin u."""
    X, T = grid.meshgrid()
    th = a * X + T / a + shift
    u = 4 * np.arctan(np.exp(th))
    sech = 1 / np.cosh(th)
    sol = SGSolution(
        ScalarField(grid, u), None,  # residual filled below
        u_x=ScalarField(grid, 2 * a * sech),
        u_t=ScalarField(grid, 2 * sech / a),
    )
    sol.residual = sg_residual(sol.u)
    return sol


def vacuum(grid: Grid2) -> SGSolution:
    z = np.zeros(grid.shape)
    sol = SGSolution(ScalarField(grid, z), None,
                     u_x=ScalarField(grid, z.copy()), u_t=ScalarField(grid, z.copy()))
    sol.residual = sg_residual(sol.u)
    return sol


def sg_lax_kink(grid: Grid2, lam: float = 1.0, a: float = 1.0,
                shift: float = 0.0) -> SGLaxData:
    """Lax data for the light-cone kink, with the exact theta_u attached."""
    U, V = grid.meshgrid()
    th = a * U + V / a + shift
    theta = 4 * np.arctan(np.exp(th))
    theta_u = 2 * a / np.cosh(th)
    return SGLaxData(ScalarField(grid, theta), lam,
                     theta_u=ScalarField(grid, theta_u))


def kink_symmetry(grid: Grid2, which: str = "theta_v", a: float = 1.0,
                  shift: float = 0.0) -> SymmetryField:
    """phi = theta_v or theta_u of the kink; both solve phi_uv = phi cos(theta)."""
    U, V = grid.meshgrid()
    th = a * U + V / a + shift
    sech = 1 / np.cosh(th)
    tanh = np.tanh(th)
    if which == "theta_v":
        phi = 2 * sech / a
        phi_u = -2 * sech * tanh
    elif which == "theta_u":
        phi = 2 * a * sech
        phi_u = -2 * a ** 2 * sech * tanh
    else:
        raise ValueError("which must be 'theta_v' or 'theta_u'")
    return SymmetryField(ScalarField(grid, phi), phi_u=ScalarField(grid, phi_u))


# ---------------------------------------------------------------------------
# Maurer-Cartan cocycles (exact derivative components attached, so the
# algebraically-identical structure equations check out at machine level)
# ---------------------------------------------------------------------------

def sg_cocycle(grid: Grid2, u: np.ndarray, u_x: np.ndarray,
               u_xt: np.ndarray) -> tuple[OneForm, OneForm, OneForm]:
    """sigma1 = sin(u) dt, sigma2 = dx + cos(u) dt, sigma3 = u_x dx."""
    f = lambda v: ScalarField(grid, np.broadcast_to(v, grid.shape).copy())
    zero = np.zeros(grid.shape)
    s1 = OneForm(f(zero), f(np.sin(u)),
                 db_dx=f(np.cos(u) * u_x), da_dt=f(zero))
    s2 = OneForm(f(np.ones(grid.shape)), f(np.cos(u)),
                 db_dx=f(-np.sin(u) * u_x), da_dt=f(zero))
    s3 = OneForm(f(u_x), f(zero),
                 db_dx=f(zero), da_dt=f(u_xt))
    return s1, s2, s3


def sg_cocycle_kink(grid: Grid2, a: float = 1.0) -> tuple[OneForm, OneForm, OneForm]:
    X, T = grid.meshgrid()
    th = a * X + T / a
    u = 4 * np.arctan(np.exp(th))
    u_x = 2 * a / np.cosh(th)
    u_xt = -2 * np.tanh(th) / np.cosh(th)       # equals sin(u): on shell
    return sg_cocycle(grid, u, u_x, u_xt)


def kdv_soliton(grid: Grid2, c: float = 1.0):
    """u = -(c/2) sech^2(sqrt(c)(x - c t)/2) solving u_t - 6 u u_x + u_xxx = 0.

    Returns (u, u_x, u_xx, u_xxx, u_t) as arrays on the grid.
    """
    X, T = grid.meshgrid()
    k = np.sqrt(c) / 2
    xi = k * (X - c * T)
    sech = 1 / np.cosh(xi)
    tanh = np.tanh(xi)
    u = -(c / 2) * sech ** 2
    u_x = c * k * sech ** 2 * tanh
    u_xx = c * k ** 2 * sech ** 2 * (3 * sech ** 2 - 2)
    u_xxx = c * k ** 3 * sech ** 2 * tanh * (4 - 12 * sech ** 2)
    u_t = -c * u_x
    return u, u_x, u_xx, u_xxx, u_t


def kdv_cocycle(grid: Grid2, c: float = 1.0) -> tuple[OneForm, OneForm, OneForm]:
    """sigma1 = 2 u_x dt, sigma2 = -(1+u) dx - (2u + 2u^2 - u_xx) dt,
    sigma3 = (1-u) dx + (2u - 2u^2 + u_xx) dt, for the one-soliton."""
    u, u_x, u_xx, u_xxx, u_t = kdv_soliton(grid, c)
    f = lambda v: ScalarField(grid, v)
    zero = np.zeros(grid.shape)
    s1 = OneForm(f(zero), f(2 * u_x), db_dx=f(2 * u_xx), da_dt=f(zero))
    s2 = OneForm(f(-(1 + u)), f(-(2 * u + 2 * u ** 2 - u_xx)),
                 db_dx=f(-(2 * u_x + 4 * u * u_x - u_xxx)), da_dt=f(-u_t))
    s3 = OneForm(f(1 - u), f(2 * u - 2 * u ** 2 + u_xx),
                 db_dx=f(2 * u_x - 4 * u * u_x + u_xxx), da_dt=f(-u_t))
    return s1, s2, s3


def trivial_cocycle(grid: Grid2) -> tuple[OneForm, OneForm, OneForm]:
    zero = ScalarField(grid, np.zeros(grid.shape))
    mk = lambda: OneForm(zero, zero, db_dx=zero, da_dt=zero)
    return mk(), mk(), mk()


# ---------------------------------------------------------------------------
# moving-frame reduction examples (grids are (x, t), axis 0 = x)
# ---------------------------------------------------------------------------

def _fields(grid: Grid2, u12, u13, v12, v13) -> So3Coefficients:
    f = lambda v: ScalarField(grid, np.broadcast_to(v, grid.shape).copy())
    return So3Coefficients(f(u12), f(u13), f(v12), f(v13))


def reduction_example(grid: Grid2, signature: str, example: int
                      ) -> tuple[So3Coefficients, str, np.ndarray]:
    """The trig/hyperbolic/exponential substitutions with an exact solution
    of the governing scalar equation plugged in.

    so3:  1. u12 = cos(phi/2), v13 = sin(phi/2); phi_tt - phi_xx = -sin(phi),
             static kink phi = 4 arctan(e^x).
          2. cosh/sinh; lap(phi) = -sinh(phi), phi = 2 asinh(A cn(w x, k)).
          3. u12 = v13 = e^phi; lap(phi) = -e^(2 phi), phi = ln(sech x).
             (The governing equation carries e^(2 phi): substituting the
             printed e^phi equation's solutions leaves an O(1) residual.)
    so21: 1. same trig pair; phi_tt - phi_xx = sin(phi), phi = 4 arctan(e^t).
          2. cosh/sinh; lap(phi) = sinh(phi), phi = 2 ln coth(x/2) (x > 0).
          3. u12 = v13 = e^phi; lap(phi) = e^(2 phi), phi = -ln x (x > 0).

    Returns the coefficients, the name of the scalar equation, and the
    plugged-in solution field.
    """
    X, T = grid.meshgrid()
    zero = np.zeros(grid.shape)
    if signature == "so3":
        if example == 1:
            phi = 4 * np.arctan(np.exp(X))
            return _fields(grid, np.cos(phi / 2), zero, zero, np.sin(phi / 2)), \
                "phi_tt - phi_xx = -sin(phi)", phi
        if example == 2:
            k = 0.6
            om = 1 / np.sqrt(1 - k ** 2)
            A = k * om
            _, cn, _, _ = ellipj(om * X, k ** 2)
            phi = 2 * np.arcsinh(A * cn)
            return _fields(grid, np.cosh(phi / 2), zero, zero, np.sinh(phi / 2)), \
                "phi_tt + phi_xx = -sinh(phi)", phi
        if example == 3:
            phi = np.log(1 / np.cosh(X))
            return _fields(grid, np.exp(phi), zero, zero, np.exp(phi)), \
                "phi_tt + phi_xx = -e^(2 phi)", phi
    elif signature == "so21":
        if example == 1:
            phi = 4 * np.arctan(np.exp(T))
            return _fields(grid, np.cos(phi / 2), zero, zero, np.sin(phi / 2)), \
                "phi_tt - phi_xx = sin(phi)", phi
        if example == 2:
            if grid.u_min <= 0:
                raise ValueError("so21 example 2 needs x > 0 (coth singularity)")
            phi = 2 * np.log(1 / np.tanh(X / 2))
            return _fields(grid, np.cosh(phi / 2), zero, zero, np.sinh(phi / 2)), \
                "phi_tt + phi_xx = sinh(phi)", phi
        if example == 3:
            if grid.u_min <= 0:
                raise ValueError("so21 example 3 needs x > 0 (log singularity)")
            phi = -np.log(X)
            return _fields(grid, np.exp(phi), zero, zero, np.exp(phi)), \
                "phi_tt + phi_xx = e^(2 phi)", phi
    raise ValueError(f"unknown reduction example {signature}/{example}")


def reduction_nonsolution(grid: Grid2) -> So3Coefficients:
    """The trig substitution loaded with a generic smooth non-solution."""
    X, T = grid.meshgrid()
    phi = 0.8 * np.sin(X) * np.cosh(0.3 * T) + 0.2 * X * T
    zero = np.zeros(grid.shape)
    return _fields(grid, np.cos(phi / 2), zero, zero, np.sin(phi / 2))


# ---------------------------------------------------------------------------
# manufactured nonconstant mean curvature pair
# ---------------------------------------------------------------------------

def manufactured_nonconstant_H(grid: Grid2, scale: float = 3.0) -> tuple[SigmaField, MeanCurvatureField]:
    """A real rho(x) and positive H(x) solving the nonconstant-H sigma system
    exactly: for rho real and single-variable the system collapses to
    (ln H)' = (ln(rho'/(1+rho^2)))', so H = C rho'/(1+rho^2).

    Here H = 1 + tanh(x)/4 is prescribed and rho = tan((x + ln cosh(x)/4)/C)
    follows; C = ``scale`` keeps the arctangent away from its poles on the
    usual desk domains.
    """
    X, _ = grid.meshgrid()
    C = scale
    g_arg = (X + np.log(np.cosh(X)) / 4) / C
    if np.abs(g_arg).max() >= np.pi / 2 - 0.05:
        raise ValueError("domain too wide for this manufactured family; raise scale")
    rho = np.tan(g_arg)
    H = 1 + np.tanh(X) / 4
    # d/dz = d/dx / 2 for x-only fields
    rho_x = (1 + rho ** 2) * H / C
    rho_xx = (2 * rho * rho_x * H + (1 + rho ** 2) * (1 / np.cosh(X) ** 2) / 4) / C
    H_x = (1 / np.cosh(X) ** 2) / 4
    zgrid = grid if grid.plane == "complex" else Grid2(
        grid.u_min, grid.u_max, grid.v_min, grid.v_max, grid.nu, grid.nv, "complex")
    sf = SigmaField(
        ScalarField(zgrid, rho.astype(complex)),
        d_rho=ScalarField(zgrid, (rho_x / 2).astype(complex)),
        dbar_rho=ScalarField(zgrid, (rho_x / 2).astype(complex)),
        dd_rho=ScalarField(zgrid, (rho_xx / 4).astype(complex)),
    )
    Hf = MeanCurvatureField(ScalarField(zgrid, H),
                            d_H=ScalarField(zgrid, (H_x / 2).astype(complex)))
    return sf, Hf


# ---------------------------------------------------------------------------
# classical test surfaces
# ---------------------------------------------------------------------------

def sphere(grid: Grid2 | None = None, n: int = 201) -> Immersion3:
    """Unit sphere r = (cos u cos v, sin u cos v, sin v)."""
    if grid is None:
        grid = Grid2(0.0, 2 * np.pi, -1.2, 1.2, n, n)
    return Immersion3.sample(grid, lambda U, V: (
        np.cos(U) * np.cos(V), np.sin(U) * np.cos(V), np.sin(V)))


def plane(grid: Grid2 | None = None, n: int = 101) -> Immersion3:
    if grid is None:
        grid = Grid2.square(1.0, n)
    return Immersion3.sample(grid, lambda U, V: (U, V, np.zeros_like(U)))


def tractroid(grid: Grid2 | None = None, n: int = 201) -> Immersion3:
    """Pseudosphere of K = -1: r = (sech u cos v, sech u sin v, u - tanh u),
    away from the cusp line u = 0."""
    if grid is None:
        grid = Grid2(0.5, 3.0, 0.0, 2 * np.pi, n, n)
    return Immersion3.sample(grid, lambda U, V: (
        np.cos(V) / np.cosh(U), np.sin(V) / np.cosh(U), U - np.tanh(U)))
