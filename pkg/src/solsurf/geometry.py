"""Classical surface theory from a raw immersion.

This module is the verification oracle: every generated surface is pushed
through it and the resulting fundamental forms, curvatures and
Mainardi-Codazzi residuals are compared against whatever closed forms the
construction predicts.

Conventions.  The unit normal is normal_sign * (r_u x r_v)/|r_u x r_v| and
the second form coefficients are e = r_uu . N, f = r_uv . N, g = r_vv . N
(equivalent to -dr.dN).  Curvatures are K = (eg - f^2)/(EG - F^2) and the
half-trace mean curvature H = (eG - 2fF + gE)/(2(EG - F^2)).  With these
definitions the outward-normal unit sphere has K = 1 and H = -1; callers
who want the sphere at H = +1 pass normal_sign=-1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import Grid2, ScalarField, diff_values
from .report import ResidualReport, summarize

EPS_REG = 1e-10


@dataclass
class Immersion3:
    """Grid of points in 3-space; points has shape (nu, nv, 3)."""

    grid: Grid2
    points: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.shape != self.grid.shape + (3,):
            raise ValueError("points must have shape (nu, nv, 3)")

    @staticmethod
    def sample(grid: Grid2, fn) -> "Immersion3":
        U, V = grid.meshgrid()
        x, y, z = fn(U, V)
        return Immersion3(grid, np.stack([x, y, z], axis=-1))

    def regular_mask(self, eps: float = EPS_REG) -> np.ndarray:
        ru = diff_values(self.points, self.grid, "u")
        rv = diff_values(self.points, self.grid, "v")
        return np.linalg.norm(np.cross(ru, rv), axis=-1) > eps


@dataclass
class FormField:
    """First and second fundamental form coefficients with derived K, H.

    ``regular`` marks nodes where EG - F^2 > 0 and the cross product beat
    the regularity floor; singular nodes stay in the arrays but are dropped
    from residual statistics.
    """

    grid: Grid2
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    e: np.ndarray
    f: np.ndarray
    g: np.ndarray
    regular: np.ndarray

    @property
    def W(self) -> np.ndarray:
        return self.E * self.G - self.F ** 2

    @property
    def K(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return (self.e * self.g - self.f ** 2) / self.W

    @property
    def H(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return (self.e * self.G - 2 * self.f * self.F + self.g * self.E) / (2 * self.W)

    def flipped_normal(self) -> "FormField":
        return FormField(self.grid, self.E, self.F, self.G,
                         -self.e, -self.f, -self.g, self.regular)


def fundamental_forms(surface: Immersion3, normal_sign: int = 1,
                      eps_reg: float = EPS_REG) -> FormField:
    """E,F,G from first derivatives, e,f,g against the chosen unit normal."""
    if normal_sign not in (1, -1):
        raise ValueError("normal_sign must be +1 or -1")
    g2 = surface.grid
    P = surface.points
    ru = diff_values(P, g2, "u")
    rv = diff_values(P, g2, "v")
    ruu = diff_values(ru, g2, "u")
    ruv = diff_values(ru, g2, "v")
    rvv = diff_values(rv, g2, "v")

    E = np.einsum("...k,...k->...", ru, ru)
    F = np.einsum("...k,...k->...", ru, rv)
    G = np.einsum("...k,...k->...", rv, rv)

    cross = np.cross(ru, rv)
    cn = np.linalg.norm(cross, axis=-1)
    regular = (cn > eps_reg) & (E * G - F ** 2 > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        N = normal_sign * cross / np.where(cn > 0, cn, np.nan)[..., None]

    e = np.einsum("...k,...k->...", ruu, N)
    f = np.einsum("...k,...k->...", ruv, N)
    g = np.einsum("...k,...k->...", rvv, N)
    return FormField(g2, E, F, G, e, f, g, regular)


def christoffel_symbols(forms: FormField) -> dict[str, np.ndarray]:
    """All six Christoffel symbols from the first fundamental form alone."""
    g2 = forms.grid
    E, F, G = forms.E, forms.F, forms.G
    Eu = diff_values(E, g2, "u"); Ev = diff_values(E, g2, "v")
    Fu = diff_values(F, g2, "u"); Fv = diff_values(F, g2, "v")
    Gu = diff_values(G, g2, "u"); Gv = diff_values(G, g2, "v")
    W = forms.W
    with np.errstate(divide="ignore", invalid="ignore"):
        return {
            "111": (G * Eu - 2 * F * Fu + F * Ev) / (2 * W),
            "211": (2 * E * Fu - E * Ev - F * Eu) / (2 * W),
            "112": (G * Ev - F * Gu) / (2 * W),
            "212": (E * Gu - F * Ev) / (2 * W),
            "122": (2 * G * Fv - G * Gu - F * Gv) / (2 * W),
            "222": (E * Gv - 2 * F * Fv + F * Gu) / (2 * W),
        }


def mainardi_codazzi_residual(forms: FormField, tol: float | None = None,
                              mask: np.ndarray | None = None) -> tuple[ResidualReport, np.ndarray, np.ndarray]:
    """Residuals of both Mainardi-Codazzi equations, from (E..g) alone.

    Christoffels come from the first form, never from the immersion, so the
    check constrains the six coefficient fields and nothing else.
    """
    g2 = forms.grid
    C = christoffel_symbols(forms)
    ev = diff_values(forms.e, g2, "v"); fu = diff_values(forms.f, g2, "u")
    fv = diff_values(forms.f, g2, "v"); gu = diff_values(forms.g, g2, "u")
    r1 = ev - fu - (forms.e * C["112"] + forms.f * (C["212"] - C["111"]) - forms.g * C["211"])
    r2 = fv - gu - (forms.e * C["122"] + forms.f * (C["222"] - C["112"]) - forms.g * C["212"])
    m = forms.regular & (forms.W > 0)
    if mask is not None:
        m = m & mask
    rep = summarize("mainardi-codazzi", np.maximum(np.abs(r1), np.abs(r2)), m, tol=tol)
    return rep, r1, r2


def liouville_gauss_curvature(forms: FormField) -> np.ndarray:
    """K from E, F, G alone: Liouville's intrinsic representation."""
    g2 = forms.grid
    C = christoffel_symbols(forms)
    with np.errstate(divide="ignore", invalid="ignore"):
        Wr = np.sqrt(forms.W)
        a = Wr / forms.E * C["211"]
        b = Wr / forms.E * C["212"]
        return (diff_values(a, g2, "v") - diff_values(b, g2, "u")) / Wr


def pseudospherical_forms(omega: ScalarField, rho: float) -> FormField:
    """Asymptotic-line forms of a pseudospherical surface with K = -1/rho^2:
    I = du^2 + 2 cos(w) du dv + dv^2, II = (2/rho) sin(w) du dv."""
    if rho == 0:
        raise ValueError("rho must be nonzero")
    w = omega.values
    one = np.ones_like(w, dtype=float)
    zero = np.zeros_like(w, dtype=float)
    F = np.cos(w)
    f = np.sin(w) / rho
    regular = np.abs(np.sin(w)) > EPS_REG   # EG - F^2 = sin^2 w
    return FormField(omega.grid, one, F, one.copy(), zero, f, zero.copy(), regular)


def check_pseudospherical(omega: ScalarField, rho: float,
                          mc_tol: float | None = None,
                          gauss_tol: float | None = None,
                          sg_tol: float | None = None) -> dict:
    """Couple the compatibility of the asymptotic-line forms to the
    sine-Gordon residual of omega.

    The Codazzi pair holds identically for these forms, for any omega (both
    sides reduce to -cos(w) w_u and -cos(w) w_v); it is reported but carries
    no information about w.  The coupled check is the Gauss equation:
    intrinsic curvature from (E, F, G) against (eg - f^2)/W = -1/rho^2, whose
    residual equals |w_uv - sin(w)/rho^2| / sin(w) and vanishes exactly when
    the sine-Gordon residual does.
    """
    forms = pseudospherical_forms(omega, rho)
    degenerate = bool(np.all(np.abs(np.sin(omega.values)) < 1e-14))
    interior = np.zeros(omega.grid.shape, dtype=bool)
    interior[2:-2, 2:-2] = True
    mc, _, _ = mainardi_codazzi_residual(forms, tol=mc_tol, mask=interior)
    k_int = liouville_gauss_curvature(forms)
    gauss = np.abs(k_int - forms.K)
    gauss_rep = summarize("gauss-equation", gauss, interior & forms.regular,
                          tol=gauss_tol)
    wuv = diff_values(diff_values(omega.values, omega.grid, "u"), omega.grid, "v")
    sg = np.abs(wuv - np.sin(omega.values) / rho ** 2)
    sg_rep = summarize("sine-gordon", sg, interior, tol=sg_tol)
    return {"mainardi_codazzi": mc, "gauss": gauss_rep, "sine_gordon": sg_rep,
            "degenerate_second_form": degenerate, "forms": forms}
