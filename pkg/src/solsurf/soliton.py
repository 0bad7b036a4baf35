"""Sym-type immersions from the sine-Gordon SU(2) Lax pair, and the
SO(3)/SO(2,1) Gauss-equation reductions.

The Lax pair is U = (i/2)(-theta_u s1 + lam s3), V = (i/(2 lam))(sin(theta)
s2 - cos(theta) s3); its zero-curvature condition is theta_uv = sin(theta).
The immersion data for a symmetry phi (phi_uv = phi cos theta) is

    A = -(i/2) phi_u s1,    B = (i/(2 lam)) phi (cos(theta) s2 + sin(theta) s3).

A is the Frechet derivative U'(phi); the sign follows from U carrying
-theta_u.  With the opposite sign on A the pair (A, B) fails the variational
compatibility equation A_v - B_u + [A,V] + [U,B] = 0 identically, so no
surface exists: the sign here is forced, not conventional.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frames import (SIGMA1, SIGMA2, SIGMA3, FrameResult, MatrixField,
                     ResidualReport, commutator, integrate_frame, su2_vector,
                     zero_curvature_residual)
from .geometry import FormField, Immersion3, fundamental_forms
from .numerics import Grid2, ScalarField, cumulative_line, diff_values
from .report import summarize


@dataclass
class SGLaxData:
    """Sine-Gordon Lax data: angle field theta and spectral parameter lambda.

    ``theta_u`` may carry the exact derivative; by default it is computed by
    finite differences from the samples.
    """

    theta: ScalarField
    lam: float
    theta_u: ScalarField | None = None

    def __post_init__(self):
        if self.lam == 0:
            raise ValueError("lambda must be nonzero")

    def _theta_u(self) -> np.ndarray:
        if self.theta_u is not None:
            return self.theta_u.values
        return diff_values(self.theta.values, self.theta.grid, "u")

    def lax_pair(self, lam: float | None = None) -> tuple[MatrixField, MatrixField]:
        lam = self.lam if lam is None else lam
        g = self.theta.grid
        th = self.theta.values
        tu = self._theta_u()
        U = 0.5j * (-tu[..., None, None] * SIGMA1 + lam * SIGMA3)
        V = (0.5j / lam) * (np.sin(th)[..., None, None] * SIGMA2
                            - np.cos(th)[..., None, None] * SIGMA3)
        return MatrixField(g, "su2", U), MatrixField(g, "su2", V)

    def lax_pair_dlambda(self, lam: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Analytic d/dlambda of the pair, for the Sym a3-term."""
        lam = self.lam if lam is None else lam
        th = self.theta.values
        shape = th.shape + (2, 2)
        dU = np.broadcast_to(0.5j * SIGMA3, shape)
        dV = (-0.5j / lam ** 2) * (np.sin(th)[..., None, None] * SIGMA2
                                   - np.cos(th)[..., None, None] * SIGMA3)
        return np.array(dU), dV


@dataclass
class SymmetryField:
    """A solution phi of phi_uv = phi cos(theta), with its residual recorded."""

    phi: ScalarField
    phi_u: ScalarField | None = None

    def _phi_u(self) -> np.ndarray:
        if self.phi_u is not None:
            return self.phi_u.values
        return diff_values(self.phi.values, self.phi.grid, "u")

    def residual(self, theta: ScalarField) -> ResidualReport:
        g = self.phi.grid
        puv = diff_values(diff_values(self.phi.values, g, "u"), g, "v")
        r = np.abs(puv - self.phi.values * np.cos(theta.values))
        interior = np.zeros(g.shape, dtype=bool)
        interior[1:-1, 1:-1] = True
        return summarize("symmetry-equation", r, interior)


def symmetry_pair_sg(data: SGLaxData, phi: SymmetryField) -> tuple[np.ndarray, np.ndarray]:
    """(A, B) of the corrected (3.41); see the module docstring for the sign."""
    th = data.theta.values
    pu = phi._phi_u()
    p = phi.phi.values
    A = -0.5j * pu[..., None, None] * SIGMA1
    B = (0.5j / data.lam) * p[..., None, None] * (np.cos(th)[..., None, None] * SIGMA2
                                                  + np.sin(th)[..., None, None] * SIGMA3)
    return A, B


def integrate_immersion(phi_frame: MatrixField, A: np.ndarray, B: np.ndarray) -> tuple[Immersion3, float]:
    """Solve dF/du = Phi^-1 A Phi, dF/dv = Phi^-1 B Phi and extract coordinates.

    Returns the immersion and the cross-order consistency discrepancy (the
    last row re-integrated in u against the column sweep), in coordinate
    units.
    """
    g = phi_frame.grid
    Phi = phi_frame.values
    Phinv = np.linalg.inv(Phi)
    RU = Phinv @ A @ Phi
    RV = Phinv @ B @ Phi
    F = np.empty_like(RU)
    zero = np.zeros((2, 2), dtype=complex)
    F[:, 0] = cumulative_line(RU[:, 0], zero, g.hu)
    F[:, :] = cumulative_line(RV, F[:, 0], g.hv)
    last = cumulative_line(RU[:, -1], F[0, -1], g.hu)
    cross = float(np.abs(last - F[:, -1]).max())
    return Immersion3(g, su2_vector(F)), cross


@dataclass
class SGSurfaceResult:
    surface: Immersion3
    closed_forms: FormField
    fd_forms: FormField
    frame: FrameResult
    immersion_cross_order: float
    orientation: np.ndarray        # sign field aligning the FD normal with the closed-form one
    singular: np.ndarray           # nodes where phi*phi_u vanishes (curvature undefined)
    K_closed: np.ndarray
    H_closed: np.ndarray
    theta: np.ndarray
    integrand_345: np.ndarray      # lam * theta_v * sin(theta)


def sg_surface(data: SGLaxData, phi: SymmetryField,
               singular_floor: float = 1e-12) -> SGSurfaceResult:
    """Build the sine-Gordon symmetry surface and both form computations.

    Closed forms: E = phi_u^2/4, G = phi^2/(4 lam^2), e = lam phi_u
    sin(theta)/2, g = phi theta_v/(2 lam), F = f = 0, giving
    K = 4 lam^2 theta_v sin(theta)/(phi phi_u) and the half-trace mean
    curvature H = lam (phi_u theta_v + phi sin(theta))/(phi phi_u).

    The FD normal r_u x r_v flips orientation across the phi*phi_u = 0 set
    relative to the closed-form normal [A,B]/|[A,B]|; ``orientation`` is the
    sign field that aligns the second forms for node-wise comparison.
    """
    g = data.theta.grid
    lam = data.lam
    th = data.theta.values
    thv = diff_values(th, g, "v")
    p = phi.phi.values
    pu = phi._phi_u()

    U, V = data.lax_pair()
    frame = integrate_frame(U, V)
    A, B = symmetry_pair_sg(data, phi)
    surface, cross = integrate_immersion(frame.phi, A, B)

    E = pu ** 2 / 4
    G = p ** 2 / (4 * lam ** 2)
    e = lam * pu * np.sin(th) / 2
    gg = p * thv / (2 * lam)
    zero = np.zeros_like(E)
    area = np.abs(p * pu)
    singular = area <= singular_floor
    closed = FormField(g, E, zero, G, e, zero.copy(), gg, ~singular)

    with np.errstate(divide="ignore", invalid="ignore"):
        K_closed = 4 * lam ** 2 * thv * np.sin(th) / (p * pu)
        H_closed = lam * (pu * thv + p * np.sin(th)) / (p * pu)

    fd = fundamental_forms(surface)
    orientation = np.sign(p * pu / lam)
    orientation[orientation == 0] = 1.0
    return SGSurfaceResult(surface, closed, fd, frame, cross, orientation,
                           singular, K_closed, H_closed, th,
                           lam * thv * np.sin(th))


def comparison_mask(result: SGSurfaceResult, area_frac: float = 0.05,
                    sin_floor: float = 0.35, erode: int = 3,
                    border: int = 3) -> np.ndarray:
    """Nodes where the closed-form/FD comparison is well conditioned.

    Keeps interior regular nodes whose closed-form area element is at least
    ``area_frac`` of its maximum (trims the exponential tails) and where
    |sin theta| >= ``sin_floor`` (trims the strip around the fold curve
    phi*phi_u = 0, where the second form degenerates and relative error is
    meaningless), then erodes so FD stencils stay off both.
    """
    from scipy.ndimage import binary_erosion
    g = result.surface.grid
    area = np.sqrt(np.maximum(result.closed_forms.W, 0.0))
    m = ~result.singular & result.fd_forms.regular
    m[:border, :] = m[-border:, :] = False
    m[:, :border] = m[:, -border:] = False
    m &= area > area_frac * area.max()
    m &= np.abs(np.sin(result.theta)) >= sin_floor
    if erode:
        m = binary_erosion(m, iterations=erode)
    return m


def forms_cross_check(result: SGSurfaceResult, rel_tol: float | None = None,
                      curv_tol: float | None = None,
                      ident_tol: float | None = None,
                      mask: np.ndarray | None = None) -> list[ResidualReport]:
    """Node-wise relative agreement of FD fundamental forms and curvatures
    with the closed forms, plus the integrand identity
    sqrt(det g) K = lam theta_v sin(theta) (orientation-adapted)."""
    if mask is None:
        mask = comparison_mask(result)
    s = result.orientation
    fd, cf = result.fd_forms, result.closed_forms
    out = []
    with np.errstate(divide="ignore", invalid="ignore"):
        pairs = (("E", fd.E, cf.E), ("G", fd.G, cf.G),
                 ("e", s * fd.e, cf.e), ("g", s * fd.g, cf.g))
        for name, a, b in pairs:
            out.append(summarize(f"form {name} rel", np.abs(a - b) / np.abs(b),
                                 mask, tol=rel_tol))
        relK = np.abs(fd.K - result.K_closed) / np.abs(result.K_closed)
        relH = np.abs(s * fd.H - result.H_closed) / np.abs(result.H_closed)
    out.append(summarize("K rel", relK, mask, tol=curv_tol))
    out.append(summarize("H rel (half-trace adapter)", relH, mask, tol=curv_tol))
    sg_fd = np.sqrt(np.maximum(fd.W, 0.0))
    ident = np.abs(s * sg_fd * fd.K - result.integrand_345)
    out.append(summarize("integrand identity (3.45)", ident, mask, tol=ident_tol))
    return out


def euler_characteristic(result: SGSurfaceResult, area_floor_frac: float = 0.02) -> dict:
    """Both Euler-characteristic integrals for the symmetry surface.

    (a) the closed-form integrand lam * theta_v * sin(theta)
        = -lam (cos theta)_v over the whole parameter domain, and
    (b) discrete Gauss-Bonnet on the generated mesh: FD curvature times the
        FD area element, singular nodes excluded, with the excluded-area
        fraction and the mesh closure gap reported.

    No pass/fail: the parameter region the integral is meant over is not
    pinned down by the construction (the signed integral over a symmetric
    box vanishes for the kink even though the image is a sphere).
    """
    g = result.surface.grid
    # closed-form integrand: orientation * sqrt(det g) * K, which collapses
    # to lam * theta_v * sin(theta) = -lam (cos theta)_v
    sqrtg_closed = np.sqrt(np.maximum(result.closed_forms.W, 0.0))
    lam_thv_sin = result.orientation * sqrtg_closed * result.closed_forms.K
    w = g.hu * g.hv
    chi_formula = float(np.nansum(np.where(result.singular, 0.0, lam_thv_sin)) * w / (2 * np.pi))

    fd = result.fd_forms
    good = fd.regular & ~result.singular & np.isfinite(fd.K)
    # drop a safety collar where the FD area element is tiny: curvature noise
    area = np.sqrt(np.maximum(fd.W, 0.0))
    good &= area > area_floor_frac * np.nanmax(area)
    chi_mesh = float(np.nansum(np.where(good, area * fd.K, 0.0)) * w / (2 * np.pi))
    excluded_fraction = 1.0 - float(good.mean())

    # closure gap: how far the boundary of the image sits from its centroid
    # spread, as a fraction of the bounding-box diagonal
    pts = result.surface.points
    boundary = np.concatenate([pts[0, :], pts[-1, :], pts[:, 0], pts[:, -1]], axis=0)
    diag = float(np.linalg.norm(pts.reshape(-1, 3).max(0) - pts.reshape(-1, 3).min(0)))
    gap = float(np.linalg.norm(boundary - boundary.mean(0), axis=1).max() / diag) if diag > 0 else np.inf
    return {"chi_formula": chi_formula, "chi_gauss_bonnet": chi_mesh,
            "excluded_fraction": excluded_fraction, "closure_gap": gap}


# ---------------------------------------------------------------------------
# SO(3) / SO(2,1) reductions
# ---------------------------------------------------------------------------

@dataclass
class So3Coefficients:
    """The four given component fields of the (x,t) linear pair.

    Fields live on a grid whose axis 0 is x and axis 1 is t.  u23, v23 are
    derived by solving the first two component equations; the rank-2
    condition u12 v13 - u13 v12 != 0 must hold where they are evaluated.
    """

    u12: ScalarField
    u13: ScalarField
    v12: ScalarField
    v13: ScalarField

    @property
    def grid(self) -> Grid2:
        return self.u12.grid

    def determinant(self) -> np.ndarray:
        return (self.u12.values * self.v13.values
                - self.u13.values * self.v12.values)

    def derived_u23_v23(self, den_floor: float = 1e-10) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """u23, v23 from the first two component equations, plus the valid mask."""
        g = self.grid
        a = diff_values(self.v12.values, g, "v") - diff_values(self.u12.values, g, "u")
        b = diff_values(self.v13.values, g, "v") - diff_values(self.u13.values, g, "u")
        D = self.determinant()
        ok = np.abs(D) > den_floor
        with np.errstate(divide="ignore", invalid="ignore"):
            u23 = (a * self.u12.values + b * self.u13.values) / D
            v23 = (a * self.v12.values + b * self.v13.values) / D
        return u23, v23, ok

    def assemble(self, signature: str, u23: np.ndarray, v23: np.ndarray) -> tuple[MatrixField, MatrixField]:
        g = self.grid
        shape = g.shape + (3, 3)
        U = np.zeros(shape)
        V = np.zeros(shape)
        s = -1.0 if signature == "so3" else 1.0
        for M, c12, c13, c23 in ((U, self.u12.values, self.u13.values, u23),
                                 (V, self.v12.values, self.v13.values, v23)):
            M[..., 0, 1] = c12; M[..., 1, 0] = s * c12
            M[..., 0, 2] = c13; M[..., 2, 0] = s * c13
            M[..., 1, 2] = c23; M[..., 2, 1] = -c23
        return MatrixField(g, signature, U), MatrixField(g, signature, V)


def so3_gauss_residual(coeffs: So3Coefficients, signature: str = "so3",
                       tol: float | None = None,
                       den_floor: float = 1e-10) -> dict:
    """Second-order Gauss-equation residual plus the first-order components.

    After substituting the derived u23, v23, the third component equation of
    the zero-curvature condition reads

        u23_x - v23_t + sgn (u13 v12 - u12 v13) = 0

    with sgn = +1 for so3 and -1 for so21.  The first-order component
    residuals are reported through the full matrix zero-curvature residual of
    the assembled pair (which vanishes in the first two components by
    construction of u23, v23 up to stencil error).
    """
    if signature not in ("so3", "so21"):
        raise ValueError("signature must be 'so3' or 'so21'")
    g = coeffs.grid
    u23, v23, ok = coeffs.derived_u23_v23(den_floor)
    sgn = 1.0 if signature == "so3" else -1.0
    full = (diff_values(u23, g, "u") - diff_values(v23, g, "v")
            + sgn * (coeffs.u13.values * coeffs.v12.values
                     - coeffs.u12.values * coeffs.v13.values))
    interior = np.zeros(g.shape, dtype=bool)
    interior[2:-2, 2:-2] = True
    rep = summarize(f"gauss-equation[{signature}]", np.abs(full), interior & ok, tol=tol)

    u23f = np.where(ok, u23, 0.0)
    v23f = np.where(ok, v23, 0.0)
    U, V = coeffs.assemble(signature, u23f, v23f)
    first, _ = zero_curvature_residual(U, V, orientation="tx")
    return {"gauss": rep, "residual_field": full, "mask": interior & ok,
            "first_order": first, "u23": u23, "v23": v23}


def rank1_conservation_residual(u23: ScalarField, sigma: ScalarField,
                                tol: float | None = None) -> ResidualReport:
    """Residual of the rank-1 conservation law u23_x - (sigma u23)_t = 0.

    When the second row of the coefficient matrix is sigma times the first,
    the zero-curvature condition collapses to conservation laws of this form,
    each the integrability condition of a U(1) pair psi_t = u23 psi,
    psi_x = sigma u23 psi.
    """
    g = u23.grid
    r = diff_values(u23.values, g, "u") - diff_values(sigma.values * u23.values, g, "v")
    interior = np.zeros(g.shape, dtype=bool)
    interior[1:-1, 1:-1] = True
    return summarize("rank1-conservation", np.abs(r), interior, tol=tol)
