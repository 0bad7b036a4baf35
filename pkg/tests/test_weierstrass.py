import numpy as np
import pytest
from scipy.ndimage import binary_erosion

from solsurf import solutions
from solsurf.geometry import fundamental_forms
from solsurf.numerics import Grid2, ScalarField
from solsurf.weierstrass import (MeanCurvatureField, PoleConfig, SigmaField,
                                 SpinorPair, conservation_residual, current_J,
                                 gw_residual, induce_surface, ll_residual,
                                 p_equation_residual, pole_sigma_field,
                                 quartic_cmc_check, quartic_relation,
                                 recover_rho, rho_to_spinors, sigma_residual,
                                 spin_matrix)


@pytest.fixture(scope="module")
def n1_data():
    g = Grid2.square(3.0, 801, plane="complex")
    rho = pole_sigma_field(PoleConfig((1.0,), r_excl=0.6), g)
    spin = rho_to_spinors(rho)
    return g, rho, spin


@pytest.fixture(scope="module")
def n1_surface(n1_data):
    g, rho, spin = n1_data
    return induce_surface(spin, rng_seed=0, spot_margin=1.2)


def margin_mask(g, rho_or_mask, extra=0):
    m = rho_or_mask if isinstance(rho_or_mask, np.ndarray) else rho_or_mask.include
    m = m.copy()
    m[:3, :] = m[-3:, :] = m[:, :3] = m[:, -3:] = False
    if extra:
        m = binary_erosion(m, iterations=extra)
    return m


# ---------------------------------------------------------------------------
# sigma model
# ---------------------------------------------------------------------------

def test_sigma_constant_and_holomorphic_trivial():
    g = Grid2.square(2.0, 101, plane="complex")
    const = SigmaField(ScalarField(g, np.full(g.shape, 0.3 + 0.4j)))
    out = sigma_residual(const)
    assert out["f"].max == 0.0
    z = g.zgrid()
    holo = SigmaField(ScalarField(g, z.copy()))
    out2 = sigma_residual(holo)
    # dbar z vanishes exactly for the linear field, killing both terms
    assert out2["f"].max <= 1e-14


def test_sigma_pole_solutions():
    g = Grid2.square(3.0, 1201, plane="complex")
    pc = PoleConfig((1.0, -1.0 + 1.0j), r_excl=1.0)
    rho = pole_sigma_field(pc, g)
    out = sigma_residual(rho)
    assert out["f"].max <= 2e-4          # measured 8.5e-5 at this setup
    assert out["fbar"].max <= 2e-4


def test_sigma_nonsolution_detected():
    g = Grid2.square(2.0, 201, plane="complex")
    z = g.zgrid()
    rho = SigmaField(ScalarField(g, z + 0.5 * np.conj(z) ** 2))
    out = sigma_residual(rho)
    assert out["f"].max >= 0.1


def test_unimodular_product_is_solution(rng):
    # random pole sets stay unimodular and on shell (Prop 6.4 instance)
    for _ in range(3):
        poles = tuple(rng.uniform(-1.5, 1.5, 2) @ np.array([1, 1j])
                      for _ in range(rng.integers(1, 4)))
        g = Grid2.square(3.0, 601, plane="complex")
        rho = pole_sigma_field(PoleConfig(poles, r_excl=0.8), g)
        m = rho.include
        assert np.abs(np.abs(rho.rho.values[m]) - 1).max() <= 1e-12
        out = sigma_residual(rho)
        assert out["f"].max <= 5e-2      # h^2 floor; tightens under refinement


# ---------------------------------------------------------------------------
# spinors
# ---------------------------------------------------------------------------

def test_rho_roundtrip(n1_data):
    g, rho, spin = n1_data
    rec = recover_rho(spin)
    m = spin.include
    assert np.abs(rec - rho.rho.values)[m].max() <= 1e-10


def test_p_and_J_closed_forms(n1_data):
    g, rho, spin = n1_data
    z = g.zgrid()
    with np.errstate(divide="ignore", invalid="ignore"):
        F = 1 / (z - 1.0)
    m = spin.include & spin.continuity
    assert np.abs(spin.p - 0.5 * np.abs(F))[m].max() <= 1e-10
    assert np.abs(current_J(spin) - 0.25 * F ** 2)[m].max() <= 1e-10
    # Proposition 6.6(i): J = -d(rho) d(rho bar) / (H (1+|rho|^2)^2)
    ident = -rho.d_rho.values * np.conj(rho.dbar_rho.values) / 4.0
    assert np.abs(current_J(spin) - ident)[m].max() <= 1e-12


def test_gw_residual_on_shell(n1_data):
    g, rho, spin = n1_data
    out = gw_residual(spin)
    m_far = margin_mask(g, np.abs(g.zgrid() - 1) > 1.0, extra=2) & spin.include
    from solsurf.report import summarize
    # statistics away from the pole: measured 1.5e-5 at 801^2
    r1 = np.abs(np.gradient(0))  # placeholder removed below
    assert out["psi2"].max <= 1e-5
    d1 = gw_residual(SpinorPair(spin.psi1, spin.psi2, include=m_far,
                                continuity=spin.continuity))
    assert d1["psi1"].max <= 5e-5


def test_gw_residual_detects_perturbation(n1_data):
    g, rho, spin = n1_data
    pert = SpinorPair(ScalarField(g, spin.psi1.values * 1.1), spin.psi2,
                      include=spin.include, continuity=spin.continuity)
    out = gw_residual(pert)
    assert out["psi1"].max >= 1e-2


def test_epsilon_flip_leaves_surface(n1_data):
    g, rho, spin = n1_data
    flipped = rho_to_spinors(SigmaField(rho.rho, epsilon=-1, d_rho=rho.d_rho,
                                        dbar_rho=rho.dbar_rho, dd_rho=rho.dd_rho,
                                        include=rho.include))
    np.testing.assert_allclose(flipped.psi1.values[spin.include],
                               -spin.psi1.values[spin.include], atol=1e-14)
    a = induce_surface(spin, spot_checks=0)
    b = induce_surface(flipped, spot_checks=0)
    m = a.include & b.include
    assert np.abs(a.surface.points[m] - b.surface.points[m]).max() <= 1e-12


def test_conservation_residuals(n1_data):
    g, rho, spin = n1_data
    # statistics away from the pole, where the quadratic fields are smooth
    far = margin_mask(g, np.abs(g.zgrid() - 1) > 1.5) & spin.include
    sub = SpinorPair(spin.psi1, spin.psi2, include=far, continuity=spin.continuity)
    out = conservation_residual(sub)
    for k in ("law1", "law2", "law3", "current"):
        assert out[k].max <= 2e-6, f"{k}: {out[k].max:.2e}"   # measured 7e-7


def test_conservation_detects_perturbation(n1_data):
    g, rho, spin = n1_data
    pert = SpinorPair(ScalarField(g, spin.psi1.values + 0.05), spin.psi2,
                      include=spin.include, continuity=spin.continuity)
    out = conservation_residual(pert)
    assert max(out[k].max for k in ("law1", "law2", "law3")) >= 1e-3


def test_holomorphic_psi2_laws_exact():
    g = Grid2.square(2.0, 101, plane="complex")
    z = g.zgrid()
    s = SpinorPair(ScalarField(g, np.zeros(g.shape, dtype=complex)),
                   ScalarField(g, 0.2 * z + 0.1))
    out = conservation_residual(s)
    # psi1 = 0 and psi2 linear-holomorphic: laws 1 and 3 vanish exactly
    assert out["law1"].max <= 1e-14
    assert out["law3"].max <= 1e-14


# ---------------------------------------------------------------------------
# induced surface
# ---------------------------------------------------------------------------

def test_induced_surface_is_cylinder(n1_data, n1_surface):
    # closed-form check: X1 + i X2 = -(i/2)(rhob - rhob0), X3 = -ln|z-1| + c
    g, rho, spin = n1_data
    ind = n1_surface
    z = g.zgrid()
    rhob = np.conj(rho.rho.values)
    m = margin_mask(g, ind.include & (np.abs(z - 1) > 0.8))
    W = ind.surface.points[..., 0] + 1j * ind.surface.points[..., 1]
    exact = -0.5j * (rhob - rhob[0, 0])
    assert np.abs(W - exact)[m].max() <= 5e-5
    X3 = ind.surface.points[..., 2]
    exact3 = -(np.log(np.abs(z - 1)) - np.log(np.abs(z[0, 0] - 1)))
    assert np.abs(X3 - exact3)[m].max() <= 5e-5


def test_induced_surface_path_independence(n1_surface):
    assert n1_surface.path_independence <= 1e-6


def test_induced_surface_cmc(n1_data, n1_surface):
    g, rho, spin = n1_data
    forms = fundamental_forms(n1_surface.surface)
    z = g.zgrid()
    m = margin_mask(g, n1_surface.include & (np.abs(z - 1) > 0.9), extra=3)
    m &= forms.regular & np.isfinite(forms.H)
    H = forms.H[m]
    assert abs(abs(H.mean()) - 1.0) <= 1e-3       # measured value |H| = 1
    assert H.std() / abs(H.mean()) <= 1e-3
    # conformality of the first fundamental form, factor 4 p^2
    p2 = (spin.p ** 2)[m]
    assert np.abs(forms.F[m] / (4 * p2)).max() <= 1e-3
    assert np.abs(forms.E[m] / forms.G[m] - 1).max() <= 5e-3
    assert np.abs(forms.E[m] / (4 * p2) - 1).max() <= 5e-3


def test_quartic_relation_not_satisfiable(n1_data, n1_surface):
    # the printed N = 1 quartic cannot hold: the induced surface is a round
    # cylinder of radius 1/2 whose (X1, X2) trace a fixed circle while the
    # quartic's X3-slices vary; the best least-squares positioning stays O(1)
    out = quartic_cmc_check(n1_surface, a=1.0, tol=1e-4)
    rep = out["report"]
    assert rep.passed is False
    assert rep.notes["fraction_within_tol"] < 0.5
    assert rep.notes["best_translation_rms"] > 1e-2


def test_classical_minimal_surface():
    # psi1 = zbar (antiholomorphic), psi2 = 1 (holomorphic): classical
    # factors induce a minimal surface
    g = Grid2.square(1.5, 401, plane="complex")
    z = g.zgrid()
    s = SpinorPair(ScalarField(g, np.conj(z)), ScalarField(g, np.ones(g.shape, complex)))
    ind = induce_surface(s, classical=True, spot_checks=5)
    forms = fundamental_forms(ind.surface)
    m = margin_mask(g, forms.regular, extra=2)
    assert np.abs(forms.H[m]).max() <= 1e-3
    # and the classical factors halve the generalized ones
    ind2 = induce_surface(s, classical=False, spot_checks=0)
    np.testing.assert_allclose(ind2.surface.points, 2 * ind.surface.points, atol=1e-12)


def test_degenerate_zero_spinors():
    g = Grid2.square(1.0, 51, plane="complex")
    zero = ScalarField(g, np.zeros(g.shape, dtype=complex))
    ind = induce_surface(SpinorPair(zero, zero), spot_checks=0)
    assert np.abs(ind.surface.points).max() == 0.0


# ---------------------------------------------------------------------------
# p equation and curvature
# ---------------------------------------------------------------------------

def test_p_equation_on_shell(n1_data):
    g, rho, spin = n1_data
    far = margin_mask(g, np.abs(g.zgrid() - 1) > 1.0) & spin.include
    sub = SpinorPair(spin.psi1, spin.psi2, include=far,
                     continuity=spin.continuity,
                     d_psi2=spin.d_psi2, d_psi1bar=spin.d_psi1bar)
    rep = p_equation_residual(sub)
    assert rep.max <= 1e-4                  # measured 2.4e-5


def test_p_equation_detects_nonsolution():
    g = Grid2.square(2.0, 201, plane="complex")
    z = g.zgrid()
    s = SpinorPair(ScalarField(g, 0.3 * np.conj(z) + 0.2),
                   ScalarField(g, 0.5 + 0.1 * z ** 2))
    rep = p_equation_residual(s)
    assert rep.max >= 1e-2


def test_curvature_from_p(n1_data, n1_surface):
    # K = -(d dbar ln p)/p^2 against the geometry oracle on the mesh.
    # With the conformal factor 4 p^2 of the generalized normalization the
    # oracle K equals the formula value divided by 4.
    from solsurf.numerics import diff_values
    g, rho, spin = n1_data
    lnp = np.log(spin.p)
    K_formula = -(diff_values(diff_values(lnp, g, "zbar"), g, "z").real / spin.p ** 2)
    forms = fundamental_forms(n1_surface.surface)
    z = g.zgrid()
    m = margin_mask(g, n1_surface.include & (np.abs(z - 1) > 1.0), extra=3)
    m &= forms.regular
    # cylinder: K = 0; both sides vanish, compare at matched scale
    assert np.abs(K_formula[m]).max() <= 1e-6
    assert np.abs(forms.K[m]).max() <= 1e-2


# ---------------------------------------------------------------------------
# spin matrix / Landau-Lifshitz
# ---------------------------------------------------------------------------

def test_spin_matrix_algebra():
    g = Grid2.square(2.0, 101, plane="complex")
    z = g.zgrid()
    rho = SigmaField(ScalarField(g, 0.3 * z + 0.2 * np.conj(z) ** 2))
    S = spin_matrix(rho).values
    assert np.abs(S[..., 0, 0] + S[..., 1, 1]).max() <= 1e-12
    assert np.abs(S @ S - np.eye(2)).max() <= 1e-12
    assert np.abs(np.linalg.det(S) + 1).max() <= 1e-12


def test_spin_matrix_zero_rho():
    g = Grid2.square(1.0, 51, plane="complex")
    rho = SigmaField(ScalarField(g, np.zeros(g.shape, dtype=complex)))
    out = ll_residual(rho)
    assert out["residual"].max == 0.0
    S = spin_matrix(rho).values
    np.testing.assert_array_equal(S[..., 0, 0], 1.0)
    np.testing.assert_array_equal(S[..., 1, 1], -1.0)


def test_ll_constant_H_on_shell():
    g = Grid2.square(3.0, 1201, plane="complex")
    pc = PoleConfig((1.0, -1.0 + 1.0j), r_excl=1.2)
    rho = pole_sigma_field(pc, g)
    out = ll_residual(rho)
    assert out["residual"].max <= 1e-5          # measured 2.6e-6
    assert out["identity"].max <= 1e-4
    assert out["algebra"].max <= 1e-12


def test_ll_closed_form_identity_generic():
    # the corrected commutator closed form holds off shell as well
    g = Grid2.square(1.0, 401, plane="complex")
    z = g.zgrid()
    rho = SigmaField(ScalarField(g, (0.3 + 0.2j) * z ** 2 + 0.5 * np.conj(z) + 0.4j))
    out = ll_residual(rho)
    assert out["identity"].max <= 5e-3          # h^2 floor of d dbar S
    assert out["residual"].max >= 0.1           # generic rho is off shell


def test_ll_nonconstant_H_manufactured():
    g = Grid2.square(3.0, 801, plane="complex")
    rho, H = solutions.manufactured_nonconstant_H(g)
    out = ll_residual(rho, H)
    assert out["residual"].max <= 1e-4          # measured 2.4e-5
    # sigma residual with the H right side and the current conservation
    sig = sigma_residual(rho, H)
    assert sig["f"].max <= 1e-4
    spin = rho_to_spinors(rho, H)
    cons = conservation_residual(spin, H)
    assert cons["current"].max <= 1e-4
    rep = p_equation_residual(spin, H)
    assert rep.max <= 1e-4


def test_nonconstant_H_spinors_satisfy_gw():
    g = Grid2.square(3.0, 801, plane="complex")
    rho, H = solutions.manufactured_nonconstant_H(g)
    spin = rho_to_spinors(rho, H)
    out = gw_residual(spin, H)
    assert out["psi1"].max <= 1e-4
    assert out["psi2"].max <= 1e-4
