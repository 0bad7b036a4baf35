import numpy as np
import pytest

from solsurf import solutions
from solsurf.backlund import SGSolution, auto_bt, bt_psi, sg_residual
from solsurf.numerics import Grid2, ScalarField


def test_sg_residual_examples():
    g = Grid2.square(4.0, 401)
    X, T = g.meshgrid()
    assert sg_residual(ScalarField(g, np.zeros(g.shape))).max == 0.0
    kink = solutions.lightcone_kink(g)
    assert kink.residual.max <= 5e-4        # h^2 stencil floor, measured 4e-4
    bad = sg_residual(ScalarField(g, X * T))
    # residual is |1 - sin(xt)|; sin reaches -1 on this domain
    assert 1.9 <= bad.max <= 2.01


def test_sg_residual_lab_form():
    g = Grid2.square(3.0, 401)
    X, T = g.meshgrid()
    static = ScalarField(g, 4 * np.arctan(np.exp(X)))
    # phi_xx = sin(phi), so phi_tt - phi_xx = -sin(phi): the +sin form
    assert sg_residual(static, form="lab", lab_sign=1).max <= 1e-3
    assert sg_residual(static, form="lab", lab_sign=-1).max >= 1.0


def test_bt_psi_vacuum_antidiagonal():
    # for u = 0 the pair collapses to psi' = -cos(psi) along x + t
    g = Grid2.square(4.0, 801)
    out = bt_psi(solutions.vacuum(g), psi0=np.pi / 2)
    psi = out["psi"].values
    n = g.nu
    diag_vals = [np.diag(np.fliplr(psi), k) for k in range(-n + 5, n - 5, 50)]
    worst = max(v.max() - v.min() for v in diag_vals if len(v) > 1)
    assert worst <= 1e-8
    assert out["cross_order"] <= 1e-8


def test_bt_psi_fixed_point():
    # cos(psi0) = 0 and u = 0: psi stays at psi0 and (5.62) is exactly zero
    g = Grid2.square(3.0, 101)
    out = bt_psi(solutions.vacuum(g), psi0=np.pi / 2)
    assert out["transformed_equation"].max == 0.0
    assert np.abs(out["psi"].values - np.pi / 2).max() <= 1e-12


def test_bt_psi_equation_and_eliminant():
    g = Grid2.square(4.0, 401)
    out = bt_psi(solutions.vacuum(g), psi0=1.0)
    # structural evaluation: machine level; stencil evaluation: h^2 floor
    assert out["transformed_equation"].max <= 1e-12
    assert out["eliminant"].max <= 1e-12
    assert out["transformed_equation_fd"].max <= 5e-3
    assert out["eliminant_fd"].max <= 1e-2
    # on a genuine kink background the structural residuals stay small
    # (gate raised above the 4e-4 stencil floor of the exact kink)
    kink = solutions.lightcone_kink(g)
    out2 = bt_psi(kink, psi0=0.3, residual_gate=1e-3)
    assert out2["transformed_equation"].max <= 1e-6
    assert out2["eliminant"].max <= 1e-6


def test_bt_psi_gate():
    g = Grid2.square(3.0, 101)
    X, T = g.meshgrid()
    bad = SGSolution.from_field(ScalarField(g, 0.5 * X * T))
    with pytest.raises(ValueError, match="gate"):
        bt_psi(bad, psi0=0.1)


def test_bt_cross_order_witnesses_offshell():
    # perturbing u off shell breaks the compatibility of the psi pair; the
    # cross-order discrepancy jumps by orders of magnitude
    g = Grid2.square(4.0, 201)
    kink = solutions.lightcone_kink(g)
    on = bt_psi(kink, psi0=0.3, residual_gate=1e-2)
    X, T = g.meshgrid()
    pert = ScalarField(g, kink.u.values + 0.1 * np.sin(X) * np.sin(T))
    off_sol = SGSolution.from_field(pert)
    off = bt_psi(off_sol, psi0=0.3, residual_gate=np.inf)
    assert off["cross_order"] > 30 * on["cross_order"]
    assert off["cross_order"] > 1e-3


def test_auto_bt_vacuum_center_seed():
    # seed chosen so the transformed field passes pi at the origin: the
    # fitted constant vanishes
    g = Grid2.square(4.0, 401)
    seed = 4 * np.arctan(np.exp(g.u_min + g.v_min))
    ub = auto_bt(solutions.vacuum(g), seed=seed)
    w0 = ub.u.values[0, 0]
    c = np.log(np.tan(w0 / 4)) - (g.u_min + g.v_min)
    assert abs(c) <= 1e-9
    i = g.nu // 2
    assert abs(ub.u.values[i, i] - np.pi) <= 1e-6


def test_auto_bt_vacuum_gives_kink():
    g = Grid2.square(4.0, 401)
    ub = auto_bt(solutions.vacuum(g), seed=np.pi)
    # fitted closed form: w = 4 arctan(exp(x + t + c)), c from the base node
    w0 = ub.u.values[0, 0]
    c = np.log(np.tan(w0 / 4)) - (g.u_min + g.v_min)
    X, T = g.meshgrid()
    kink = 4 * np.arctan(np.exp(X + T + c))
    assert np.abs(ub.u.values - kink).max() <= 1e-5
    # seed pi sits at the base corner, so the kink core passes through it
    assert abs(c - 8.0) <= 1e-12
    # transform-implied residual is the input's (zero); FD residual is floor
    assert ub.residual.notes["bt_implied_max"] == 0.0
    assert ub.residual.max <= 5e-4
    assert not ub.degenerate
    # monotone in x + t with range converging to (0, 2 pi)
    d = np.diff(ub.u.values[:, 200])
    assert (d > 0).all()
    assert ub.u.values.min() > 0 and ub.u.values.max() < 2 * np.pi
    assert ub.u.values.max() > 2 * np.pi - 1e-3


def test_auto_bt_degenerate_branch():
    g = Grid2.square(3.0, 101)
    ub = auto_bt(solutions.vacuum(g), seed=0.0)
    assert ub.degenerate
    assert np.abs(ub.u.values).max() == 0.0


def test_auto_bt_chain_stays_on_shell():
    g = Grid2.square(4.0, 401)
    first = auto_bt(solutions.vacuum(g), seed=np.pi)
    second = auto_bt(first, seed=np.pi / 2, residual_gate=1e-3)
    assert second.residual.max <= 2e-3       # measured 6e-4 at 401^2
    assert np.isfinite(second.u.values).all()


def test_auto_bt_coordinate_scaling():
    # a != 1 on the vacuum reproduces the a-scaled kink family
    g = Grid2.square(4.0, 401)
    a = 1.7
    ub = auto_bt(solutions.vacuum(g), a_param=a, seed=np.pi)
    X, T = g.meshgrid()
    w0 = ub.u.values[0, 0]
    c = np.log(np.tan(w0 / 4)) - (a * g.u_min + g.v_min / a)
    kink = 4 * np.arctan(np.exp(a * X + T / a + c))
    assert np.abs(ub.u.values - kink).max() <= 1e-4
    assert ub.residual.max <= 2e-3


def test_auto_bt_a_param_needs_constant_u():
    g = Grid2.square(3.0, 101)
    kink = solutions.lightcone_kink(g)
    with pytest.raises(ValueError, match="experimental"):
        auto_bt(kink, a_param=2.0, residual_gate=1e-2)
