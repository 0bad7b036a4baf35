"""Grids, finite differencing, line ODE integration, contour quadrature.

Everything downstream works on uniform tensor grids.  Axis 0 of every value
array runs along the first coordinate (u, or x for (x,t) systems), axis 1
along the second (v, or t).  For complex-plane grids z = u + i v and the
Wirtinger derivatives are d = (d_u - i d_v)/2, dbar = (d_u + i d_v)/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

__all__ = [
    "Grid2", "ScalarField", "ContourPath", "GridError", "IntegrationBlowup",
    "diff", "integrate_line", "cumulative_line", "contour_integral",
    "staircase_path",
]


class GridError(ValueError):
    pass


class IntegrationBlowup(RuntimeError):
    """Non-finite value produced during a line integration."""

    def __init__(self, index: int):
        super().__init__(f"integration blow-up at node index {index}")
        self.index = index


@dataclass(frozen=True)
class Grid2:
    """Uniform rectangular grid on [u_min,u_max] x [v_min,v_max].

    ``plane`` records whether the coordinates are a real (u,v) pair or the
    real/imaginary parts of z = u + i v; it does not change the layout.
    """

    u_min: float
    u_max: float
    v_min: float
    v_max: float
    nu: int
    nv: int
    plane: Literal["real", "complex"] = "real"

    def __post_init__(self):
        if self.nu < 3 or self.nv < 3:
            raise GridError("grid too coarse: need at least 3 nodes per direction")
        if not (self.u_max > self.u_min and self.v_max > self.v_min):
            raise GridError("grid bounds must satisfy u_max > u_min, v_max > v_min")

    @property
    def hu(self) -> float:
        return (self.u_max - self.u_min) / (self.nu - 1)

    @property
    def hv(self) -> float:
        return (self.v_max - self.v_min) / (self.nv - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nu, self.nv)

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        # node(i,j) = (u_min + i*hu, v_min + j*hv) exactly, no cumulative drift
        u = self.u_min + self.hu * np.arange(self.nu)
        v = self.v_min + self.hv * np.arange(self.nv)
        return u, v

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        u, v = self.axes()
        return np.meshgrid(u, v, indexing="ij")

    def zgrid(self) -> np.ndarray:
        U, V = self.meshgrid()
        return U + 1j * V

    @staticmethod
    def square(L: float, n: int, plane: Literal["real", "complex"] = "real") -> "Grid2":
        return Grid2(-L, L, -L, L, n, n, plane)


@dataclass
class ScalarField:
    """One scalar (real or complex) per grid node."""

    grid: Grid2
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.grid.shape:
            raise GridError(
                f"value shape {self.values.shape} does not match grid {self.grid.shape}")

    @staticmethod
    def sample(grid: Grid2, fn) -> "ScalarField":
        U, V = grid.meshgrid()
        return ScalarField(grid, np.asarray(fn(U, V)))

    def map(self, fn) -> "ScalarField":
        return ScalarField(self.grid, fn(self.values))


Direction = Literal["u", "v", "z", "zbar"]


def _d_axis(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second-order derivative along one axis: central interior, 3-point one-sided edges."""
    if values.shape[axis] < 3:
        raise GridError("grid too coarse: need at least 3 nodes in differenced direction")
    out = np.empty_like(values, dtype=np.result_type(values, float))
    sl = [slice(None)] * values.ndim

    def at(i):
        s = list(sl)
        s[axis] = i
        return tuple(s)

    out[at(slice(1, -1))] = (values[at(slice(2, None))] - values[at(slice(0, -2))]) / (2 * h)
    out[at(0)] = (-3 * values[at(0)] + 4 * values[at(1)] - values[at(2)]) / (2 * h)
    out[at(-1)] = (3 * values[at(-1)] - 4 * values[at(-2)] + values[at(-3)]) / (2 * h)
    return out


def diff(f: ScalarField, direction: Direction) -> ScalarField:
    """Finite-difference derivative of a field, O(h^2) everywhere."""
    g = f.grid
    if direction == "u":
        vals = _d_axis(f.values, g.hu, 0)
    elif direction == "v":
        vals = _d_axis(f.values, g.hv, 1)
    elif direction == "z":
        vals = 0.5 * (_d_axis(f.values, g.hu, 0) - 1j * _d_axis(f.values, g.hv, 1))
    elif direction == "zbar":
        vals = 0.5 * (_d_axis(f.values, g.hu, 0) + 1j * _d_axis(f.values, g.hv, 1))
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return ScalarField(g, vals)


def diff_values(values: np.ndarray, grid: Grid2, direction: Direction) -> np.ndarray:
    """Array-level :func:`diff`; ``values`` may carry trailing matrix axes."""
    if direction == "u":
        return _d_axis(values, grid.hu, 0)
    if direction == "v":
        return _d_axis(values, grid.hv, 1)
    if direction == "z":
        return 0.5 * (_d_axis(values, grid.hu, 0) - 1j * _d_axis(values, grid.hv, 1))
    if direction == "zbar":
        return 0.5 * (_d_axis(values, grid.hu, 0) + 1j * _d_axis(values, grid.hv, 1))
    raise ValueError(f"unknown direction {direction!r}")


# ---------------------------------------------------------------------------
# line ODE integration
# ---------------------------------------------------------------------------

def _quad_mid(R: np.ndarray, i: int, m: int) -> np.ndarray:
    # quadratic interpolation of the sample sequence at s_i + h/2
    if i + 2 < m:
        return (3 * R[i] + 6 * R[i + 1] - R[i + 2]) / 8
    return (3 * R[i + 1] + 6 * R[i] - R[i - 1]) / 8


def integrate_line(R: np.ndarray, Y0: np.ndarray, h: float) -> np.ndarray:
    """Solve dY/ds = R(s) Y given samples R[k] at the grid nodes of one line.

    Classical 4-stage Runge-Kutta.  Even nodes are reached with double steps
    2h whose midpoint coefficients are the exact odd-node samples; odd nodes
    are then filled by single h steps with quadratically interpolated
    midpoints.  This keeps the accumulated error at the O(h^4) of RK4 instead
    of the O(h^2) that plain midpoint averaging of samples would give.

    ``R`` has shape (m, k, k) or batched (b, m, k, k) with the line along
    axis -3.  ``Y0`` broadcasts against R[..., 0, :, :].
    """
    R = np.asarray(R)
    m = R.shape[-3]
    if m < 3:
        raise GridError("grid too coarse: need at least 3 nodes along the line")
    Y = np.empty_like(R, dtype=np.result_type(R, Y0, float))
    Y[..., 0, :, :] = Y0
    H = 2 * h
    Rl = np.moveaxis(R, -3, 0)
    Yl = np.moveaxis(Y, -3, 0)
    for i in range(0, m - 2, 2):
        y = Yl[i]
        k1 = Rl[i] @ y
        k2 = Rl[i + 1] @ (y + 0.5 * H * k1)
        k3 = Rl[i + 1] @ (y + 0.5 * H * k2)
        k4 = Rl[i + 2] @ (y + H * k3)
        Yl[i + 2] = y + (H / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(Yl[i + 2])):
            raise IntegrationBlowup(i + 2)
    for i in range(0, m - 1, 2):
        Rm = _quad_mid(Rl, i, m)
        y = Yl[i]
        k1 = Rl[i] @ y
        k2 = Rm @ (y + 0.5 * h * k1)
        k3 = Rm @ (y + 0.5 * h * k2)
        k4 = Rl[i + 1] @ (y + h * k3)
        Yl[i + 1] = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(Yl[i + 1])):
            raise IntegrationBlowup(i + 1)
    return Y


def cumulative_line(R: np.ndarray, Y0: np.ndarray, h: float) -> np.ndarray:
    """Antiderivative along a line: dY/ds = R(s), same stepping as integrate_line.

    Simpson on double cells, Simpson with interpolated midpoint on the odd
    fill; used for the additive immersion equations dF = Phi^-1 A Phi du + ...
    """
    R = np.asarray(R)
    m = R.shape[-3] if R.ndim >= 3 else R.shape[0]
    axis = -3 if R.ndim >= 3 else 0
    Y = np.empty_like(R, dtype=np.result_type(R, Y0, float))
    Rl = np.moveaxis(R, axis, 0)
    Yl = np.moveaxis(Y, axis, 0)
    Yl[0] = Y0
    for i in range(0, m - 2, 2):
        Yl[i + 2] = Yl[i] + (h / 3) * (Rl[i] + 4 * Rl[i + 1] + Rl[i + 2])
    for i in range(0, m - 1, 2):
        Rm = _quad_mid(Rl, i, m)
        Yl[i + 1] = Yl[i] + (h / 6) * (Rl[i] + 4 * Rm + Rl[i + 1])
    if not np.all(np.isfinite(Y)):
        raise IntegrationBlowup(int(np.argmax(~np.isfinite(np.moveaxis(Y, axis, 0)).reshape(m, -1).all(axis=1))))
    return Y


# ---------------------------------------------------------------------------
# contour quadrature along grid edges
# ---------------------------------------------------------------------------

@dataclass
class ContourPath:
    """Ordered node list along grid edges from the base node to a target."""

    grid: Grid2
    nodes: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        nu, nv = self.grid.shape
        prev = None
        for (i, j) in self.nodes:
            if not (0 <= i < nu and 0 <= j < nv):
                raise GridError(f"path node {(i, j)} leaves the grid")
            if prev is not None and abs(i - prev[0]) + abs(j - prev[1]) != 1:
                raise GridError(f"path nodes {prev} -> {(i, j)} are not grid-adjacent")
            prev = (i, j)

    def reversed(self) -> "ContourPath":
        return ContourPath(self.grid, list(reversed(self.nodes)))

    def concat(self, other: "ContourPath") -> "ContourPath":
        if other.nodes[0] != self.nodes[-1]:
            raise GridError("paths do not share an endpoint")
        return ContourPath(self.grid, self.nodes + other.nodes[1:])


def staircase_path(grid: Grid2, start: tuple[int, int], end: tuple[int, int],
                   row_first: bool = True) -> ContourPath:
    """Monotone staircase between two nodes: along the row then the column."""
    i0, j0 = start
    i1, j1 = end
    nodes = [(i0, j0)]
    si = 1 if i1 >= i0 else -1
    sj = 1 if j1 >= j0 else -1
    if row_first:
        nodes += [(i, j0) for i in range(i0 + si, i1 + si, si)]
        nodes += [(i1, j) for j in range(j0 + sj, j1 + sj, sj)]
    else:
        nodes += [(i0, j) for j in range(j0 + sj, j1 + sj, sj)]
        nodes += [(i, j1) for i in range(i0 + si, i1 + si, si)]
    return ContourPath(grid, nodes)


def contour_integral(omega_z: ScalarField, omega_zbar: ScalarField,
                     path: ContourPath) -> complex:
    """Composite trapezoid of  omega_z dz' + omega_zbar dzbar'  along a path.

    Exactly additive under concatenation and antisymmetric under reversal
    because each edge contributes a single symmetric trapezoid term.
    """
    if omega_z.grid != omega_zbar.grid or omega_z.grid != path.grid:
        raise GridError("integrand fields and path must share one grid")
    g = path.grid
    P = omega_z.values
    Q = omega_zbar.values
    total = 0.0 + 0.0j
    for (i0, j0), (i1, j1) in zip(path.nodes[:-1], path.nodes[1:]):
        if i1 != i0:          # u-edge: dz = dzbar = +/- hu
            dz = (i1 - i0) * g.hu
            total += 0.5 * dz * ((P[i0, j0] + Q[i0, j0]) + (P[i1, j1] + Q[i1, j1]))
        else:                 # v-edge: dz = +/- i hv, dzbar = -dz
            dz = 1j * (j1 - j0) * g.hv
            total += 0.5 * dz * ((P[i0, j0] - Q[i0, j0]) + (P[i1, j1] - Q[i1, j1]))
    return complex(total)
