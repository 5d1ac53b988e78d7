"""Time integration of the coupled system, its discrete adjoint, and the
nonlocal limit equations.

The forward system on (0,T) x (0,1) is

    u_t - u_xx           = a u + b v + h 1_omega,   u = 0 at x = 0, 1,
    tau v_t - sigma v_xx = c u + d v,               v_x = 0 at x = 0, 1,

integrated by implicit Euler with the zero-order couplings taken implicitly
(no splitting error, O(N) per step).  Control slices are staggered: the slice
indexed n+1 enters the right-hand side of step n -> n+1.  With that staggering
the backward recursion below is the exact adjoint of the discrete forward
control-to-state map in the tau-weighted inner product, which the HUM module
relies on.

The discrete adjoint runs the *same* step matrix with the couplings b and c
swapped:

    S_adj (phi^n, psi^n) = (phi^{n+1}, tau psi^{n+1}),   n = M-1, ..., 0,

equivalently  -(phi^{n+1}-phi^n)/dt - phi_xx = a phi + c psi  and
-tau(psi^{n+1}-psi^n)/dt - sigma psi_xx = b phi + d psi, with the implicit
side evaluated at level n.

The nonlocal limit equation  y_t - y_xx = a y + b avg(y) + h 1_omega  (Dirichlet)
is integrated fully implicitly; the rank-one mean term is folded into the
tridiagonal solve by a Sherman-Morrison correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import Grid1D, TimeMesh, as_field, l2_norm, mean_value
from .operators import BlockStepMatrix, assemble_step_matrix

BLOWUP_THRESHOLD = 1e12


class BlowUpError(RuntimeError):
    """Raised when a trajectory norm exceeds the blow-up threshold.

    ``partial`` carries whatever was computed before the abort (a Trajectory
    for the coupled solvers, a snapshot array for the scalar ones).
    """

    def __init__(self, step: int, norm: float, partial=None):
        super().__init__(f"solution norm {norm:.3e} exceeded {BLOWUP_THRESHOLD:.0e} at step {step}")
        self.step = step
        self.norm = norm
        self.partial = partial


class RankOneBreakdownError(RuntimeError):
    """Raised when the Sherman-Morrison denominator of the nonlocal step vanishes."""


@dataclass(frozen=True)
class SystemParams:
    """Coupling coefficients, time/diffusion scales and the control window."""

    a: float
    b: float
    c: float
    d: float
    tau: float
    sigma: float
    omega: tuple[float, float] = (0.3, 0.8)

    def __post_init__(self) -> None:
        if not (self.tau > 0.0):
            raise ValueError(f"tau must be positive, got {self.tau!r}")
        if not (self.sigma > 0.0):
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        lo, hi = self.omega
        if not (0.0 <= lo < hi <= 1.0):
            raise ValueError(f"omega must satisfy 0 <= a < b <= 1, got {self.omega!r}")

    def adjoint(self) -> "SystemParams":
        """Parameters of the backward system: the coupling matrix is transposed,
        i.e. b and c swap roles."""
        return replace(self, b=self.c, c=self.b)


@dataclass
class Trajectory:
    """Time-indexed pair of nodal fields, snapshots 0..M."""

    grid: Grid1D
    time_mesh: TimeMesh
    u: np.ndarray
    v: np.ndarray

    def terminal(self) -> tuple[np.ndarray, np.ndarray]:
        return self.u[-1], self.v[-1]

    def write_csv(self, path) -> None:
        """Long-format dump with columns t, x, u, v."""
        t = self.time_mesh.times
        x = self.grid.nodes
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("t,x,u,v\n")
            for n in range(t.size):
                un, vn = self.u[n], self.v[n]
                tn = repr(float(t[n]))
                for i in range(x.size):
                    fh.write(f"{tn},{float(x[i])!r},{float(un[i])!r},{float(vn[i])!r}\n")


@dataclass(frozen=True)
class NonlinearitySpec:
    """Reaction term f(u, v) = a u + b v + g1(u,v) u^2 + g2(u) u v.

    ``g1`` and ``g2`` are bounded Lipschitz callables; the structure forces
    f(0,0) = 0, so zero is a stationary state of the uncontrolled equation.
    """

    a: float
    b: float
    g1: Callable = lambda u, v: 0.0
    g2: Callable = lambda u: 0.0

    def __call__(self, u, v):
        u = np.asarray(u, dtype=float)
        return self.a * u + self.b * v + self.g1(u, v) * u**2 + self.g2(u) * u * v


def pin_dirichlet(f: np.ndarray, name: str) -> np.ndarray:
    """Validate that a Dirichlet field vanishes at the boundary and pin the
    endpoints to exact zeros (float round-off like sin(pi) ~ 1e-16 is absorbed)."""
    scale = max(1.0, float(np.abs(f).max()))
    if abs(f[0]) > 1e-12 * scale or abs(f[-1]) > 1e-12 * scale:
        raise ValueError(f"{name} must vanish at the boundary nodes (Dirichlet component)")
    out = f.copy()
    out[0] = out[-1] = 0.0
    return out


def _blowup_norm(grid: Grid1D, *fields: np.ndarray):
    """Largest field norm if it breaches the threshold, else None."""
    worst = max(l2_norm(f, grid) for f in fields)
    if not math.isfinite(worst) or worst > BLOWUP_THRESHOLD:
        return worst
    return None


def _guard(step: int, u: np.ndarray, grid: Grid1D) -> None:
    nrm = _blowup_norm(grid, u)
    if nrm is not None:
        raise BlowUpError(step, nrm)


class CoupledStepper:
    """Implicit-Euler step of the coupled pair with a reusable factorization."""

    def __init__(self, p: SystemParams, grid: Grid1D, dt: float):
        self.params = p
        self.grid = grid
        self.dt = dt
        self.matrix: BlockStepMatrix = assemble_step_matrix(p, dt, grid)

    def step(self, u: np.ndarray, v: np.ndarray, source_u: Optional[np.ndarray] = None):
        """Advance one step; ``source_u`` is the (already masked) control slice."""
        rhs_u = u if source_u is None else u + self.dt * source_u
        return self.matrix.solve(rhs_u, self.params.tau * v)


def step_coupled(p: SystemParams, state, control_slice, dt: float, grid: Grid1D):
    """One-off step; builds the factorization each call, so use CoupledStepper
    inside time loops."""
    u, v = state
    stepper = CoupledStepper(p, grid, dt)
    src = None if control_slice is None else as_field(control_slice, grid)
    return stepper.step(as_field(u, grid), as_field(v, grid), src)


def solve_forward(
    p: SystemParams,
    grid: Grid1D,
    tm: TimeMesh,
    u0,
    v0,
    control: Optional[np.ndarray] = None,
) -> Trajectory:
    """Integrate the controlled forward system from (u0, v0).

    ``control`` has shape (M, n_nodes); row n acts during step n -> n+1 and
    must vanish outside the control window (the HUM module produces such
    arrays; hand-built controls can be masked with ``mesh.indicator``).
    """
    u = pin_dirichlet(as_field(u0, grid), "u0")
    v = as_field(v0, grid).copy()
    if control is not None:
        control = np.asarray(control, dtype=float)
        if control.shape != (tm.m_steps, grid.n_nodes):
            raise ValueError(f"control must have shape (M, n_nodes) = ({tm.m_steps}, {grid.n_nodes})")
    stepper = CoupledStepper(p, grid, tm.dt)
    traj_u = np.empty((tm.m_steps + 1, grid.n_nodes))
    traj_v = np.empty_like(traj_u)
    traj_u[0], traj_v[0] = u, v
    for n in range(tm.m_steps):
        src = None if control is None else control[n]
        u, v = stepper.step(u, v, src)
        traj_u[n + 1], traj_v[n + 1] = u, v
        nrm = _blowup_norm(grid, u, v)
        if nrm is not None:
            done = TimeMesh(tm.dt * (n + 1), n + 1)
            partial = Trajectory(grid, done, traj_u[: n + 2].copy(), traj_v[: n + 2].copy())
            raise BlowUpError(n + 1, nrm, partial)
    return Trajectory(grid, tm, traj_u, traj_v)


def solve_adjoint(p: SystemParams, grid: Grid1D, tm: TimeMesh, phi_T, psi_T) -> Trajectory:
    """Integrate the backward system from terminal data (phi_T, psi_T).

    The recursion is the exact tau-weighted transpose of the forward step, so
    it is performed by the forward stepper with b and c swapped.
    """
    phi = pin_dirichlet(as_field(phi_T, grid), "phi_T")
    psi = as_field(psi_T, grid).copy()
    stepper = CoupledStepper(p.adjoint(), grid, tm.dt)
    traj_u = np.empty((tm.m_steps + 1, grid.n_nodes))
    traj_v = np.empty_like(traj_u)
    traj_u[-1], traj_v[-1] = phi, psi
    for n in range(tm.m_steps - 1, -1, -1):
        phi, psi = stepper.step(phi, psi)
        _guard(n, psi, grid)
        traj_u[n], traj_v[n] = phi, psi
    return Trajectory(grid, tm, traj_u, traj_v)


class _PinnedTridiagonal:
    """Tridiagonal (I - dt*(Laplacian + a)) with Dirichlet identity rows."""

    def __init__(self, grid: Grid1D, dt: float, a: float):
        n = grid.n_nodes
        r = dt / grid.h ** 2
        main = np.ones(n)
        main[1:-1] = 1.0 - dt * a + 2.0 * r
        lo = np.zeros(n - 1)
        hi = np.zeros(n - 1)
        lo[1:-1] = -r  # row i couples to i-1 for interior i >= 2
        hi[1:-1] = -r
        mat = sp.diags([lo, main, hi], offsets=[-1, 0, 1], format="csc")
        self._lu = spla.splu(mat, permc_spec="NATURAL")

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self._lu.solve(rhs)


def solve_nonlocal_linear(
    a: float,
    b: float,
    y0,
    control: Optional[np.ndarray],
    tm: TimeMesh,
    grid: Grid1D,
) -> np.ndarray:
    """Implicit Euler for  y_t - y_xx = a y + b avg(y) + h 1_omega  (Dirichlet).

    The rank-one mean term is implicit as well: each step solves
    (A - dt*b*ones*q^T) y = rhs by a Sherman-Morrison correction of the
    tridiagonal solve, so the step stays unconditionally stable and O(N).
    Returns the snapshots as an array of shape (M+1, n_nodes).
    """
    y = pin_dirichlet(as_field(y0, grid), "y0")
    if control is not None:
        control = np.asarray(control, dtype=float)
        if control.shape != (tm.m_steps, grid.n_nodes):
            raise ValueError(f"control must have shape (M, n_nodes) = ({tm.m_steps}, {grid.n_nodes})")
    solver = _PinnedTridiagonal(grid, tm.dt, a)
    ones_int = np.zeros(grid.n_nodes)
    ones_int[1:-1] = 1.0
    col = solver.solve(tm.dt * b * ones_int)
    denom = 1.0 - float(np.dot(grid.quad_weights, col))
    if abs(denom) < 1e-12:
        raise RankOneBreakdownError(f"rank-one denominator {denom:.3e} too close to zero")
    out = np.empty((tm.m_steps + 1, grid.n_nodes))
    out[0] = y
    for n in range(tm.m_steps):
        rhs = y if control is None else y + tm.dt * control[n]
        base = solver.solve(rhs)
        y = base + col * (float(np.dot(grid.quad_weights, base)) / denom)
        out[n + 1] = y
        nrm = _blowup_norm(grid, y)
        if nrm is not None:
            raise BlowUpError(n + 1, nrm, out[: n + 2].copy())
    return out


def solve_semilinear_nonlocal(
    f: NonlinearitySpec,
    y0,
    control: Optional[np.ndarray],
    tm: TimeMesh,
    grid: Grid1D,
) -> np.ndarray:
    """Semi-implicit scheme for  y_t - y_xx = f(y, avg(y)) + h 1_omega.

    Diffusion is implicit; the full reaction term is evaluated at the previous
    time level (f is globally Lipschitz, so no Newton iteration is needed at
    these scales).  Aborts with ``BlowUpError`` once the norm passes 1e12.
    """
    y = pin_dirichlet(as_field(y0, grid), "y0")
    if control is not None:
        control = np.asarray(control, dtype=float)
        if control.shape != (tm.m_steps, grid.n_nodes):
            raise ValueError(f"control must have shape (M, n_nodes) = ({tm.m_steps}, {grid.n_nodes})")
    solver = _PinnedTridiagonal(grid, tm.dt, 0.0)
    out = np.empty((tm.m_steps + 1, grid.n_nodes))
    out[0] = y
    for n in range(tm.m_steps):
        rhs = y + tm.dt * f(y, mean_value(y, grid))
        if control is not None:
            rhs = rhs + tm.dt * control[n]
        rhs[0] = rhs[-1] = 0.0
        y = solver.solve(rhs)
        out[n + 1] = y
        nrm = _blowup_norm(grid, y)
        if nrm is not None:
            raise BlowUpError(n + 1, nrm, out[: n + 2].copy())
    return out


def stable_time_steps(p: SystemParams, grid: Grid1D, horizon: float) -> int:
    """Smallest M with |d| * (T/M) / tau^2 <= h^2.

    A relative guard absorbs float noise so that exact integer ratios (for
    instance |d|=4.5, h=1/25, tau=0.03, T=0.1 -> 312500) are hit exactly.
    """
    if horizon <= 0.0:
        raise ValueError(f"horizon must be positive, got {horizon!r}")
    if p.d == 0.0:
        return 1
    ratio = abs(p.d) * horizon / (p.tau ** 2 * grid.h ** 2)
    return max(1, math.ceil(ratio * (1.0 - 1e-12)))


def average_series(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Spatial averages (avg u(t_n), avg v(t_n)) for n = 0..M."""
    w = traj.grid.quad_weights
    return traj.u @ w, traj.v @ w
