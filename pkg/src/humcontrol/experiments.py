"""Scenario presets, sweep drivers, slope fits and CSV emission.

Sweep tables are written with the fixed header

    dx,Nv,NyT,Inf_eps(F_eps),big_M,free_norm,avg_diff

where ``dx`` holds the sweep variable (mesh size h or time scale tau), ``Nv``
the control cost, ``NyT`` the tau-weighted terminal norm and ``Inf_eps(F_eps)``
the optimal energy.  Unused columns stay empty.  Floats are written with
``repr`` so repeated runs produce byte-identical files.
"""

from __future__ import annotations

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .hum import CgOptions, HumSolution, solve_penalized_hum, weighted_norm
from .mesh import Grid1D, indicator, l2_norm, l2_norm_time, make_grid, make_time_mesh
from .solvers import (
    BlowUpError,
    SystemParams,
    Trajectory,
    average_series,
    solve_forward,
    solve_nonlocal_linear,
    stable_time_steps,
)

SWEEP_COLUMNS = ("dx", "Nv", "NyT", "Inf_eps(F_eps)", "big_M", "free_norm", "avg_diff")

M_CAP = 500_000  # hard cap on time steps per sweep row; rows needing more are flagged


class SweepAborted(RuntimeError):
    """A sweep row failed; the partial table is attached."""

    def __init__(self, rows: list["SweepRow"], cause: BaseException):
        super().__init__(f"sweep aborted after {len(rows)} rows: {cause}")
        self.rows = rows
        self.cause = cause


@dataclass(frozen=True)
class InitialData:
    """Named analytic initial datum, evaluable on any grid.

    Vocabulary: zero, sine(k), indicator(a,b), constant(c).
    """

    kind: str
    args: tuple[float, ...] = ()

    def evaluate(self, grid: Grid1D) -> np.ndarray:
        x = grid.nodes
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "sine":
            k = self.args[0] if self.args else 1.0
            f = np.sin(k * np.pi * x)
            f[0] = f[-1] = 0.0  # sin(k*pi) in floats is O(1e-16), not zero
            return f
        if self.kind == "indicator":
            return indicator(self.args[0], self.args[1], grid)
        if self.kind == "constant":
            return np.full_like(x, self.args[0])
        raise ValueError(f"unknown initial datum kind {self.kind!r}")

    def __str__(self) -> str:
        if not self.args:
            return self.kind
        return f"{self.kind}({','.join(repr(a) for a in self.args)})"

    @classmethod
    def parse(cls, text: str) -> "InitialData":
        text = text.strip()
        m = re.fullmatch(r"(zero|sine|indicator|constant)(?:\(([^)]*)\))?", text)
        if m is None:
            raise ValueError(f"cannot parse initial datum {text!r}")
        kind = m.group(1)
        args = tuple(float(a) for a in m.group(2).split(",")) if m.group(2) else ()
        if kind == "indicator" and len(args) != 2:
            raise ValueError("indicator needs two arguments, e.g. indicator(0.2,0.7)")
        if kind == "constant" and len(args) != 1:
            raise ValueError("constant needs one argument, e.g. constant(1.0)")
        if kind == "sine" and len(args) > 1:
            raise ValueError("sine takes at most one argument, e.g. sine(2)")
        if kind == "zero" and args:
            raise ValueError("zero takes no arguments")
        return cls(kind, args)


@dataclass(frozen=True)
class Scenario:
    params: SystemParams
    u0: InitialData
    v0: InitialData
    horizon: float
    label: str = ""


@dataclass
class SweepRow:
    x: float
    cost: Optional[float] = None
    target: Optional[float] = None
    inf_f: Optional[float] = None
    big_m: Optional[float] = None
    free_norm: Optional[float] = None
    avg_diff: Optional[float] = None
    flag: Optional[str] = None

    def as_csv_fields(self) -> list[str]:
        vals = (self.x, self.cost, self.target, self.inf_f, self.big_m, self.free_norm, self.avg_diff)
        return ["" if v is None else repr(float(v)) for v in vals]


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    points_used: int


def fit_slope(xs: Sequence[float], ys: Sequence[float]) -> SlopeFit:
    """Least-squares slope of log y against log x.

    With four or more points the first (coarsest) point is excluded as a
    pre-asymptotic guard.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size != ys.size or xs.size < 3:
        raise ValueError("need at least 3 matching points for a slope fit")
    if np.any(xs <= 0.0) or np.any(ys <= 0.0):
        raise ValueError("slope fits need strictly positive values")
    if xs.size >= 4:
        xs, ys = xs[1:], ys[1:]
    slope, intercept = np.polyfit(np.log(xs), np.log(ys), 1)
    return SlopeFit(float(slope), float(intercept), int(xs.size))


def write_sweep_csv(rows: Sequence[SweepRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(SWEEP_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(row.as_csv_fields()) + "\n")


def _resolve_eps(eps_rule: str | float, h: float) -> float:
    """eps_rule is either the mesh-tied rule "h4" or a fixed positive value."""
    if isinstance(eps_rule, str):
        if eps_rule == "h4":
            return h**4
        eps_rule = float(eps_rule)
    if not (eps_rule > 0.0):
        raise ValueError(f"eps must be positive, got {eps_rule!r}")
    return float(eps_rule)


def sigma_for(rule: str, tau: float) -> float:
    if rule == "two_over_tau":
        return 2.0 / tau
    if rule == "one_over_tau":
        return 1.0 / tau
    m = re.fullmatch(r"fixed[:(]([^)]+)\)?", rule)
    if m is not None:
        return float(m.group(1))
    raise ValueError(f"unknown sigma rule {rule!r}")


def _map_rows(worker: Callable[[int], SweepRow], count: int, jobs: int) -> list[SweepRow]:
    """Order-preserving evaluation of independent sweep rows."""
    if jobs <= 1:
        return [worker(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, range(count)))


def run_uncontrolled(scenario: Scenario, n: int, m: int, out_path=None) -> Trajectory:
    """Free solve of the coupled system; optionally dumps the trajectory CSV.

    On blow-up the dump still receives the computed prefix before the error
    propagates.
    """
    grid = make_grid(n)
    tm = make_time_mesh(scenario.horizon, m)
    try:
        traj = solve_forward(scenario.params, grid, tm, scenario.u0.evaluate(grid), scenario.v0.evaluate(grid))
    except BlowUpError as exc:
        if out_path is not None and exc.partial is not None:
            exc.partial.write_csv(out_path)
        raise
    if out_path is not None:
        traj.write_csv(out_path)
    return traj


def run_controlled(
    scenario: Scenario,
    n: int,
    m: int,
    eps_rule: str | float = "h4",
    opts: CgOptions | None = None,
    out_path=None,
) -> HumSolution:
    """Penalized-HUM solve on the scenario; optionally dumps the trajectory CSV."""
    grid = make_grid(n)
    tm = make_time_mesh(scenario.horizon, m)
    eps = _resolve_eps(eps_rule, grid.h)
    sol = solve_penalized_hum(
        scenario.params, grid, tm, scenario.u0.evaluate(grid), scenario.v0.evaluate(grid), eps, opts
    )
    if out_path is not None:
        sol.trajectory.write_csv(out_path)
    return sol


def hum_row(x: float, sol: HumSolution) -> SweepRow:
    return SweepRow(
        x=x,
        cost=sol.cost,
        target=sol.target_norm,
        inf_f=sol.inf_F,
        big_m=sol.big_m,
        free_norm=sol.free_norm,
    )


def run_mesh_sweep(
    scenario: Scenario,
    n_list: Sequence[int],
    base_n: int,
    base_m: int,
    opts: CgOptions | None = None,
    jobs: int = 1,
) -> tuple[list[SweepRow], SlopeFit]:
    """HUM solves over a mesh refinement with eps = h^4 per row.

    Time steps scale with the spatial refinement, m = base_m * (n / base_n),
    so dt/h stays fixed along the sweep.  Returns the rows and the log-log
    slope fit of the terminal norm NyT against dx.  Any row failure aborts
    the sweep with the partial table attached to ``SweepAborted``.
    """
    n_list = list(n_list)
    if len(n_list) < 3:
        raise ValueError("mesh sweep needs at least 3 grid sizes")
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("mesh sweep grid sizes must be strictly increasing")

    def worker(i: int) -> SweepRow:
        n = n_list[i]
        m = max(1, round(base_m * n / base_n))
        return hum_row(make_grid(n).h, run_controlled(scenario, n, m, "h4", opts))

    rows: list[SweepRow] = []
    try:
        rows = _map_rows(worker, len(n_list), jobs)
    except (BlowUpError, RuntimeError) as exc:  # keep whatever completed
        raise SweepAborted(rows, exc) from exc
    fit = fit_slope([r.x for r in rows], [r.target for r in rows])
    return rows, fit


def run_tau_sweep(
    scenario: Scenario,
    tau_list: Sequence[float],
    sigma_rule: str,
    n: int,
    m: int,
    opts: CgOptions | None = None,
    m_cap: int = M_CAP,
    jobs: int = 1,
) -> list[SweepRow]:
    """HUM solves over a decreasing sequence of tau with sigma tied to tau.

    For d > 0 the row's step count comes from the stability rule
    |d| dt / tau^2 <= h^2 (capped at ``m_cap``; capped rows are flagged).
    Rows that blow up are flagged and the sweep continues.
    """
    tau_list = [float(t) for t in tau_list]
    if any(not (0.0 < t <= 1.0) for t in tau_list):
        raise ValueError("tau values must lie in (0, 1]")
    if any(b >= a for a, b in zip(tau_list, tau_list[1:])):
        raise ValueError("tau values must be strictly decreasing")
    grid = make_grid(n)

    def worker(i: int) -> SweepRow:
        tau = tau_list[i]
        params = replace(scenario.params, tau=tau, sigma=sigma_for(sigma_rule, tau))
        flag = None
        m_row = m
        if params.d > 0.0:
            m_needed = stable_time_steps(params, grid, scenario.horizon)
            m_row = max(m, m_needed)
            if m_row > m_cap:
                m_row = m_cap
                flag = "m_capped"
        row_scenario = replace(scenario, params=params)
        try:
            row = hum_row(tau, run_controlled(row_scenario, n, m_row, "h4", opts))
        except BlowUpError:
            return SweepRow(x=tau, flag="blow_up")
        row.flag = flag
        return row

    return _map_rows(worker, len(tau_list), jobs)


def run_average_convergence(
    scenario: Scenario,
    tau_list: Sequence[float],
    n: int,
    m: int,
    sigma_rule: str = "one_over_tau",
    jobs: int = 1,
) -> tuple[list[SweepRow], SlopeFit]:
    """L2(0,T) distance between the component averages along tau -> 0.

    Each row runs the uncontrolled coupled system with sigma tied to tau and
    records ||avg u - avg v||_{L2(0,T)}; the slope fit is against tau.
    """
    tau_list = [float(t) for t in tau_list]
    if len(tau_list) < 4:
        raise ValueError("average-convergence sweep needs at least 4 tau values")
    if any(b >= a for a, b in zip(tau_list, tau_list[1:])):
        raise ValueError("tau values must be strictly decreasing")
    tm = make_time_mesh(scenario.horizon, m)

    def worker(i: int) -> SweepRow:
        tau = tau_list[i]
        params = replace(scenario.params, tau=tau, sigma=sigma_for(sigma_rule, tau))
        traj = run_uncontrolled(replace(scenario, params=params), n, m)
        mean_u, mean_v = average_series(traj)
        return SweepRow(x=tau, avg_diff=l2_norm_time(mean_u - mean_v, tm))

    rows = _map_rows(worker, len(tau_list), jobs)
    fit = fit_slope([r.x for r in rows], [r.avg_diff for r in rows])
    return rows, fit


def run_limit_check(
    scenario: Scenario,
    tau_list: Sequence[float],
    n: int,
    m: int,
    control: Optional[np.ndarray] = None,
    jobs: int = 1,
) -> list[SweepRow]:
    """Distance of the fast component to the mean of the nonlocal solution.

    For each tau (with sigma = 1/tau) the coupled system and the limit
    equation  y_t - y_xx = a y + b_eff avg(y) + h 1_omega  share the data
    u0 and the control; the effective mean coupling is b_eff = -b c / d.
    The row records ||v - avg(y)||_{L2((0,T)x(0,1))}.
    """
    p = scenario.params
    if p.d == 0.0:
        raise ValueError("the fast-diffusion limit needs d != 0")
    grid = make_grid(n)
    tm = make_time_mesh(scenario.horizon, m)
    b_eff = -p.b * p.c / p.d
    u0 = scenario.u0.evaluate(grid)
    v0 = scenario.v0.evaluate(grid)
    y = solve_nonlocal_linear(p.a, b_eff, u0, control, tm, grid)
    mean_y = y @ grid.quad_weights

    def worker(i: int) -> SweepRow:
        tau = tau_list[i]
        params = replace(p, tau=tau, sigma=1.0 / tau)
        traj = solve_forward(params, grid, tm, u0, v0, control)
        gap = np.array([l2_norm(traj.v[k] - mean_y[k], grid) for k in range(tm.m_steps + 1)])
        return SweepRow(x=tau, avg_diff=l2_norm_time(gap, tm))

    return _map_rows(worker, len(tau_list), jobs)


def energy_ratio(traj: Trajectory, tau: float) -> float:
    """sup_n E_n / E_0 with E = ||u||^2 + tau ||v||^2 (discrete energy bound)."""
    e = np.array(
        [weighted_norm(traj.u[k], traj.v[k], tau, traj.grid) ** 2 for k in range(traj.u.shape[0])]
    )
    if e[0] == 0.0:
        return 0.0 if float(e.max()) == 0.0 else math.inf
    return float(e.max() / e[0])
