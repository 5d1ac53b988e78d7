"""Command-line entry point: presets, config resolution, CSV/SVG output.

Subcommands: simulate, control, sweep-mesh, sweep-tau, avg-convergence,
limit-check.  Every option has a default; the presets fig1..fig8 bundle the
reference experiment parameters.  Precedence: CLI flags override config-file
values, which override preset values, which override the global defaults.

Config files are flat ``key=value`` text, one pair per line, ``#`` comments.
Exit codes: 0 success, 1 solver failure (singular pivot, CG stall, blow-up),
2 usage or configuration error.
"""

from __future__ import annotations

import os
import sys
from argparse import ArgumentParser
from dataclasses import dataclass

from .experiments import (
    InitialData,
    Scenario,
    SweepAborted,
    run_average_convergence,
    run_controlled,
    run_limit_check,
    run_mesh_sweep,
    run_tau_sweep,
    run_uncontrolled,
    write_sweep_csv,
)
from .hum import CgNoConvergenceError, CgOptions
from .mesh import l2_norm
from .operators import SingularPivotError
from .solvers import BlowUpError, SystemParams
from .svgplot import write_loglog_svg

OUTDIR_ENV = "HUMCONTROL_OUTDIR"

SUBCOMMANDS = ("simulate", "control", "sweep-mesh", "sweep-tau", "avg-convergence", "limit-check")

DEFAULTS: dict[str, str] = {
    "a": "2.0",
    "b": "-0.5",
    "c": "5.5",
    "d": "-4.5",
    "tau": "0.5",
    "sigma": "2.0",
    "T": "0.1",
    "omega": "0.3,0.8",
    "u0": "sine",
    "v0": "indicator(0.2,0.7)",
    "n": "200",
    "m": "500",
    "eps": "h4",
    "rel_tol": "1e-8",
    "max_iter": "500",
    "n_list": "20,40,80,160",
    "base_n": "20",
    "base_m": "100",
    "tau_list": "0.5,0.25,0.12,0.06,0.03",
    "sigma_rule": "two_over_tau",
    "m_cap": "500000",
    "out": "",
    "label": "",
    "svg": "false",
    "jobs": "1",
}

# Reference experiment bundles.  fig1/fig2: free runs, fig3/fig4: controlled
# runs, fig5: mesh sweep, fig6/fig7: tau sweeps, fig8: average convergence.
# fig7 is a desk-scale version of the unstable regime; the full-scale step
# counts stay reachable through explicit flags (--n 24 --tau-list ... ).
PRESETS: dict[str, dict[str, str]] = {
    "fig1": {"d": "-4.5"},
    "fig2": {"d": "5.0"},
    "fig3": {"d": "-4.5"},
    "fig4": {"d": "5.0"},
    "fig5": {"d": "-5.0", "n_list": "20,40,80,160", "base_n": "20", "base_m": "100"},
    "fig6": {"d": "-5.0", "n": "400", "m": "2000", "sigma_rule": "two_over_tau", "tau_list": "0.5,0.25,0.12,0.06,0.03"},
    "fig7": {"d": "4.5", "n": "15", "m": "100", "sigma_rule": "two_over_tau", "tau_list": "0.5,0.3,0.18,0.11,0.07"},
    "fig8": {
        "a": "-3.0",
        "b": "2.0",
        "c": "1.0",
        "d": "-1.0",
        "n": "100",
        "m": "2000",
        "sigma_rule": "one_over_tau",
        "tau_list": "0.2,0.1,0.05,0.025,0.0125",
    },
}


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run description (see module docstring for precedence)."""

    subcommand: str
    params: SystemParams
    u0: InitialData
    v0: InitialData
    horizon: float
    n: int
    m: int
    eps: str
    cg: CgOptions
    n_list: tuple[int, ...]
    base_n: int
    base_m: int
    tau_list: tuple[float, ...]
    sigma_rule: str
    m_cap: int
    out: str
    label: str
    svg: bool
    jobs: int
    dump: bool = False
    raw: dict[str, str] | None = None

    def config_lines(self) -> list[str]:
        assert self.raw is not None
        return [f"{k}={self.raw[k]}" for k in DEFAULTS]


def _parse_bool(text: str, key: str) -> bool:
    if text.lower() in ("true", "1", "yes"):
        return True
    if text.lower() in ("false", "0", "no"):
        return False
    raise UsageError(f"invalid boolean for '{key}': {text!r}")


def _parse_floats(text: str, key: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip() != "")
    except ValueError as exc:
        raise UsageError(f"invalid value for '{key}': {text!r}") from exc


def _parse_ints(text: str, key: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError as exc:
        raise UsageError(f"invalid value for '{key}': {text!r}") from exc


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line.strip()!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{lineno}: unknown config key '{key}'")
        values[key] = value
    return values


def _build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="humcontrol", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--preset", choices=sorted(PRESETS), help="experiment preset (fig1..fig8)")
        sp.add_argument("--config", help="flat key=value config file")
        sp.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")
        sp.add_argument("--svg", action="store_true", default=None, help="also write a log-log SVG chart")
        for key in ("a", "b", "c", "d", "tau", "sigma", "T", "omega", "u0", "v0", "n", "m", "eps",
                    "rel_tol", "max_iter", "n_list", "base_n", "base_m", "tau_list", "sigma_rule",
                    "m_cap", "out", "label", "jobs"):
            sp.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None, metavar="V")
    return parser


def parse_config(argv: list[str] | None = None) -> RunConfig:
    """Resolve argv (plus optional preset/config file) into a RunConfig.

    Raises ``UsageError`` for any malformed or unknown key; argparse itself
    exits with code 2 on unknown flags or a missing subcommand.
    """
    ns = _build_parser().parse_args(argv)
    raw = dict(DEFAULTS)
    if ns.preset is not None:
        raw.update(PRESETS[ns.preset])
    if ns.config is not None:
        raw.update(_read_config_file(ns.config))
    for key in DEFAULTS:
        flag = getattr(ns, key, None)
        if flag is not None:
            raw[key] = str(flag)
    if not raw["label"]:
        raw["label"] = ns.preset if ns.preset is not None else ns.subcommand

    def _float(key: str) -> float:
        try:
            return float(raw[key])
        except ValueError as exc:
            raise UsageError(f"invalid value for '{key}': {raw[key]!r}") from exc

    def _int(key: str) -> int:
        try:
            return int(raw[key])
        except ValueError as exc:
            raise UsageError(f"invalid value for '{key}': {raw[key]!r}") from exc

    omega = _parse_floats(raw["omega"], "omega")
    if len(omega) != 2:
        raise UsageError(f"omega needs two comma-separated values, got {raw['omega']!r}")
    try:
        params = SystemParams(
            a=_float("a"), b=_float("b"), c=_float("c"), d=_float("d"),
            tau=_float("tau"), sigma=_float("sigma"), omega=(omega[0], omega[1]),
        )
        u0 = InitialData.parse(raw["u0"])
        v0 = InitialData.parse(raw["v0"])
        cg = CgOptions(rel_tol=_float("rel_tol"), max_iter=_int("max_iter"))
    except UsageError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = raw["out"] or os.environ.get(OUTDIR_ENV, ".")
    eps = raw["eps"]
    if eps != "h4":
        try:
            if not float(eps) > 0.0:
                raise ValueError
        except ValueError as exc:
            raise UsageError(f"invalid value for 'eps': {eps!r} (use 'h4' or a positive number)") from exc
    return RunConfig(
        subcommand=ns.subcommand,
        params=params,
        u0=u0,
        v0=v0,
        horizon=_float("T"),
        n=_int("n"),
        m=_int("m"),
        eps=eps,
        cg=cg,
        n_list=_parse_ints(raw["n_list"], "n_list"),
        base_n=_int("base_n"),
        base_m=_int("base_m"),
        tau_list=_parse_floats(raw["tau_list"], "tau_list"),
        sigma_rule=raw["sigma_rule"],
        m_cap=_int("m_cap"),
        out=out,
        label=raw["label"],
        svg=_parse_bool(raw["svg"], "svg"),
        jobs=_int("jobs"),
        dump=bool(ns.dump_config),
        raw=raw,
    )


def _out_path(cfg: RunConfig, suffix: str) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    return os.path.join(cfg.out, f"{cfg.label}_{suffix}")


def _scenario(cfg: RunConfig) -> Scenario:
    return Scenario(cfg.params, cfg.u0, cfg.v0, cfg.horizon, cfg.label)


def _sweep_svg(cfg: RunConfig, rows, x_name: str) -> None:
    if not cfg.svg:
        return
    curves = []
    for label, pick in (("Nv", lambda r: r.cost), ("NyT", lambda r: r.target),
                        ("Inf_eps(F_eps)", lambda r: r.inf_f), ("big_M", lambda r: r.big_m),
                        ("free_norm", lambda r: r.free_norm), ("avg_diff", lambda r: r.avg_diff)):
        pts = [(r.x, pick(r)) for r in rows if pick(r) is not None]
        if pts:
            curves.append((label, [p[0] for p in pts], [p[1] for p in pts]))
    write_loglog_svg(curves, _out_path(cfg, "sweep.svg"), title=f"{cfg.label} vs {x_name}")


def main(cfg: RunConfig) -> int:
    """Execute a resolved config; returns the process exit code."""
    if cfg.dump:
        print("\n".join(cfg.config_lines()))
        return 0
    scenario = _scenario(cfg)
    if cfg.subcommand == "simulate":
        traj = run_uncontrolled(scenario, cfg.n, cfg.m, out_path=_out_path(cfg, "trajectory.csv"))
        grid = traj.grid
        print(f"{cfg.label}: |u(0)|={l2_norm(traj.u[0], grid):.6e} |u(T)|={l2_norm(traj.u[-1], grid):.6e}")
        print(f"{cfg.label}: |v(0)|={l2_norm(traj.v[0], grid):.6e} |v(T)|={l2_norm(traj.v[-1], grid):.6e}")
        return 0
    if cfg.subcommand == "control":
        sol = run_controlled(scenario, cfg.n, cfg.m, cfg.eps, cfg.cg, out_path=_out_path(cfg, "trajectory.csv"))
        sol.write_diagnostics_csv(_out_path(cfg, "diagnostics.csv"))
        bound = sol.big_m * sol.eps**0.5
        print(f"{cfg.label}: cost={sol.cost:.6e} target={sol.target_norm:.6e} "
              f"bound M*sqrt(eps)={bound:.6e} cg_iterations={sol.cg_iterations}")
        return 0
    if cfg.subcommand == "sweep-mesh":
        try:
            rows, fit = run_mesh_sweep(scenario, cfg.n_list, cfg.base_n, cfg.base_m, cfg.cg, jobs=cfg.jobs)
        except SweepAborted as exc:
            write_sweep_csv(exc.rows, _out_path(cfg, "sweep.csv"))
            raise
        write_sweep_csv(rows, _out_path(cfg, "sweep.csv"))
        _sweep_svg(cfg, rows, "dx")
        print(f"{cfg.label}: NyT slope vs dx = {fit.slope:.3f} over {fit.points_used} points")
        return 0
    if cfg.subcommand == "sweep-tau":
        rows = run_tau_sweep(scenario, cfg.tau_list, cfg.sigma_rule, cfg.n, cfg.m,
                             cfg.cg, m_cap=cfg.m_cap, jobs=cfg.jobs)
        write_sweep_csv(rows, _out_path(cfg, "sweep.csv"))
        _sweep_svg(cfg, rows, "tau")
        for row in rows:
            if row.flag is not None:
                print(f"{cfg.label}: row tau={row.x} flagged: {row.flag}", file=sys.stderr)
        shown = [r for r in rows if r.big_m is not None]
        if shown:
            print(f"{cfg.label}: big_M from {shown[0].big_m:.6e} (tau={shown[0].x}) "
                  f"to {shown[-1].big_m:.6e} (tau={shown[-1].x})")
        return 0
    if cfg.subcommand == "avg-convergence":
        rows, fit = run_average_convergence(scenario, cfg.tau_list, cfg.n, cfg.m,
                                            sigma_rule=cfg.sigma_rule, jobs=cfg.jobs)
        write_sweep_csv(rows, _out_path(cfg, "sweep.csv"))
        _sweep_svg(cfg, rows, "tau")
        print(f"{cfg.label}: |avg u - avg v| slope vs tau = {fit.slope:.3f} over {fit.points_used} points")
        return 0
    if cfg.subcommand == "limit-check":
        rows = run_limit_check(scenario, cfg.tau_list, cfg.n, cfg.m, jobs=cfg.jobs)
        write_sweep_csv(rows, _out_path(cfg, "sweep.csv"))
        _sweep_svg(cfg, rows, "tau")
        gaps = [r.avg_diff for r in rows]
        print(f"{cfg.label}: |v - avg y| from {gaps[0]:.6e} to {gaps[-1]:.6e}")
        return 0
    raise UsageError(f"unknown subcommand {cfg.subcommand!r}")


def run(argv: list[str] | None = None) -> int:
    """Parse argv and execute, mapping failures to the exit-code contract."""
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"humcontrol: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse --help (0) or usage error (2)
        return int(exc.code or 0)
    try:
        return main(cfg)
    except UsageError as exc:
        print(f"humcontrol: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"humcontrol: error: {exc}", file=sys.stderr)
        return 2
    except (SingularPivotError, BlowUpError, CgNoConvergenceError, SweepAborted) as exc:
        print(f"humcontrol: solver failure: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    entry()
