"""Free dynamics of the coupled fast-diffusion pair.

The first component u satisfies a Dirichlet reaction-diffusion equation, the
second component v a Neumann equation with time scale tau and diffusivity
sigma.  Without control, u is always damped; the fate of v is decided by the
sign of the zero-order coefficient d.
"""

import numpy as np

from humcontrol import (
    InitialData,
    Scenario,
    SystemParams,
    l2_norm,
    run_uncontrolled,
)

T = 0.1
N, M = 200, 500
u0 = InitialData.parse("sine")
v0 = InitialData.parse("indicator(0.2,0.7)")

for d in (-4.5, 5.0):
    params = SystemParams(a=2.0, b=-0.5, c=5.5, d=d, tau=0.5, sigma=2.0)
    scenario = Scenario(params, u0, v0, T, f"free_d{d:g}")
    traj = run_uncontrolled(scenario, N, M, out_path=f"free_dynamics_d{d:g}.csv")
    g = traj.grid
    print(f"d = {d:+.1f}")
    print(f"  |u(0)| = {l2_norm(traj.u[0], g):.4f}   |u(T)| = {l2_norm(traj.u[-1], g):.4f}")
    print(f"  |v(0)| = {l2_norm(traj.v[0], g):.4f}   |v(T)| = {l2_norm(traj.v[-1], g):.4f}")
    trend = "damped" if l2_norm(traj.v[-1], g) < l2_norm(traj.v[0], g) else "growing"
    print(f"  -> second component is {trend} (trajectory in free_dynamics_d{d:g}.csv)")
    print()

print("The v-equation acts on the fast time scale t/tau: for d > 0 the")
print("zero-order term feeds energy faster than diffusion can remove it.")
