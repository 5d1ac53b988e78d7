"""The fast-diffusion limit (tau, sigma) -> (0, inf) and the nonlocal equation.

Three experiments on the same coupled system:

* for d < 0 the control budget M = sqrt(2 inf F_eps) stabilizes as tau -> 0
  with sigma = 2/tau: the control problem is uniformly solvable;
* for d > 0 the free solution grows like exp(d T / tau), so M eventually
  grows monotonically: uniformity is lost;
* with sigma = 1/tau the averages of the two components approach each other
  at the rate sqrt(tau), and the fast component approaches the spatial mean
  of the scalar nonlocal equation  y_t - y_xx = a y + b_eff avg(y).
"""

from humcontrol import (
    InitialData,
    Scenario,
    SystemParams,
    run_average_convergence,
    run_limit_check,
    run_tau_sweep,
)

u0 = InitialData.parse("sine")
v0 = InitialData.parse("indicator(0.2,0.7)")

print("-- uniform control budget for d < 0 (sigma = 2/tau, N=120, M=600) --")
stable = Scenario(SystemParams(2.0, -0.5, 5.5, -5.0, 0.5, 2.0), u0, v0, 0.1, "stable")
for row in run_tau_sweep(stable, [0.5, 0.25, 0.12, 0.06, 0.03], "two_over_tau", 120, 600):
    print(f"  tau={row.x:<6g} M={row.big_m:8.4f}  free terminal={row.free_norm:.4e}")

print()
print("-- loss of uniformity for d > 0 (step count from the stability rule) --")
unstable = Scenario(SystemParams(2.0, -0.5, 5.5, 4.5, 0.5, 2.0), u0, v0, 0.1, "unstable")
for row in run_tau_sweep(unstable, [0.5, 0.3, 0.18, 0.11, 0.07], "two_over_tau", 15, 100):
    print(f"  tau={row.x:<6g} M={row.big_m:8.4f}  free terminal={row.free_norm:.4e}")

print()
print("-- averages of u and v approach each other at rate sqrt(tau) --")
mixing = Scenario(SystemParams(-3.0, 2.0, 1.0, -1.0, 0.5, 2.0), u0, v0, 0.1, "avg")
rows, fit = run_average_convergence(mixing, [0.2, 0.1, 0.05, 0.025, 0.0125], 100, 2000)
for row in rows:
    print(f"  tau={row.x:<7g} |avg u - avg v| = {row.avg_diff:.4e}")
print(f"  fitted rate: {fit.slope:.3f} (expected 1/2)")

print()
print("-- v converges to the mean of the nonlocal solution (b_eff = -b c / d) --")
for row in run_limit_check(mixing, [0.2, 0.1, 0.05, 0.025], 100, 1000):
    print(f"  tau={row.x:<6g} |v - avg y| = {row.avg_diff:.4e}")
