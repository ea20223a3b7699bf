"""
Dissipation in the Duffing oscillator
=====================================

x'' + delta x' - x + 2 x^3 = 0 is the double well with linear damping. The
numerical energy must decrease monotonically. Its error against a
fine-step reference starts near 1e-4 (variational) and 1e-7 (Galerkin) and
shrinks as the motion decays, faster for stronger damping.
"""
import numpy as np

from hermite_onestep import State, energy_error_series, make_duffing, reference_solution, simulate

ic = State(0.0, [1.0], [0.0])
dt, t_end = 0.1, 50.0
times = dt * np.arange(int(round(t_end / dt)) + 1)

for delta in (0.025, 0.05, 0.1):
    sys = make_duffing(delta)
    # the reference takes a few seconds per damping value
    ref = reference_solution(sys, ic, t_end, times, dt_ref=2e-3)
    print(f"delta = {delta}")
    for method in ("variational", "galerkin"):
        traj = simulate(sys, method, ic, dt, t_end)
        E = sys.energy(traj.q, traj.v)
        err = energy_error_series(traj, sys, "vs_reference", ref)[:, 1]
        print(f"  {method:11s} largest energy increase per step {np.diff(E).max():+.1e}; "
              f"error first 5 s {err[:50].max():.2e}, last 5 s {err[-50:].max():.2e}")
