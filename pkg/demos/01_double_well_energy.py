"""
Energy behaviour on the double well
===================================

A unit mass in the potential U = (q^4 - q^2) / 2 is integrated for 200 steps
of dt = 0.1 by the two one-step Hermite methods and by the two
discrete-mechanics baselines. Nothing dissipates, so any change in the
energy is numerical error.
"""
import numpy as np

from hermite_onestep import State, energy_error_series, make_double_well, simulate

sys = make_double_well()

# Two initial conditions: one oscillating inside a well, one just below the
# barrier at q = 0, where the motion is much more anharmonic.
for q0 in (0.74, 0.995):
    ic = State(0.0, [q0], [0.0])
    print(f"initial condition q0 = {q0}, E0 = {sys.energy(ic.q, ic.v):+.6f}")
    for name in ("variational", "galerkin", "midpoint_vi", "quadratic_vi"):
        traj = simulate(sys, name, ic, 0.1, 20.0)
        # The Hermite methods carry velocities at the nodes. The baselines are
        # measured on their own discrete curve, as is customary for them.
        series = energy_error_series(traj, sys, energy="auto")
        print(f"  {name:13s} max |E - E0| = {series[:, 1].max():.3e}")
    print()

# The Galerkin error does not drift: it oscillates with the motion.
traj = simulate(sys, "galerkin", State(0.0, [0.74], [0.0]), 0.1, 20.0)
err = energy_error_series(traj, sys)[:, 1]
print("galerkin error, first 10% vs remainder:", f"{err[:21].max():.2e}", f"{err[21:].max():.2e}")

# Trajectories are C1: each segment's end data is the next segment's start data.
a, b = traj.segments[10], traj.segments[11]
print("velocity continuity at t = 1.1:", np.array_equal(a.right[1], b.left[1]))
