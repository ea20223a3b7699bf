"""
Convergence orders
==================

Maximum node errors against a fine-step reference, for four step sizes.
The cubic variational method is second order; the cubic Galerkin method
and the quadratic variational integrator are fourth order. The energy of
the quadratic integrator converges at second order only.
"""
import numpy as np

from hermite_onestep import State, convergence_study, make_double_well, reference_solution

sys = make_double_well()
ic = State(0.0, [0.74], [0.0])
dts = [0.01, 0.02, 0.05, 0.1]
t_end = 10.0

# One reference serves all three studies; it is sampled on the union of the node grids.
grid = np.unique(np.concatenate([d * np.arange(int(round(t_end / d)) + 1) for d in dts]))
ref = reference_solution(sys, ic, t_end, grid, dt_min=min(dts))
print(f"reference: dt_ref = {ref.dt_ref:g}, estimated accuracy {ref.accuracy:.1e}\n")

for kind in ("variational", "galerkin", "quadratic_vi"):
    rep = convergence_study(sys, kind, ic, dts, t_end, reference=ref)
    print(f"{kind} (energy measured on {rep.energy_mode} values)")
    print("      dt    traj_err     vel_err  energy_err")
    for row in zip(rep.dts, rep.traj_errors, rep.vel_errors, rep.energy_errors):
        print("  {:6.3f}  {:10.3e}  {:10.3e}  {:10.3e}".format(*row))
    print("  slopes: traj {:.2f}, vel {:.2f}, energy {:.2f}\n".format(*rep.fitted_slopes))
