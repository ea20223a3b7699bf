"""
Symplecticity of one step
=========================

For a linear system both one-step maps preserve the canonical symplectic
form; for the nonlinear double well they do not, although the defect is
small for a small step.
"""
from hermite_onestep import State, make_double_well, make_sho
from hermite_onestep.analysis import symplecticity_report

for method in ("variational", "galerkin"):
    for dt in (0.05, 0.1, 0.5):
        rep = symplecticity_report(method, make_sho(1.0), State(0.0, [0.74], [0.0]), dt)
        print(f"oscillator  {method:11s} dt = {dt:4}: defect {rep.defect:.1e}")
print()
for method in ("variational", "galerkin"):
    for dt in (0.05, 0.1, 0.5):
        rep = symplecticity_report(method, make_double_well(), State(0.0, [0.74], [0.0]), dt)
        print(f"double well {method:11s} dt = {dt:4}: defect {rep.defect:.1e}")
