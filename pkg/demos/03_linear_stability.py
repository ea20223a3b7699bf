"""
Linear stability on the harmonic oscillator
===========================================

On q'' + omega^2 q = 0 each method is a fixed 2x2 matrix acting on
(v, omega q) that depends only on z = omega dt. The probed matrices agree
with the rational closed forms, and the spectral radius shows where the
methods lose stability.
"""
import numpy as np

from hermite_onestep import amplification_closed_form, amplification_numeric, stability_sweep

z = 1.0
for method in ("variational", "galerkin", "midpoint"):
    A = amplification_numeric(method, omega=1.0, dt=z).matrix
    diff = np.abs(A - amplification_closed_form(method, z)).max()
    print(f"{method:12s} z = 1: probe vs closed form {diff:.1e}, det = {np.linalg.det(A):.15f}")
print()

grid = np.linspace(0.05, 10.0, 1000)
for method in ("variational", "galerkin", "midpoint"):
    sweep = stability_sweep(method, grid)
    text = ", ".join(f"({a:.8f}, {b:.8f})" for a, b in sweep.intervals) or "none"
    print(f"{method:12s} unstable on {text}")

# The interval edges are roots of the discriminant of the characteristic polynomial.
print()
print("sqrt(28/3), sqrt(10), sqrt(42) =", np.sqrt([28 / 3, 10, 42]))
print("sqrt(10),   sqrt(12), sqrt(60) =", np.sqrt([10, 12, 60]))
