"""Gauss-Legendre rules on the unit interval."""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

DEFAULT_POINTS = 8
MAX_POINTS = 32


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes in (0, 1) and positive weights summing to one."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self):
        return self.nodes.size

    @property
    def degree(self):
        """Highest polynomial degree integrated exactly."""
        return 2 * self.nodes.size - 1


@lru_cache(maxsize=None)
def gauss_legendre(m=DEFAULT_POINTS):
    """The ``m``-point Gauss-Legendre rule mapped to ``[0, 1]``."""
    if not isinstance(m, (int, np.integer)) or not 1 <= m <= MAX_POINTS:
        raise ValueError(f"unsupported number of quadrature points: {m!r} (1..{MAX_POINTS})")
    x, w = np.polynomial.legendre.leggauss(int(m))
    nodes = 0.5 * (x + 1.0)
    weights = 0.5 * w
    # symmetrize to kill the last-bit asymmetry of the eigenvalue solver
    nodes = 0.5 * (nodes + (1.0 - nodes[::-1]))
    weights = 0.5 * (weights + weights[::-1])
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return QuadratureRule(nodes, weights)


def integrate(f, dt, rule=None):
    """``dt * sum_i w_i f(dt * tau_i)`` for a (possibly vector-valued) ``f``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    rule = rule or gauss_legendre()
    vals = [np.asarray(f(dt * tau), dtype=float) for tau in rule.nodes]
    return dt * sum(w * v for w, v in zip(rule.weights, vals))
