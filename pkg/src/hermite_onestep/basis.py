"""Trial and test functions on a single time step.

Trial space: Hermite interpolation polynomials that carry the endpoint
values of q and its first ``n - 1`` time derivatives. Test space: Legendre
polynomials shifted to ``[0, dt]``.

Everything is evaluated in the normalized variable ``tau = t / dt``; the
chain-rule factors ``dt**-r`` are applied on output.
"""
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import numpy as np
from numpy.polynomial import polynomial as P

MAX_ORDER = 4

__all__ = [
    "ShapeEval",
    "TestEval",
    "cubic_shape",
    "hermite_general",
    "hermite_shapes",
    "hermite_table",
    "shifted_legendre",
    "legendre_table",
]


@dataclass(frozen=True)
class ShapeEval:
    """Shape-function values and time derivatives at one point."""

    values: np.ndarray
    first_derivs: np.ndarray
    second_derivs: np.ndarray


@dataclass(frozen=True)
class TestEval:
    """Shifted Legendre values ``P_0 ... P_k`` at one point."""

    values: np.ndarray

    __test__ = False  # not a pytest class


def _check_point(t, dt):
    if not dt > 0:
        raise ValueError(f"step length must be positive, got dt={dt!r}")
    slack = 1e-12 * dt
    if not (-slack <= t <= dt + slack):
        raise ValueError(f"t={t!r} lies outside [0, {dt!r}]")


def cubic_shape(t, dt):
    """Cubic Hermite functions ``N1..N4`` and their derivatives at ``t``.

    ``q(t) = q0*N1 + v0*N2 + q1*N3 + v1*N4`` interpolates position and
    velocity at both ends of ``[0, dt]``.
    """
    _check_point(t, dt)
    s = t / dt
    s2, s3 = s * s, s * s * s
    values = np.array([
        2 * s3 - 3 * s2 + 1,
        dt * (s3 - 2 * s2 + s),
        -2 * s3 + 3 * s2,
        dt * (s3 - s2),
    ])
    first = np.array([
        (6 * s2 - 6 * s) / dt,
        3 * s2 - 4 * s + 1,
        (-6 * s2 + 6 * s) / dt,
        3 * s2 - 2 * s,
    ])
    second = np.array([
        (12 * s - 6) / dt**2,
        (6 * s - 4) / dt,
        (-12 * s + 6) / dt**2,
        (6 * s - 2) / dt,
    ])
    return ShapeEval(values, first, second)


def _check_indices(n, j):
    if not 1 <= n <= MAX_ORDER:
        raise ValueError(f"interpolation order n={n} not in 1..{MAX_ORDER}")
    if not 0 <= j <= n - 1:
        raise ValueError(f"derivative index j={j} not in 0..{n - 1}")


@lru_cache(maxsize=None)
def _tau_coeffs(n, j):
    """Exact ascending coefficients of H_{n,j} in tau, without the dt**j factor."""
    one_minus = [Fraction(1)]
    for _ in range(n):
        one_minus = _polymul(one_minus, [Fraction(1), Fraction(-1)])
    tail = [Fraction(comb(n + s - 1, s)) for s in range(n - j)]
    lead = [Fraction(0)] * j + [Fraction(1, factorial(j))]
    return tuple(_polymul(_polymul(lead, one_minus), tail))


def _polymul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for k, y in enumerate(b):
            out[i + k] += x * y
    return out


@lru_cache(maxsize=None)
def _tau_derivs(n, j, deriv):
    c = np.array([float(x) for x in _tau_coeffs(n, j)])
    return P.polyder(c, deriv) if deriv else c


def hermite_general(n, j, t, dt, deriv=0):
    """``deriv``-th time derivative of the Hermite basis function H_{n,j}(t).

    H_{n,j} has unit j-th derivative at t=0 and all other derivatives of
    order < n vanish at both endpoints.
    """
    _check_indices(n, j)
    if deriv not in (0, 1, 2):
        raise ValueError(f"deriv must be 0, 1 or 2, got {deriv}")
    _check_point(t, dt)
    return float(P.polyval(t / dt, _tau_derivs(n, j, deriv)) * dt ** (j - deriv))


def hermite_table(n, taus, dt, deriv=0):
    """Shape-function table of shape ``(len(taus), 2n)``.

    Columns follow the endpoint-data ordering
    ``[q(0), q'(0), ..., q^(n-1)(0), q(dt), q'(dt), ..., q^(n-1)(dt)]``.
    The right-end functions are ``(-1)**j * H_{n,j}(dt - t)`` so that the
    j-th derivative at ``dt`` is +1.
    """
    if not 1 <= n <= MAX_ORDER:
        raise ValueError(f"interpolation order n={n} not in 1..{MAX_ORDER}")
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    out = np.empty((taus.size, 2 * n))
    for j in range(n):
        c = _tau_derivs(n, j, deriv)
        scale = dt ** (j - deriv)
        out[:, j] = P.polyval(taus, c) * scale
        out[:, n + j] = (-1) ** (j + deriv) * P.polyval(1.0 - taus, c) * scale
    return out


def hermite_shapes(n, t, dt):
    """All 2n shape functions of order ``n`` at ``t`` as a :class:`ShapeEval`."""
    _check_point(t, dt)
    tau = np.array([t / dt])
    return ShapeEval(*(hermite_table(n, tau, dt, r)[0] for r in range(3)))


def legendre_table(k_max, taus):
    """Shifted Legendre values, shape ``(len(taus), k_max + 1)``."""
    x = 2.0 * np.atleast_1d(np.asarray(taus, dtype=float)) - 1.0
    out = np.empty((x.size, k_max + 1))
    out[:, 0] = 1.0
    if k_max >= 1:
        out[:, 1] = x
    for k in range(1, k_max):
        out[:, k + 1] = ((2 * k + 1) * x * out[:, k] - k * out[:, k - 1]) / (k + 1)
    return out


def shifted_legendre(k_max, t, dt):
    """Legendre polynomials ``P_0 .. P_{k_max}`` mapped to ``[0, dt]``, at ``t``."""
    if k_max < 0:
        raise ValueError("k_max must be non-negative")
    _check_point(t, dt)
    return TestEval(legendre_table(k_max, [t / dt])[0])
