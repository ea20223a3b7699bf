"""Forced Lagrangian systems of separable form.

A system is described by its mass matrix M(q), potential U(q) and a
velocity-dependent generalized force f(q, v), giving

    L(q, v) = 1/2 v^T M(q) v - U(q)
    M(q) a + (Coriolis terms) + dU/dq - f(q, v) = 0

All callables are batched: ``q`` and ``v`` may carry any number of leading
axes in front of the trailing DOF axis of length ``dim``.
"""
from dataclasses import dataclass, field, fields
from typing import Callable, Optional

import numpy as np

__all__ = [
    "State",
    "SystemModel",
    "AeroParams",
    "eom_residual",
    "make_free_particle",
    "make_sho",
    "make_double_well",
    "make_duffing",
    "make_aeroelastic",
    "SYSTEMS",
    "build_system",
]


@dataclass(frozen=True)
class State:
    """Time, configuration and velocity of a ``d``-DOF system."""

    t: float
    q: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float)).copy()
        v = np.atleast_1d(np.asarray(self.v, dtype=float)).copy()
        if q.ndim != 1 or q.shape != v.shape:
            raise ValueError(f"q and v must be vectors of equal length, got {q.shape} and {v.shape}")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(v)) and np.isfinite(self.t)):
            raise ValueError("state contains non-finite entries")
        q.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "v", v)

    @property
    def dim(self):
        return self.q.size


def _zeros_force(q, v):
    return np.zeros(np.broadcast_shapes(np.shape(q), np.shape(v)))


@dataclass(frozen=True)
class SystemModel:
    """Immutable bundle of the maps defining a forced separable Lagrangian system.

    ``potential_hessian`` and ``force_jacobian`` are optional; when present
    (and the mass matrix is constant) the steppers assemble exact Newton
    Jacobians instead of finite-difference ones. ``force_jacobian`` returns
    the pair ``(df/dq, df/dv)``. ``mass_matrix_grad(q)[..., k, i, j]`` is
    ``dM_ij/dq_k`` and is only needed for configuration-dependent mass.
    """

    name: str
    dim: int
    mass_matrix: Callable
    potential: Callable
    potential_grad: Callable
    force: Callable = _zeros_force
    potential_hessian: Optional[Callable] = None
    force_jacobian: Optional[Callable] = None
    mass_matrix_grad: Optional[Callable] = None
    constant_mass: bool = True
    conservative: bool = True
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be at least 1")
        if not self.constant_mass and self.mass_matrix_grad is None:
            raise ValueError("configuration-dependent mass needs mass_matrix_grad")
        M = np.asarray(self.mass_matrix(np.zeros(self.dim)), dtype=float)
        if M.shape != (self.dim, self.dim):
            raise ValueError(f"mass matrix has shape {M.shape}, expected {(self.dim, self.dim)}")
        _check_spd(M)

    @property
    def has_derivatives(self):
        """True when exact Newton Jacobians can be assembled."""
        return (
            self.constant_mass
            and self.potential_hessian is not None
            and (self.conservative or self.force_jacobian is not None)
        )

    def kinetic(self, q, v):
        M = self.mass_matrix(q)
        return 0.5 * np.einsum("...i,...ij,...j->...", v, M, v)

    def lagrangian(self, q, v):
        return self.kinetic(q, v) - self.potential(q)

    def energy(self, q, v):
        return self.kinetic(q, v) + self.potential(q)

    def dL_dv(self, q, v):
        return np.einsum("...ij,...j->...i", self.mass_matrix(q), v)

    def dL_dq(self, q, v):
        out = -np.asarray(self.potential_grad(q), dtype=float)
        if not self.constant_mass:
            dM = self.mass_matrix_grad(q)
            out = out + 0.5 * np.einsum("...i,...kij,...j->...k", v, dM, v)
        return out

    def momentum(self, q, v):
        return self.dL_dv(q, v)

    def velocity(self, q, p):
        """Inverse Legendre map ``v = M(q)^-1 p``."""
        M = self.mass_matrix(q)
        return np.linalg.solve(M, np.asarray(p, dtype=float)[..., None])[..., 0]

    def eom_residual(self, q, v, a):
        """``d/dt(dL/dv) - dL/dq - f``; reduces to ``M a + dU/dq - f`` for constant M."""
        out = (
            np.einsum("...ij,...j->...i", self.mass_matrix(q), a)
            + self.potential_grad(q)
            - self.force(q, v)
        )
        if not self.constant_mass:
            dM = self.mass_matrix_grad(q)
            out = out + np.einsum("...kij,...k,...j->...i", dM, v, v)
            out = out - 0.5 * np.einsum("...i,...kij,...j->...k", v, dM, v)
        return out


def _check_spd(M):
    if not np.allclose(M, M.T, rtol=1e-12, atol=0.0):
        raise ValueError("mass matrix is not symmetric")
    if np.linalg.eigvalsh(M).min() <= 0:
        raise ValueError("mass matrix is not positive definite")


def eom_residual(sys, q, v, a):
    """Equations of motion in residual form; zero on exact solutions."""
    q, v, a = (np.asarray(x, dtype=float) for x in (q, v, a))
    for name, x in (("q", q), ("v", v), ("a", a)):
        if x.shape[-1:] != (sys.dim,):
            raise ValueError(f"{name} has trailing dimension {x.shape[-1:]}, system has dim {sys.dim}")
    return sys.eom_residual(q, v, a)


def _const(value, dim=1):
    M = np.atleast_2d(np.asarray(value, dtype=float))

    def mass(q):
        q = np.asarray(q)
        return np.broadcast_to(M, q.shape[:-1] + (dim, dim))

    return mass


def _diag1(fn):
    """Lift a scalar second derivative to a batched 1x1 matrix."""
    return lambda q: np.asarray(fn(q), dtype=float)[..., None]


def make_free_particle(m=1.0):
    """``L = 1/2 m v^2``; every trajectory is a straight line."""
    if not m > 0:
        raise ValueError("mass must be positive")
    return SystemModel(
        name="free_particle",
        dim=1,
        mass_matrix=_const(m),
        potential=lambda q: np.zeros(np.shape(q)[:-1]),
        potential_grad=lambda q: np.zeros(np.shape(q)),
        potential_hessian=lambda q: np.zeros(np.shape(q) + (1,)),
        params={"m": m},
    )


def make_sho(omega=1.0):
    """Harmonic oscillator ``L = 1/2 v^2 - 1/2 omega^2 q^2``."""
    if not omega > 0:
        raise ValueError("omega must be positive")
    w2 = omega * omega
    return SystemModel(
        name="sho",
        dim=1,
        mass_matrix=_const(1.0),
        potential=lambda q: 0.5 * w2 * np.asarray(q)[..., 0] ** 2,
        potential_grad=lambda q: w2 * np.asarray(q, dtype=float),
        potential_hessian=lambda q: np.full(np.shape(q) + (1,), w2),
        params={"omega": omega},
    )


def make_double_well(m=1.0):
    """Particle in the potential ``U = 1/2 (q^4 - q^2)``."""
    if not m > 0:
        raise ValueError("mass must be positive")
    return SystemModel(
        name="double_well",
        dim=1,
        mass_matrix=_const(m),
        potential=lambda q: 0.5 * (np.asarray(q)[..., 0] ** 4 - np.asarray(q)[..., 0] ** 2),
        potential_grad=lambda q: 2.0 * np.asarray(q) ** 3 - np.asarray(q),
        potential_hessian=_diag1(lambda q: 6.0 * np.asarray(q) ** 2 - 1.0),
        params={"m": m},
    )


def make_duffing(delta, alpha=-1.0, beta=2.0):
    """Duffing oscillator ``x'' + delta x' + alpha x + beta x^3 = 0``.

    Damping enters as the generalized force ``f = -delta v``. The default
    stiffness ``alpha=-1, beta=2`` turns the potential into the double well.
    """
    def force_jacobian(q, v):
        shape = np.broadcast_shapes(np.shape(q), np.shape(v)) + (1,)
        return np.zeros(shape), np.full(shape, -float(delta))

    return SystemModel(
        name="duffing",
        dim=1,
        mass_matrix=_const(1.0),
        potential=lambda q: (0.5 * alpha * np.asarray(q)[..., 0] ** 2
                             + 0.25 * beta * np.asarray(q)[..., 0] ** 4),
        potential_grad=lambda q: alpha * np.asarray(q) + beta * np.asarray(q) ** 3,
        potential_hessian=_diag1(lambda q: alpha + 3.0 * beta * np.asarray(q) ** 2),
        force=lambda q, v: -delta * np.asarray(v, dtype=float) + 0.0 * np.asarray(q),
        force_jacobian=force_jacobian,
        conservative=(delta == 0),
        params={"delta": delta, "alpha": alpha, "beta": beta},
    )


@dataclass(frozen=True)
class AeroParams:
    """Two-DOF pitch-plunge airfoil section with cubic pitch stiffness.

    No defaults: every value must be supplied. ``x_alpha`` and ``a`` are
    nondimensional (fractions of the semichord ``b``).
    """

    m_T: float
    m_W: float
    x_alpha: float
    I_alpha: float
    b: float
    a: float
    k_h: float
    k_a0: float
    k_a1: float
    k_a2: float
    c_h: float
    c_alpha: float
    rho: float
    U: float
    C_L_alpha: float
    C_M_alpha: float

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            if not np.isfinite(val):
                raise ValueError(f"aeroelastic parameter {f.name} is not finite")
        for name in ("m_T", "I_alpha", "b", "rho"):
            if not getattr(self, name) > 0:
                raise ValueError(f"aeroelastic parameter {name} must be positive")
        if self.U < 0:
            raise ValueError("freestream speed U must be non-negative")
        try:
            _check_spd(self.mass())
        except ValueError as exc:
            raise ValueError(f"aeroelastic parameters give an invalid mass matrix: {exc}") from None

    @classmethod
    def names(cls):
        return [f.name for f in fields(cls)]

    def mass(self):
        c = self.m_W * self.x_alpha * self.b
        return np.array([[self.m_T, c], [c, self.I_alpha]])

    def alpha_eff(self, q, v):
        """Effective angle of attack ``alpha + h'/U + (1/2 - a) b alpha'/U``."""
        q, v = np.asarray(q, dtype=float), np.asarray(v, dtype=float)
        return q[..., 1] + (v[..., 0] + (0.5 - self.a) * self.b * v[..., 1]) / self.U


def make_aeroelastic(p):
    """Pitch-plunge section, ``q = (h, alpha)``.

    Generalized forces are viscous damping plus quasi-steady lift and moment,
    both written as ``rho U b C (U alpha + h' + (1/2 - a) b alpha')`` so that
    ``U = 0`` is admissible.
    """
    if not isinstance(p, AeroParams):
        p = AeroParams(**p)
    M = p.mass()
    lift = p.rho * p.U * p.b * p.C_L_alpha
    moment = p.rho * p.U * p.b**2 * p.C_M_alpha
    lever = (0.5 - p.a) * p.b

    def potential(q):
        q = np.asarray(q, dtype=float)
        h, al = q[..., 0], q[..., 1]
        return (0.5 * p.k_h * h**2 + 0.5 * p.k_a0 * al**2
                + p.k_a1 * al**3 / 3.0 + 0.25 * p.k_a2 * al**4)

    def potential_grad(q):
        q = np.asarray(q, dtype=float)
        h, al = q[..., 0], q[..., 1]
        return np.stack([p.k_h * h, (p.k_a0 + p.k_a1 * al + p.k_a2 * al**2) * al], axis=-1)

    def potential_hessian(q):
        q = np.asarray(q, dtype=float)
        al = q[..., 1]
        out = np.zeros(q.shape + (2,))
        out[..., 0, 0] = p.k_h
        out[..., 1, 1] = p.k_a0 + 2.0 * p.k_a1 * al + 3.0 * p.k_a2 * al**2
        return out

    def force(q, v):
        q, v = np.asarray(q, dtype=float), np.asarray(v, dtype=float)
        flow = p.U * q[..., 1] + v[..., 0] + lever * v[..., 1]
        return np.stack([-p.c_h * v[..., 0] + lift * flow,
                         -p.c_alpha * v[..., 1] + moment * flow], axis=-1)

    def force_jacobian(q, v):
        shape = np.broadcast_shapes(np.shape(q), np.shape(v))[:-1]
        Fq = np.zeros(shape + (2, 2))
        Fq[..., 0, 1] = lift * p.U
        Fq[..., 1, 1] = moment * p.U
        Fv = np.zeros(shape + (2, 2))
        Fv[..., 0, 0] = -p.c_h + lift
        Fv[..., 0, 1] = lift * lever
        Fv[..., 1, 0] = moment
        Fv[..., 1, 1] = -p.c_alpha + moment * lever
        return Fq, Fv

    return SystemModel(
        name="aeroelastic",
        dim=2,
        mass_matrix=_const(M, dim=2),
        potential=potential,
        potential_grad=potential_grad,
        potential_hessian=potential_hessian,
        force=force,
        force_jacobian=force_jacobian,
        conservative=False,
        params={f.name: getattr(p, f.name) for f in fields(p)},
    )


# name -> (factory, required parameters, defaults)
SYSTEMS = {
    "free_particle": (make_free_particle, (), {"m": 1.0}),
    "sho": (make_sho, (), {"omega": 1.0}),
    "double_well": (make_double_well, (), {"m": 1.0}),
    "duffing": (make_duffing, ("delta",), {"alpha": -1.0, "beta": 2.0}),
    "aeroelastic": (lambda **kw: make_aeroelastic(AeroParams(**kw)), tuple(AeroParams.names()), {}),
}


def build_system(name, params=None):
    """Construct a built-in system from its registry name and a parameter table."""
    if name not in SYSTEMS:
        raise KeyError(f"unknown system {name!r}; valid systems: {', '.join(sorted(SYSTEMS))}")
    factory, required, defaults = SYSTEMS[name]
    params = dict(params or {})
    missing = [k for k in required if k not in params]
    if missing:
        raise KeyError(f"system {name!r} is missing parameters: {', '.join(missing)}")
    allowed = set(required) | set(defaults)
    unknown = sorted(set(params) - allowed)
    if unknown:
        raise KeyError(f"system {name!r} does not take parameters: {', '.join(unknown)}")
    return factory(**{**defaults, **params})
