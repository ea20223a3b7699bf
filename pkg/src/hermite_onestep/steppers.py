"""One-step maps built on Hermite trial functions, plus two discrete-mechanics baselines.

Every Hermite step works on the endpoint-data matrix ``C`` of shape
``(2n, d)`` whose rows are ``q(0), q'(0), ..., q^(n-1)(0), q(dt), ...,
q^(n-1)(dt)``. Rows ``q(0), q'(0)`` are given; the remaining ``2n - 2`` rows
are found by Newton iteration on either

* the variational equations: stationarity of the one-step action with
  respect to every endpoint derivative of order >= 1, with the external
  force weighted by the matching shape function, or
* the Galerkin equations: the equation-of-motion residual integrated
  against shifted Legendre polynomials ``P_0 .. P_{2n-3}``.

All integrals use a Gauss-Legendre rule (8 points unless configured).
Residuals are scaled to units of impulse (mass * velocity) so that one
absolute tolerance fits every method and bounds the velocity error of the
solve by roughly ``tol / mass``.
"""
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .basis import MAX_ORDER, hermite_table, legendre_table
from .quadrature import DEFAULT_POINTS, gauss_legendre
from .solver import ConvergenceError, SolverConfig, newton_solve
from .systems import State

__all__ = [
    "StepperKind",
    "HermiteSegment",
    "Trajectory",
    "StepFailure",
    "variational_step",
    "galerkin_step",
    "variational_step_general",
    "galerkin_step_general",
    "midpoint_vi_step",
    "quadratic_vi_step",
    "discrete_forces",
    "simulate",
    "dense_eval",
    "STEPPER_NAMES",
]

STEPPER_NAMES = ("variational", "galerkin", "variational_n", "galerkin_n", "midpoint_vi", "quadratic_vi")


@dataclass(frozen=True)
class StepperKind:
    """Which one-step map to iterate.

    ``tag`` is one of ``one_step_variational``, ``one_step_galerkin``,
    ``variational_general``, ``galerkin_general``, ``midpoint_vi``,
    ``quadratic_vi``; ``order`` is the Hermite order ``n`` (2 = cubic).
    """

    tag: str
    order: int = 2

    _TAGS = ("one_step_variational", "one_step_galerkin", "variational_general",
             "galerkin_general", "midpoint_vi", "quadratic_vi")

    def __post_init__(self):
        if self.tag not in self._TAGS:
            raise ValueError(f"unknown stepper tag {self.tag!r}")
        if self.tag.endswith("general") and not 2 <= self.order <= MAX_ORDER:
            raise ValueError(f"general Hermite steppers need 2 <= order <= {MAX_ORDER}, got {self.order}")
        if not self.tag.endswith("general") and self.order != 2:
            object.__setattr__(self, "order", 2)

    @classmethod
    def from_name(cls, name, order=2):
        """Map a user-facing name (see ``STEPPER_NAMES``) to a kind."""
        table = {
            "variational": ("one_step_variational", 2),
            "galerkin": ("one_step_galerkin", 2),
            "variational_n": ("variational_general", order),
            "galerkin_n": ("galerkin_general", order),
            "midpoint_vi": ("midpoint_vi", 2),
            "quadratic_vi": ("quadratic_vi", 2),
        }
        if name not in table:
            raise ValueError(f"unknown stepper {name!r}; valid options: {', '.join(STEPPER_NAMES)}")
        return cls(*table[name])

    @property
    def method(self):
        """``variational``, ``galerkin``, ``midpoint_vi`` or ``quadratic_vi``."""
        if "variational" in self.tag and not self.tag.endswith("_vi"):
            return "variational"
        if "galerkin" in self.tag:
            return "galerkin"
        return self.tag

    @property
    def is_hermite(self):
        return self.method in ("variational", "galerkin")


@dataclass(frozen=True, eq=False)
class HermiteSegment:
    """The interpolating polynomial of one step.

    ``endpoint_data`` has shape ``(2 * order, d)`` in the row ordering
    described in the module docstring.
    """

    t_start: float
    dt: float
    order: int
    endpoint_data: np.ndarray

    @property
    def left(self):
        return self.endpoint_data[: self.order]

    @property
    def right(self):
        return self.endpoint_data[self.order:]

    @property
    def t_end(self):
        return self.t_start + self.dt

    def evaluate(self, t, deriv=0):
        """``deriv``-th derivative (0, 1 or 2) of the segment at time ``t``."""
        tau = (t - self.t_start) / self.dt
        if not -1e-12 <= tau <= 1 + 1e-12:
            raise ValueError(f"t={t!r} outside segment [{self.t_start!r}, {self.t_end!r}]")
        if deriv < self.order:
            # endpoint values come straight from the stored data; "at the
            # endpoint" means equal up to rounding of t_start + dt
            slack = 4 * np.finfo(float).eps * max(abs(t), abs(self.t_start), self.dt)
            if abs(t - self.t_start) <= slack:
                return self.endpoint_data[deriv].copy()
            if abs(t - self.t_end) <= slack:
                return self.endpoint_data[self.order + deriv].copy()
        tab = hermite_table(self.order, [tau], self.dt, deriv)
        return tab[0] @ self.endpoint_data


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Node states and per-step segments of a fixed-step simulation."""

    times: np.ndarray
    q: np.ndarray
    v: np.ndarray
    segments: list
    kind: StepperKind = None
    dt: float = None
    iterations: np.ndarray = field(default=None, repr=False)
    # interior points of the quadratic variational integrator, one per step
    interior: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return self.times.size

    @property
    def node_states(self):
        return [State(t, q, v) for t, q, v in zip(self.times, self.q, self.v)]

    @property
    def t_start(self):
        return float(self.times[0])

    @property
    def t_end(self):
        return float(self.times[-1])


class StepFailure(RuntimeError):
    """A step's nonlinear solve failed; ``partial`` holds the trajectory so far."""

    def __init__(self, message, step_index, partial=None, report=None):
        super().__init__(message)
        self.step_index = step_index
        self.partial = partial
        self.report = report


# ---------------------------------------------------------------------------
# shared tables


@dataclass(frozen=True, eq=False)
class _Tables:
    phi: np.ndarray
    dphi: np.ndarray
    ddphi: np.ndarray
    w: np.ndarray  # quadrature weights times dt
    tests: np.ndarray = None


@lru_cache(maxsize=256)
def _hermite_tables(n, dt, m):
    rule = gauss_legendre(m)
    tau = rule.nodes
    tests = legendre_table(2 * n - 3, tau)
    return _Tables(
        hermite_table(n, tau, dt, 0),
        hermite_table(n, tau, dt, 1),
        hermite_table(n, tau, dt, 2),
        rule.weights * dt,
        tests,
    )


@lru_cache(maxsize=256)
def _quadratic_tables(dt, m):
    tau = gauss_legendre(m).nodes
    phi = np.stack([2 * tau**2 - 3 * tau + 1, 4 * tau * (1 - tau), 2 * tau**2 - tau], axis=1)
    dphi = np.stack([4 * tau - 3, 4 - 8 * tau, 4 * tau - 1], axis=1) / dt
    ddphi = np.broadcast_to(np.array([4.0, -8.0, 4.0]) / dt**2, phi.shape)
    return _Tables(phi, dphi, ddphi, gauss_legendre(m).weights * dt)


def _mass_at(sys, q):
    return np.asarray(sys.mass_matrix(q), dtype=float)


def _force_jac(sys, q, v):
    if sys.conservative:
        z = np.zeros(q.shape + (q.shape[-1],))
        return z, z
    return sys.force_jacobian(q, v)


# The coefficient arrays ``C`` below hold endpoint data relative to the
# offset ``q0``: the value functions sum to one, so positions are
# ``phi @ C + q0`` while derivatives never see ``q0``. Solving for increments
# instead of absolute positions avoids cancellation in the second
# derivatives, whose rounding error otherwise grows like 1/dt**2.


def _action_residual(sys, tab, C, rows, dt, q0=0.0):
    """``dS/dC_r + int f phi_r`` for each basis function ``r`` in ``rows``."""
    q = tab.phi @ C + q0
    v = tab.dphi @ C
    gq = (sys.dL_dq(q, v) + sys.force(q, v)) * tab.w[:, None]
    gv = sys.dL_dv(q, v) * tab.w[:, None]
    return tab.phi[:, rows].T @ gq + tab.dphi[:, rows].T @ gv


def _action_jacobian(sys, tab, C, rows, cols, dt, q0=0.0):
    """Derivative of :func:`_action_residual` with respect to rows ``cols`` of ``C``."""
    q = tab.phi @ C + q0
    v = tab.dphi @ C
    K = sys.potential_hessian(q)
    Fq, Fv = _force_jac(sys, q, v)
    M = _mass_at(sys, q)
    w = tab.w
    pe, dpe = tab.phi[:, rows] * w[:, None], tab.dphi[:, rows] * w[:, None]
    pu, dpu = tab.phi[:, cols], tab.dphi[:, cols]
    J = (np.einsum("ke,kab,ku->eaub", pe, Fq - K, pu)
         + np.einsum("ke,kab,ku->eaub", pe, Fv, dpu)
         + np.einsum("ke,kab,ku->eaub", dpe, M, dpu))
    d = C.shape[1]
    return J.reshape(len(rows) * d, len(cols) * d)


def _galerkin_residual(sys, tab, C, dt, q0=0.0):
    q = tab.phi @ C + q0
    v = tab.dphi @ C
    a = tab.ddphi @ C
    meq = sys.eom_residual(q, v, a) * tab.w[:, None]
    return tab.tests.T @ meq


def _galerkin_jacobian(sys, tab, C, cols, dt, q0=0.0):
    q = tab.phi @ C + q0
    v = tab.dphi @ C
    K = sys.potential_hessian(q)
    Fq, Fv = _force_jac(sys, q, v)
    M = _mass_at(sys, q)
    pe = tab.tests * tab.w[:, None]
    J = (np.einsum("ke,kab,ku->eaub", pe, M, tab.ddphi[:, cols])
         + np.einsum("ke,kab,ku->eaub", pe, K - Fq, tab.phi[:, cols])
         - np.einsum("ke,kab,ku->eaub", pe, Fv, tab.dphi[:, cols]))
    d = C.shape[1]
    return J.reshape(pe.shape[1] * d, len(cols) * d)


# ---------------------------------------------------------------------------
# Hermite one-step maps


class _HermiteProblem:
    """Nonlinear system of one Hermite step; unknowns are the rows ``unknown`` of C.

    C holds endpoint data relative to ``q0`` (row 0 is zero and row ``n`` is
    the increment ``q1 - q0``). Jacobian columns refer to the absolute data.
    """

    def __init__(self, method, n, sys, q0, v0, dt, m):
        self.method, self.n, self.sys, self.dt = method, n, sys, dt
        self.tab = _hermite_tables(n, float(dt), m)
        self.d = sys.dim
        self.q0 = np.array(q0, dtype=float)
        self.known = [0, 1]
        self.unknown = list(range(2, n)) + list(range(n, 2 * n))
        # equations of the action: variations of every derivative datum of order >= 1
        self.rows = list(range(1, n)) + list(range(n + 1, 2 * n))
        # the row of the j-th derivative datum has units impulse * dt**j
        self.scale = np.repeat([float(dt) ** -(r % n) for r in self.rows], self.d)
        self.C = np.zeros((2 * n, self.d))
        self.C[1] = v0

    def full(self, u):
        C = self.C.copy()
        C[self.unknown] = u.reshape(-1, self.d)
        return C

    def absolute(self, u):
        C = self.full(u)
        C[0] += self.q0
        C[self.n] += self.q0
        return C

    def residual(self, u):
        C = self.full(u)
        if self.method == "variational":
            R = _action_residual(self.sys, self.tab, C, self.rows, self.dt, self.q0)
            return R.ravel() * self.scale
        else:
            R = _galerkin_residual(self.sys, self.tab, C, self.dt, self.q0)
        return R.ravel()

    def jacobian(self, u, cols=None):
        C = self.full(u)
        cols = self.unknown if cols is None else cols
        if self.method == "variational":
            J = _action_jacobian(self.sys, self.tab, C, self.rows, cols, self.dt, self.q0)
            return J * self.scale[:, None]
        return _galerkin_jacobian(self.sys, self.tab, C, cols, self.dt, self.q0)

    def guess(self):
        # constant-velocity predictor; higher derivatives start at zero
        C = self.C.copy()
        C[self.n] = self.dt * C[1]
        C[self.n + 1] = C[1]
        return C[self.unknown].ravel()


def _solve(problem, cfg, context):
    jac = problem.jacobian if problem.sys.has_derivatives else None
    report = newton_solve(problem.residual, problem.guess(), cfg, jac)
    if not report.converged:
        raise ConvergenceError(
            f"{context}: Newton solve failed after {report.iterations} iterations "
            f"(residual {report.final_residual_norm:.3e}): {report.message}",
            report,
        )
    return report


def _hermite_step(method, n, sys, s, dt, cfg, quadrature_points):
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if not 2 <= n <= MAX_ORDER:
        raise ValueError(f"order must be in 2..{MAX_ORDER}, got {n}")
    cfg = cfg or SolverConfig()
    prob = _HermiteProblem(method, n, sys, s.q, s.v, dt, quadrature_points)
    report = _solve(prob, cfg, f"{method} step (n={n}) from t={s.t!r}")
    C = prob.absolute(report.solution)
    C.flags.writeable = False
    seg = HermiteSegment(s.t, dt, n, C)
    nxt = State(s.t + dt, C[n], C[n + 1])
    return nxt, seg, report


def variational_step(sys, s, dt, cfg=None, quadrature_points=DEFAULT_POINTS):
    """One step of the cubic-Hermite variational method; returns ``(State, HermiteSegment)``."""
    nxt, seg, _ = _hermite_step("variational", 2, sys, s, dt, cfg, quadrature_points)
    return nxt, seg


def galerkin_step(sys, s, dt, cfg=None, quadrature_points=DEFAULT_POINTS):
    """One step of the cubic-Hermite Petrov-Galerkin method."""
    nxt, seg, _ = _hermite_step("galerkin", 2, sys, s, dt, cfg, quadrature_points)
    return nxt, seg


def variational_step_general(n, sys, s, dt, cfg=None, quadrature_points=DEFAULT_POINTS):
    """Variational step with degree ``2n - 1`` Hermite trial functions (``2 <= n <= 4``)."""
    nxt, seg, _ = _hermite_step("variational", n, sys, s, dt, cfg, quadrature_points)
    return nxt, seg


def galerkin_step_general(n, sys, s, dt, cfg=None, quadrature_points=DEFAULT_POINTS):
    """Galerkin step with degree ``2n - 1`` trial functions and tests ``P_0 .. P_{2n-3}``."""
    nxt, seg, _ = _hermite_step("galerkin", n, sys, s, dt, cfg, quadrature_points)
    return nxt, seg


def discrete_forces(sys, q0, v0, q1, v1, dt, quadrature_points=DEFAULT_POINTS):
    """Force integrals against the four cubic shape functions.

    Returns ``(f_minus, g_minus, f_plus, g_plus)``, the weights of
    ``dq0, dv0, dq1, dv1`` in the virtual work over the step.
    """
    tab = _hermite_tables(2, float(dt), quadrature_points)
    C = np.array([q0, v0, q1, v1], dtype=float).reshape(4, sys.dim)
    q, v = tab.phi @ C, tab.dphi @ C
    out = tab.phi.T @ (sys.force(q, v) * tab.w[:, None])
    return out[0], out[1], out[2], out[3]


# ---------------------------------------------------------------------------
# discrete-mechanics baselines, on (q, p)


def midpoint_vi_step(sys, q, p, dt, cfg=None):
    """Variational integrator with the midpoint discrete Lagrangian.

    ``L_d = dt * L((q0 + q1)/2, (q1 - q0)/dt)`` and midpoint discrete forces
    ``f_d^- = f_d^+ = dt/2 * f``. The position update is implicit, the
    momentum update explicit. Returns ``(q1, p1)``.
    """
    cfg = cfg or SolverConfig()
    q0 = np.asarray(q, dtype=float)
    p0 = np.asarray(p, dtype=float)

    # unknown is the increment q1 - q0
    def parts(dq):
        qm, vm = q0 + 0.5 * dq, dq / dt
        return qm, vm, sys.dL_dq(qm, vm) + sys.force(qm, vm), sys.dL_dv(qm, vm)

    def residual(dq):
        _, _, gq, gv = parts(dq)
        return gv - 0.5 * dt * gq - p0

    def jacobian(dq):
        qm, vm, _, _ = parts(dq)
        K = sys.potential_hessian(qm)
        Fq, Fv = _force_jac(sys, qm, vm)
        M = _mass_at(sys, qm)
        return M / dt - 0.5 * dt * (0.5 * (Fq - K) + Fv / dt)

    jac = jacobian if sys.has_derivatives else None
    report = newton_solve(residual, dt * sys.velocity(q0, p0), cfg, jac)
    if not report.converged:
        raise ConvergenceError(f"midpoint VI step failed: {report.message}", report)
    dq = report.solution
    _, _, gq, gv = parts(dq)
    return q0 + dq, gv + 0.5 * dt * gq


def quadratic_vi_step(sys, q, p, dt, cfg=None, quadrature_points=DEFAULT_POINTS, return_midpoint=False):
    """Variational integrator with a quadratic trajectory through an interior point.

    The interior point sits at the temporal midpoint and the action is
    integrated with the Gauss rule. Unknowns are the interior and final
    configurations: stationarity in the interior point plus the implicit
    momentum equation at the left end. Returns ``(q1, p1)`` (and the
    interior point if ``return_midpoint``).
    """
    cfg = cfg or SolverConfig()
    q0 = np.asarray(q, dtype=float)
    p0 = np.asarray(p, dtype=float)
    d = q0.size
    tab = _quadratic_tables(float(dt), quadrature_points)

    # unknowns are the increments of the interior and final points over q0
    def full(u):
        return np.vstack([np.zeros(d), u.reshape(2, d)])

    def residual(u):
        R = _action_residual(sys, tab, full(u), [1, 0], dt, q0)
        R[1] += p0
        return R.ravel()

    def jacobian(u):
        return _action_jacobian(sys, tab, full(u), [1, 0], [1, 2], dt, q0)

    v0 = sys.velocity(q0, p0)
    guess = np.concatenate([0.5 * dt * v0, dt * v0])
    jac = jacobian if sys.has_derivatives else None
    report = newton_solve(residual, guess, cfg, jac)
    if not report.converged:
        raise ConvergenceError(f"quadratic VI step failed: {report.message}", report)
    C = full(report.solution)
    p1 = _action_residual(sys, tab, C, [2], dt, q0)[0]
    if return_midpoint:
        return q0 + C[2], p1, q0 + C[1]
    return q0 + C[2], p1


# ---------------------------------------------------------------------------
# time marching


def _cubic_segment(t, dt, q0, v0, q1, v1):
    C = np.array([q0, v0, q1, v1])
    C.flags.writeable = False
    return HermiteSegment(t, dt, 2, C)


def simulate(sys, kind, ic, dt, t_end, cfg=None, quadrature_points=DEFAULT_POINTS):
    """Iterate a one-step map from ``ic`` to ``t_end`` with fixed step ``dt``.

    The number of steps is ``round((t_end - ic.t) / dt)``; node ``k`` sits at
    ``ic.t + k * dt``. Baseline integrators march in ``(q, p)`` with
    ``p = dL/dv``; their segments are cubic Hermite interpolants of the
    node states. On a failed step a :class:`StepFailure` carrying the
    partial trajectory is raised.
    """
    if isinstance(kind, str):
        kind = StepperKind.from_name(kind)
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    span = t_end - ic.t
    if span < 0:
        raise ValueError("t_end precedes the initial time")
    n_steps = int(round(span / dt))
    cfg = cfg or SolverConfig()

    d = ic.dim
    times = ic.t + dt * np.arange(n_steps + 1)
    Q = np.empty((n_steps + 1, d))
    V = np.empty((n_steps + 1, d))
    iters = np.zeros(n_steps, dtype=int)
    interior = np.empty((n_steps, d)) if kind.tag == "quadratic_vi" else None
    Q[0], V[0] = ic.q, ic.v
    segments = []
    state = ic
    p = sys.momentum(ic.q, ic.v) if not kind.is_hermite else None

    def partial(k):
        mid = None if interior is None else interior[:k].copy()
        return Trajectory(times[: k + 1].copy(), Q[: k + 1].copy(), V[: k + 1].copy(),
                          segments[:k], kind, dt, iters[:k].copy(), mid)

    for k in range(n_steps):
        t_k = times[k]
        try:
            if kind.is_hermite:
                state = State(t_k, Q[k], V[k])
                nxt, seg, report = _hermite_step(kind.method, kind.order, sys, state, dt,
                                                 cfg, quadrature_points)
                Q[k + 1], V[k + 1] = nxt.q, nxt.v
                iters[k] = report.iterations
                segments.append(seg)
            else:
                if kind.tag == "midpoint_vi":
                    q1, p = midpoint_vi_step(sys, Q[k], p, dt, cfg)
                else:
                    q1, p, interior[k] = quadratic_vi_step(sys, Q[k], p, dt, cfg, quadrature_points,
                                                           return_midpoint=True)
                Q[k + 1] = q1
                V[k + 1] = sys.velocity(q1, p)
                segments.append(_cubic_segment(t_k, dt, Q[k], V[k], Q[k + 1], V[k + 1]))
        except ConvergenceError as exc:
            raise StepFailure(f"step {k} (t={float(t_k)!r}) failed: {exc}", k, partial(k), exc.report) from exc
        if not (np.all(np.isfinite(Q[k + 1])) and np.all(np.isfinite(V[k + 1]))):
            raise StepFailure(f"step {k} (t={float(t_k)!r}) produced non-finite values", k, partial(k))

    # neighbouring segments store the same node rows, so they agree bitwise at the nodes
    Q.flags.writeable = False
    V.flags.writeable = False
    return Trajectory(times, Q, V, segments, kind, dt, iters, interior)


def dense_eval(traj, t):
    """Configuration and velocity of the piecewise polynomial at time ``t``."""
    t0, t1 = traj.t_start, traj.t_end
    span = t1 - t0
    if not (t0 - 1e-12 * max(1.0, abs(span)) <= t <= t1 + 1e-12 * max(1.0, abs(span))):
        raise ValueError(f"t={t!r} outside trajectory span [{t0!r}, {t1!r}]")
    if not traj.segments:
        return traj.q[0].copy(), traj.v[0].copy()
    k = int(np.clip(np.floor((t - t0) / traj.dt), 0, len(traj.segments) - 1))
    # exact node hit: return the stored state
    for j in (k, k + 1):
        if j < len(traj.times) and traj.times[j] == t:
            return traj.q[j].copy(), traj.v[j].copy()
    seg = traj.segments[k]
    return seg.evaluate(t, 0), seg.evaluate(t, 1)
