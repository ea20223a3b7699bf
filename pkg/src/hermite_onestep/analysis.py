"""Linear stability, symplecticity checks, convergence studies and energy diagnostics.

Two phase-space orderings are in use and both are recorded on the reports:
stability work uses ``(v, omega*q)`` for the harmonic oscillator, the
symplecticity test uses canonical ``(p, q)`` with ``p = M v``.
"""
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .quadrature import DEFAULT_POINTS
from .solver import SolverConfig, newton_solve
from .steppers import (
    StepFailure,
    StepperKind,
    _HermiteProblem,
    dense_eval,
    midpoint_vi_step,
    quadratic_vi_step,
    simulate,
)
from .systems import State, make_sho

__all__ = [
    "StabilityReport",
    "StabilitySweep",
    "SymplecticityReport",
    "ConvergenceReport",
    "ReferenceSolution",
    "StudyFailure",
    "amplification_numeric",
    "amplification_closed_form",
    "printed_step_jacobian",
    "stability_sweep",
    "step_jacobian",
    "symplecticity_defect",
    "symplecticity_report",
    "reference_solution",
    "convergence_study",
    "fit_slope",
    "dominant_frequency",
    "check_linear_stability",
    "energy_error_series",
    "CLOSED_FORM_METHODS",
]

CLOSED_FORM_METHODS = ("variational", "galerkin", "midpoint")
INSTABILITY_TOL = 1e-12


# ---------------------------------------------------------------------------
# linear stability


def _eig2(A):
    """Eigenvalues of a real 2x2 matrix from its characteristic polynomial."""
    half_tr = 0.5 * (A[0, 0] + A[1, 1])
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    disc = complex(half_tr * half_tr - det)
    root = np.sqrt(disc)
    # the larger-magnitude root first; the other from the product to avoid cancellation
    lam1 = half_tr + root if half_tr >= 0 else half_tr - root
    lam2 = det / lam1 if lam1 != 0 else half_tr - root
    return complex(lam1), complex(lam2)


@dataclass(frozen=True)
class StabilityReport:
    """Amplification matrix of one step of a linear oscillator."""

    z: float
    matrix: np.ndarray
    eigenvalues: tuple
    spectral_radius: float
    ordering: str = "(v, omega*q)"

    @classmethod
    def from_matrix(cls, z, A):
        A = np.array(A, dtype=float)
        A.flags.writeable = False
        lam = _eig2(A)
        return cls(float(z), A, lam, max(abs(lam[0]), abs(lam[1])))

    @property
    def unstable(self):
        return self.spectral_radius > 1.0 + INSTABILITY_TOL


def _resolve_kind(kind, order=2):
    if isinstance(kind, StepperKind):
        return kind
    if kind == "midpoint":
        kind = "midpoint_vi"
    return StepperKind.from_name(kind, order)


def _step_qv(kind, sys, q, v, dt, cfg, quadrature_points=DEFAULT_POINTS):
    """One step of any stepper from ``(q, v)``; returns ``(q1, v1)``."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if kind.is_hermite:
        prob = _HermiteProblem(kind.method, kind.order, sys, q, v, dt, quadrature_points)
        jac = prob.jacobian if sys.has_derivatives else None
        rep = newton_solve(prob.residual, prob.guess(), cfg, jac)
        if not rep.converged:
            raise RuntimeError(f"{kind.method} step failed: {rep.message}")
        C = prob.absolute(rep.solution)
        return C[kind.order], C[kind.order + 1]
    p = sys.momentum(q, v)
    if kind.tag == "midpoint_vi":
        q1, p1 = midpoint_vi_step(sys, q, p, dt, cfg)
    else:
        q1, p1 = quadratic_vi_step(sys, q, p, dt, cfg, quadrature_points)
    return q1, sys.velocity(q1, p1)


def amplification_numeric(kind, omega=1.0, dt=0.1, cfg=None):
    """Probe the one-step matrix of ``kind`` on the oscillator with frequency ``omega``.

    Columns are the images of the unit vectors ``(v, omega*q) = (1, 0)`` and
    ``(0, 1)``. A third, mixed probe checks superposition.
    """
    kind = _resolve_kind(kind)
    cfg = cfg or SolverConfig(residual_tol=1e-14)
    sys = make_sho(omega)

    def apply(x):
        q1, v1 = _step_qv(kind, sys, [x[1] / omega], [x[0]], dt, cfg)
        return np.array([v1[0], omega * q1[0]])

    A = np.column_stack([apply(np.array([1.0, 0.0])), apply(np.array([0.0, 1.0]))])
    mix = np.array([0.3, -0.7])
    resid = np.max(np.abs(apply(mix) - A @ mix))
    if resid > 1e-10:
        raise ValueError(f"step map is not linear (superposition residual {resid:.3e})")
    return StabilityReport.from_matrix(omega * dt, A)


def amplification_closed_form(method, z, variant="exact"):
    """Rational-function amplification matrices in ``(v, omega*q)`` ordering.

    ``variant="exact"`` gives the matrices of the implemented maps.
    ``variant="printed"`` gives a commonly quoted form with known slips:
    the variational (2, 2) entry repeats the Galerkin numerator, three
    Galerkin entries carry a denominator three times too large, and the
    midpoint off-diagonal signs are swapped.
    """
    if method == "midpoint_vi":
        method = "midpoint"
    if method not in CLOSED_FORM_METHODS:
        raise ValueError(f"unknown method {method!r}; valid options: {', '.join(CLOSED_FORM_METHODS)}")
    if variant not in ("exact", "printed"):
        raise ValueError(f"variant must be 'exact' or 'printed', got {variant!r}")
    z = float(z)
    z2, z4 = z * z, z**4
    if method == "variational":
        D = 2 * z4 + 18 * z2 + 420
        a = (7 * z4 - 192 * z2 + 420) / D
        d = (3 * z4 - 104 * z2 + 240) / D if variant == "printed" else a
        return np.array([[a, 15 * z * (3 * z2 - 28) / D],
                         [z * (z4 - 52 * z2 + 420) / D, d]])
    if method == "galerkin":
        D3 = 3 * z4 + 48 * z2 + 720
        D = D3 if variant == "printed" else D3 / 3
        a = (3 * z4 - 104 * z2 + 240) / D
        return np.array([[a, 24 * z * (z2 - 10) / D],
                         [z * (z4 - 72 * z2 + 720) / D3, a]])
    D = z2 + 4
    s = -1.0 if variant == "printed" else 1.0
    return np.array([[(4 - z2) / D, -s * 4 * z / D],
                     [s * 4 * z / D, (4 - z2) / D]])


@dataclass(frozen=True)
class StabilitySweep:
    """Per-z reports plus the detected instability intervals.

    Interval endpoints are refined by bisection; an interval reaching the end
    of the grid is closed at the last grid point.
    """

    method: str
    reports: tuple
    intervals: tuple

    def __len__(self):
        return len(self.reports)

    def __iter__(self):
        return iter(self.reports)

    def __getitem__(self, i):
        return self.reports[i]

    @property
    def z(self):
        return np.array([r.z for r in self.reports])

    @property
    def spectral_radii(self):
        return np.array([r.spectral_radius for r in self.reports])


def stability_sweep(method, z_grid, source="closed_form", refine_tol=1e-10):
    """Spectral radius of the amplification matrix over ``z_grid``.

    ``source`` is ``"closed_form"`` (fast, exact rational functions) or
    ``"numeric"`` (probe the stepper itself at unit frequency).
    """
    z_grid = np.asarray(z_grid, dtype=float)
    if z_grid.ndim != 1 or z_grid.size == 0:
        raise ValueError("z_grid must be a non-empty vector")
    if np.any(z_grid <= 0) or np.any(np.diff(z_grid) <= 0):
        raise ValueError("z_grid must be positive and strictly ascending")

    if source == "closed_form":
        def report(z):
            return StabilityReport.from_matrix(z, amplification_closed_form(method, z))
    elif source == "numeric":
        def report(z):
            return amplification_numeric(method, 1.0, z)
    else:
        raise ValueError(f"source must be 'closed_form' or 'numeric', got {source!r}")

    reports = tuple(report(z) for z in z_grid)
    flags = np.array([r.unstable for r in reports])

    def edge(lo, hi):
        # lo and hi have different stability; shrink onto the switch point
        f_lo = report(lo).unstable
        while hi - lo > refine_tol:
            mid = 0.5 * (lo + hi)
            if report(mid).unstable == f_lo:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    intervals = []
    start = None
    for i, bad in enumerate(flags):
        if bad and start is None:
            start = z_grid[0] if i == 0 else edge(z_grid[i - 1], z_grid[i])
        if not bad and start is not None:
            intervals.append((start, edge(z_grid[i - 1], z_grid[i])))
            start = None
    if start is not None:
        intervals.append((start, float(z_grid[-1])))
    return StabilitySweep(str(method), reports, tuple((float(a), float(b)) for a, b in intervals))


# ---------------------------------------------------------------------------
# symplecticity


@dataclass(frozen=True)
class SymplecticityReport:
    jacobian: np.ndarray
    defect: float
    ordering: str = "(p, q)"


def _J(d):
    I = np.eye(d)
    Z = np.zeros((d, d))
    return np.block([[Z, I], [-I, Z]])


def symplecticity_defect(jac):
    """Max-norm of ``G^T J G - J`` for the canonical ``J = [[0, I], [-I, 0]]``."""
    G = np.asarray(jac, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] % 2:
        raise ValueError(f"need a square matrix of even dimension, got shape {G.shape}")
    J = _J(G.shape[0] // 2)
    return float(np.max(np.abs(G.T @ J @ G - J)))


def _phase_map(kind, sys, t, y, dt, cfg):
    d = sys.dim
    p, q = y[:d], y[d:]
    q1, v1 = _step_qv(kind, sys, q, sys.velocity(q, p), dt, cfg)
    return np.concatenate([sys.momentum(q1, v1), q1])


def _fd_phase_jacobian(kind, sys, y, dt, cfg, rel_step=1e-5):
    y = np.asarray(y, dtype=float)
    G = np.empty((y.size, y.size))
    for i in range(y.size):
        h = rel_step * max(1.0, abs(y[i]))
        yp, ym = y.copy(), y.copy()
        yp[i] += h
        ym[i] -= h
        G[:, i] = (_phase_map(kind, sys, 0.0, yp, dt, cfg) - _phase_map(kind, sys, 0.0, ym, dt, cfg)) / (2 * h)
    return G


def step_jacobian(kind, sys, state, dt, cfg=None, check=True, quadrature_points=DEFAULT_POINTS):
    """Jacobian of ``(p1, q1)`` with respect to ``(p0, q0)``, ``p = M v``.

    For the Hermite methods the step equations are differentiated
    implicitly: with unknowns ``u`` and given data ``k = (q0, v0)``,
    ``du/dk = -R_u^{-1} R_k``. The baselines are differentiated by central
    differences. With ``check`` the implicit result is compared against
    central differences and a mismatch above 1e-6 relative raises.
    """
    kind = _resolve_kind(kind)
    if not sys.constant_mass:
        raise ValueError("step_jacobian needs a constant mass matrix")
    cfg = cfg or SolverConfig(residual_tol=1e-14)
    if isinstance(state, State):
        q0, v0 = state.q, state.v
    else:
        q0, v0 = (np.atleast_1d(np.asarray(x, dtype=float)) for x in state)
    d = sys.dim
    M = np.asarray(sys.mass_matrix(q0), dtype=float)
    Minv = np.linalg.inv(M)
    y0 = np.concatenate([M @ v0, q0])

    if not kind.is_hermite:
        return _fd_phase_jacobian(kind, sys, y0, dt, cfg)

    n = kind.order
    prob = _HermiteProblem(kind.method, n, sys, q0, v0, dt, quadrature_points)
    rep = newton_solve(prob.residual, prob.guess(), cfg, prob.jacobian if sys.has_derivatives else None)
    if not rep.converged:
        raise RuntimeError(f"{kind.method} step failed: {rep.message}")
    u = rep.solution
    if sys.has_derivatives:
        Ru = prob.jacobian(u)
        Rk = prob.jacobian(u, cols=prob.known)
    else:
        # differentiate the residual numerically in the absolute data
        Ru, Rk = _fd_residual_jacobians(prob, u)
    try:
        du = -np.linalg.solve(Ru, Rk)
    except np.linalg.LinAlgError:
        raise np.linalg.LinAlgError("implicit system for the step Jacobian is singular") from None
    iq, iv = prob.unknown.index(n), prob.unknown.index(n + 1)
    dq1 = du[iq * d:(iq + 1) * d]  # w.r.t. (q0, v0)
    dv1 = du[iv * d:(iv + 1) * d]
    # chain to (p0, q0): v0 = M^-1 p0 with q0 held fixed
    G = np.block([[M @ dv1[:, d:] @ Minv, M @ dv1[:, :d]],
                  [dq1[:, d:] @ Minv, dq1[:, :d]]])
    if check:
        G_fd = _fd_phase_jacobian(kind, sys, y0, dt, cfg)
        err = np.max(np.abs(G - G_fd))
        if err > 1e-6 * max(1.0, np.max(np.abs(G))):
            raise RuntimeError(f"implicit and finite-difference Jacobians disagree by {err:.3e}")
    return G


def _fd_residual_jacobians(prob, u, rel_step=1e-7):
    d = prob.d

    def res_abs(C_abs):
        C = C_abs.copy()
        C[0] -= prob.q0
        C[prob.n] -= prob.q0
        saved = prob.C
        try:
            prob.C = C
            return prob.residual(C[prob.unknown].ravel())
        finally:
            prob.C = saved

    C0 = prob.absolute(u)
    r0 = res_abs(C0)
    cols = []
    for rows in (prob.unknown, prob.known):
        block = []
        for r in rows:
            for a in range(d):
                h = rel_step * max(1.0, abs(C0[r, a]))
                C = C0.copy()
                C[r, a] += h
                block.append((res_abs(C) - r0) / h)
        cols.append(np.array(block).T)
    return cols[0], cols[1]


def symplecticity_report(kind, sys, state, dt, cfg=None):
    G = step_jacobian(kind, sys, state, dt, cfg)
    G.flags.writeable = False
    return SymplecticityReport(G, symplecticity_defect(G))


def printed_step_jacobian(method, dt):
    """Commonly quoted oscillator step Jacobians (unit mass and frequency), verbatim.

    These contain slips and do not coincide with the exact maps; compare
    with :func:`step_jacobian`.
    """
    h = float(dt)
    if method == "variational":
        D = h**4 + 9 * h**2 + 210
        return np.array([
            [(44 * h**5 + 143 * h**4 - 700 * h**3 + 189 * h**2 + 1176 * h - 882) / (7 * h * D),
             (8 * h**5 + 33 * h**4 - 224 * h**3 - 217 * h**2 + 1568 * h + 294) / (7 * D)],
            [-(66 * h**5 + 169 * h**4 - 434 * h**3 + 1092 * h**2 + 588 * h + 1764) / (14 * h * D),
             -(12 * h**5 + 39 * h**4 - 224 * h**3 - 56 * h**2 + 784 * h - 588) / (14 * h * D)],
        ])
    if method == "galerkin":
        D = h**4 + 16 * h**2 + 240
        return np.array([
            [2 * (h**4 - 52 * h**2 + 120) / D, h * (h**4 - 132 * h**2 + 1440) / (6 * D)],
            [-h * (h**4 - 130 * h**2 + 1200) / (5 * D),
             -(h**6 - 240 * h**4 + 6240 * h**2 - 14400) / (60 * D)],
        ])
    raise ValueError(f"unknown method {method!r}; valid options: variational, galerkin")


# ---------------------------------------------------------------------------
# reference solutions and convergence


class StudyFailure(RuntimeError):
    """A simulation inside a study failed; ``dt`` names the offending step size."""

    def __init__(self, message, dt=None):
        super().__init__(message)
        self.dt = dt


@dataclass(frozen=True)
class ReferenceSolution:
    """Fine-step Galerkin solution sampled at ``times``.

    ``accuracy`` is the Richardson estimate of the sampled error,
    ``max|fine - coarse| / 15`` for a fourth-order method.
    """

    times: np.ndarray
    q: np.ndarray
    v: np.ndarray
    dt_ref: float
    accuracy: float

    @property
    def states(self):
        return [State(t, q, v) for t, q, v in zip(self.times, self.q, self.v)]

    def __len__(self):
        return self.times.size

    def __getitem__(self, i):
        return State(self.times[i], self.q[i], self.v[i])


def _sample(traj, times):
    out_q = np.empty((len(times), traj.q.shape[1]))
    out_v = np.empty_like(out_q)
    for i, t in enumerate(times):
        out_q[i], out_v[i] = dense_eval(traj, t)
    return out_q, out_v


def reference_solution(sys, ic, t_end, sample_times=None, dt_min=None, dt_ref=None,
                       accuracy_bound=1e-11):
    """High-accuracy oracle from the cubic Galerkin method at a small step.

    ``dt_ref`` defaults to ``min(1e-3, dt_min / 10)``. The self-check reruns
    at ``2 * dt_ref`` and raises if the estimated error exceeds
    ``accuracy_bound``.
    """
    if dt_ref is None:
        dt_ref = 1e-3 if dt_min is None else min(1e-3, dt_min / 10)
    sample_times = (np.linspace(ic.t, t_end, 201) if sample_times is None
                    else np.asarray(sample_times, dtype=float))
    return _reference_cached(sys, ic.t, tuple(ic.q), tuple(ic.v), float(t_end),
                             tuple(sample_times), float(dt_ref), accuracy_bound)


@lru_cache(maxsize=16)
def _reference_cached(sys, t0, q0, v0, t_end, sample_times, dt_ref, accuracy_bound):
    ic = State(t0, q0, v0)
    cfg = SolverConfig(residual_tol=1e-14)
    kind = StepperKind.from_name("galerkin")
    times = np.array(sample_times)
    fine = simulate(sys, kind, ic, dt_ref, t_end, cfg)
    coarse = simulate(sys, kind, ic, 2 * dt_ref, t_end, cfg)
    qf, vf = _sample(fine, times)
    qc, vc = _sample(coarse, times)
    acc = max(np.max(np.abs(qf - qc)), np.max(np.abs(vf - vc))) / 15.0
    if not acc <= accuracy_bound:
        raise StudyFailure(f"reference self-check failed: estimated error {acc:.3e} "
                           f"exceeds {accuracy_bound:.1e} (dt_ref={dt_ref!r})")
    for x in (times, qf, vf):
        x.flags.writeable = False
    return ReferenceSolution(times, qf, vf, dt_ref, float(acc))


def fit_slope(dts, errors):
    """Least-squares slope of ``log(error)`` against ``log(dt)``; nan if undefined."""
    dts, errors = np.asarray(dts, dtype=float), np.asarray(errors, dtype=float)
    if dts.size < 2 or np.any(errors <= 0):
        return float("nan")
    return float(np.polyfit(np.log(dts), np.log(errors), 1)[0])


@dataclass(frozen=True)
class ConvergenceReport:
    dts: np.ndarray
    traj_errors: np.ndarray
    vel_errors: np.ndarray
    energy_errors: np.ndarray
    fitted_slopes: tuple
    kind: StepperKind = None
    energy_mode: str = "node"
    reference_accuracy: float = field(default=float("nan"))


def _discrete_energy(traj, sys):
    """Energy of a variational integrator on its own discrete curve.

    Evaluated once per step at the interior point (quadratic integrator) or
    the chord midpoint (midpoint integrator), with the chord velocity
    ``(q1 - q0) / dt``. Returns ``(times, energies)``.
    """
    q0, q1 = traj.q[:-1], traj.q[1:]
    chord = (q1 - q0) / traj.dt
    mid = traj.interior if traj.interior is not None else 0.5 * (q0 + q1)
    return traj.times[:-1] + 0.5 * traj.dt, sys.energy(mid, chord)


def _energy_mode(kind, mode):
    if mode == "auto":
        return "discrete" if kind is not None and not kind.is_hermite else "node"
    if mode not in ("node", "discrete"):
        raise ValueError(f"energy mode must be 'auto', 'node' or 'discrete', got {mode!r}")
    return mode


def energy_error_series(traj, sys, mode="vs_initial", reference=None, energy="node"):
    """Energy error along a trajectory as an array of ``(t, error)`` rows.

    ``vs_initial`` compares with the initial energy (conservative systems);
    ``vs_reference`` compares node energies with a reference solution
    sampled at the same times. ``energy="discrete"`` evaluates variational
    integrators on their own discrete curve (see :func:`_discrete_energy`).
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    energy = _energy_mode(traj.kind, energy)
    E0 = float(sys.energy(traj.q[0], traj.v[0]))
    if energy == "discrete" and len(traj) > 1:
        t, E = _discrete_energy(traj, sys)
    else:
        t, E = traj.times, sys.energy(traj.q, traj.v)
    if mode == "vs_initial":
        err = np.abs(E - E0)
    elif mode == "vs_reference":
        if reference is None:
            raise ValueError("mode 'vs_reference' requires a reference solution")
        if energy == "discrete":
            raise ValueError("discrete energies sit between nodes; compare with the initial energy")
        if len(reference.times) != len(t) or np.max(np.abs(np.asarray(reference.times) - t)) > 1e-9 * max(1.0, abs(t[-1])):
            raise ValueError("reference must be sampled at the trajectory nodes")
        err = np.abs(E - sys.energy(reference.q, reference.v))
    else:
        raise ValueError(f"mode must be 'vs_initial' or 'vs_reference', got {mode!r}")
    return np.column_stack([t, err])


def dominant_frequency(sys, q):
    """Largest linearized frequency ``sqrt(max eig(M^-1 K))`` at ``q`` (0 if none)."""
    if sys.potential_hessian is None:
        return 0.0
    q = np.atleast_1d(np.asarray(q, dtype=float))
    K = np.asarray(sys.potential_hessian(q), dtype=float)
    M = np.asarray(sys.mass_matrix(q), dtype=float)
    lam = np.linalg.eigvals(np.linalg.solve(M, K)).real
    return float(np.sqrt(lam.max())) if lam.max() > 0 else 0.0


def check_linear_stability(kind, sys, q, dt):
    """Raise :class:`StudyFailure` if ``dt`` is linearly unstable at ``q``.

    Uses the oscillator amplification matrix at ``z = dt * omega`` for the
    cubic Hermite methods and the midpoint integrator; other kinds pass.
    """
    kind = _resolve_kind(kind)
    if kind.tag == "midpoint_vi":
        method = "midpoint"
    else:
        method = kind.method if kind.is_hermite and kind.order == 2 else None
    omega = dominant_frequency(sys, q)
    if method is None or omega == 0.0:
        return
    rep = StabilityReport.from_matrix(dt * omega, amplification_closed_form(method, dt * omega))
    if rep.unstable:
        raise StudyFailure(f"dt={dt!r} is outside the linear stability range of {method} "
                           f"(z={rep.z:.6g}, spectral radius {rep.spectral_radius:.6g})", dt)


def convergence_study(sys, kind, ic, dts, t_end, cfg=None, reference=None, energy="auto",
                      quadrature_points=DEFAULT_POINTS, check_stability=True):
    """Max-over-nodes errors against a reference for each step size.

    Energy errors are taken against the initial energy for conservative
    systems and against the reference energy otherwise. With
    ``energy="auto"`` the baselines are measured on their discrete curve.
    Every ``dt`` must divide the time span; with ``check_stability`` a step
    size that is linearly unstable at the initial configuration is rejected.
    """
    kind = _resolve_kind(kind)
    dts = np.sort(np.asarray(dts, dtype=float))
    if dts.size == 0 or np.any(dts <= 0) or np.any(np.diff(dts) <= 0):
        raise ValueError("dts must be positive and distinct")
    span = t_end - ic.t
    for dt in map(float, dts):
        n = round(span / dt)
        if n < 1 or abs(n * dt - span) > 1e-9 * max(1.0, abs(span)):
            raise ValueError(f"dt={dt!r} does not divide the time span {span!r}")
        if check_stability:
            check_linear_stability(kind, sys, ic.q, dt)
    energy = _energy_mode(kind, energy)
    if not sys.conservative and energy == "discrete":
        raise ValueError("discrete energies are only compared for conservative systems")
    if reference is None:
        grid = np.unique(np.concatenate([ic.t + d * np.arange(int(round((t_end - ic.t) / d)) + 1)
                                         for d in dts]))
        reference = reference_solution(sys, ic, t_end, grid, dt_min=dts[0])
    ref_t = np.asarray(reference.times)

    errs = np.empty((3, dts.size))
    for i, dt in enumerate(map(float, dts)):
        try:
            traj = simulate(sys, kind, ic, dt, t_end, cfg, quadrature_points)
        except StepFailure as exc:
            raise StudyFailure(f"simulation with dt={dt!r} failed: {exc}", dt) from exc
        idx = np.searchsorted(ref_t, traj.times - 1e-9 * max(1.0, abs(t_end)))
        if np.any(idx >= ref_t.size) or np.max(np.abs(ref_t[idx] - traj.times)) > 1e-9 * max(1.0, abs(t_end)):
            raise ValueError(f"reference is not sampled at the nodes of dt={dt!r}")
        rq, rv = reference.q[idx], reference.v[idx]
        errs[0, i] = np.max(np.abs(traj.q - rq))
        errs[1, i] = np.max(np.abs(traj.v - rv))
        if sys.conservative:
            errs[2, i] = np.max(energy_error_series(traj, sys, "vs_initial", energy=energy)[:, 1])
        else:
            errs[2, i] = np.max(np.abs(sys.energy(traj.q, traj.v) - sys.energy(rq, rv)))
    slopes = tuple(fit_slope(dts, e) for e in errs)
    for x in (dts, *errs):
        x.flags.writeable = False
    return ConvergenceReport(dts, errs[0], errs[1], errs[2], slopes, kind, energy,
                             getattr(reference, "accuracy", float("nan")))
