"""Damped Newton iteration for the small dense systems produced by each step."""
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

__all__ = ["SolverConfig", "SolveReport", "ConvergenceError", "newton_solve", "fd_jacobian"]


@dataclass(frozen=True)
class SolverConfig:
    residual_tol: float = 1e-12
    max_iters: int = 50
    jacobian_mode: Literal["finite_difference", "user_supplied"] = "user_supplied"
    fd_step: float = 1e-7
    max_halvings: int = 20
    # extra Newton corrections after the tolerance is met; kept only when
    # they strictly decrease the residual
    polish_steps: int = 1

    def __post_init__(self):
        if not self.residual_tol > 0:
            raise ValueError("residual_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.polish_steps < 0:
            raise ValueError("polish_steps must be non-negative")
        if self.jacobian_mode not in ("finite_difference", "user_supplied"):
            raise ValueError(f"unknown jacobian_mode {self.jacobian_mode!r}")

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class SolveReport:
    solution: np.ndarray
    iterations: int
    final_residual_norm: float
    converged: bool
    message: str = ""


class ConvergenceError(RuntimeError):
    """Raised by the steppers when the per-step nonlinear solve fails."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


def fd_jacobian(residual, x, r0=None, rel_step=1e-7):
    """Forward-difference Jacobian with per-component steps ``rel_step * max(1, |x_i|)``."""
    x = np.asarray(x, dtype=float)
    r0 = residual(x) if r0 is None else r0
    J = np.empty((r0.size, x.size))
    for i in range(x.size):
        h = rel_step * max(1.0, abs(x[i]))
        xp = x.copy()
        xp[i] += h
        J[:, i] = (residual(xp) - r0) / (xp[i] - x[i])
    return J


def _norm(r):
    return float(np.max(np.abs(r))) if r.size else 0.0


def newton_solve(residual, guess, cfg=None, jacobian=None):
    """Solve ``residual(x) = 0`` from ``guess``.

    Uses ``jacobian(x)`` when given and ``cfg.jacobian_mode`` is
    ``"user_supplied"``, forward differences otherwise. Each Newton step is
    halved until the max-norm of the residual decreases (at most
    ``cfg.max_halvings`` times). Once the tolerance is met, up to
    ``cfg.polish_steps`` further full steps are tried so that the solution
    sits at rounding level rather than just inside the tolerance; they are
    not counted in ``iterations``. Never raises on failure; inspect
    ``converged`` on the returned report.
    """
    cfg = cfg or SolverConfig()
    x = np.array(guess, dtype=float, copy=True)
    r = np.asarray(residual(x), dtype=float)
    if r.shape != x.shape:
        raise ValueError(f"residual maps {x.shape} to {r.shape}; shapes must agree")
    rn = _norm(r)
    use_user = jacobian is not None and cfg.jacobian_mode == "user_supplied"

    def jac_at(x, r):
        return jacobian(x) if use_user else fd_jacobian(residual, x, r, cfg.fd_step)

    for it in range(1, cfg.max_iters + 1):
        if rn <= cfg.residual_tol:
            for _ in range(cfg.polish_steps):
                try:
                    x_try = x + np.linalg.solve(jac_at(x, r), -r)
                except np.linalg.LinAlgError:
                    break
                r_try = np.asarray(residual(x_try), dtype=float)
                rn_try = _norm(r_try)
                if not rn_try < rn:
                    break
                x, r, rn = x_try, r_try, rn_try
            return SolveReport(x, it - 1, rn, True)
        if not np.isfinite(rn):
            return SolveReport(x, it - 1, rn, False, "residual is not finite")
        J = jac_at(x, r)
        try:
            dx = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return SolveReport(x, it - 1, rn, False, "singular Jacobian")
        if not np.all(np.isfinite(dx)):
            return SolveReport(x, it - 1, rn, False, "singular Jacobian")

        lam = 1.0
        for _ in range(cfg.max_halvings + 1):
            x_try = x + lam * dx
            r_try = np.asarray(residual(x_try), dtype=float)
            rn_try = _norm(r_try)
            if rn_try < rn or rn_try <= cfg.residual_tol:
                break
            lam *= 0.5
        else:
            # no decrease along the Newton direction: either at the rounding
            # floor or genuinely stuck
            return SolveReport(x, it, rn, False, "line search failed to reduce the residual")
        x, r, rn = x_try, r_try, rn_try

    converged = rn <= cfg.residual_tol
    msg = "" if converged else f"no convergence after {cfg.max_iters} iterations"
    return SolveReport(x, cfg.max_iters, rn, converged, msg)
