"""Command-line experiment runner.

Configs are flat ``key = value`` files with dotted keys, for example::

    system.name = double_well
    stepper = galerkin
    dt = 0.1
    t_end = 20
    ic.q0 = 0.74
    ic.v0 = 0

Vectors are comma-separated. Every CSV starts with ``#`` comment lines that
echo the resolved config; floats are written in shortest round-trip form.
Exit codes: 0 success, 2 configuration error, 3 runtime or step failure.
"""
import argparse
import io
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import (
    CLOSED_FORM_METHODS,
    StudyFailure,
    convergence_study,
    stability_sweep,
    symplecticity_defect,
    step_jacobian,
)
from .quadrature import DEFAULT_POINTS, MAX_POINTS
from .solver import SolverConfig
from .steppers import STEPPER_NAMES, StepFailure, StepperKind, simulate
from .systems import SYSTEMS, State, build_system

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

KEYS = ("system.name", "stepper", "order", "dt", "t_end", "ic.q0", "ic.v0",
        "quadrature_points", "newton_tol", "newton_max_iters", "output_path")
REQUIRED = {
    "simulate": ("system.name", "stepper", "dt", "t_end", "ic.q0", "ic.v0"),
    "converge": ("system.name", "stepper", "t_end", "ic.q0", "ic.v0"),
    "symplecticity": ("system.name", "stepper", "dt", "ic.q0", "ic.v0"),
}


class ConfigError(ValueError):
    pass


def fmt(x):
    """Shortest decimal string that reads back to the same double."""
    return repr(float(x))


@dataclass(frozen=True)
class RunConfig:
    system_name: str
    system_params: dict = field(default_factory=dict)
    stepper: str = "galerkin"
    order: int = 2
    dt: float = None
    t_end: float = None
    q0: tuple = ()
    v0: tuple = ()
    quadrature_points: int = DEFAULT_POINTS
    newton_tol: float = 1e-12
    newton_max_iters: int = 50
    output_path: str = None

    def solver_config(self):
        return SolverConfig(residual_tol=self.newton_tol, max_iters=self.newton_max_iters)

    def kind(self):
        return StepperKind.from_name(self.stepper, self.order)

    def initial_state(self):
        return State(0.0, self.q0, self.v0)

    def echo(self):
        """Resolved config as ``key = value`` lines."""
        lines = [f"system.name = {self.system_name}"]
        for k in sorted(self.system_params):
            lines.append(f"system.params.{k} = {fmt(self.system_params[k])}")
        lines += [f"stepper = {self.stepper}", f"order = {self.order}"]
        if self.dt is not None:
            lines.append(f"dt = {fmt(self.dt)}")
        if self.t_end is not None:
            lines.append(f"t_end = {fmt(self.t_end)}")
        lines += [
            "ic.q0 = " + ",".join(fmt(x) for x in self.q0),
            "ic.v0 = " + ",".join(fmt(x) for x in self.v0),
            f"quadrature_points = {self.quadrature_points}",
            f"newton_tol = {fmt(self.newton_tol)}",
            f"newton_max_iters = {self.newton_max_iters}",
        ]
        if self.output_path:
            lines.append(f"output_path = {self.output_path}")
        return lines


def _float(key, text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None


def _int(key, text):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None


def parse_config(text, command="simulate"):
    """Parse and validate config text for ``command``; raises :class:`ConfigError`."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if key not in KEYS and not key.startswith("system.params."):
            raise ConfigError(f"line {lineno}: unknown key {key!r}; valid keys: "
                              f"{', '.join(KEYS)}, system.params.<name>")
        raw[key] = value

    missing = [k for k in REQUIRED.get(command, ()) if k not in raw]
    if missing:
        raise ConfigError(f"missing config keys: {', '.join(missing)}")

    params = {k[len("system.params."):]: _float(k, v) for k, v in raw.items()
              if k.startswith("system.params.")}
    name = raw.get("system.name")
    if name not in SYSTEMS:
        raise ConfigError(f"unknown system {name!r}; valid systems: {', '.join(sorted(SYSTEMS))}")
    _, required, defaults = SYSTEMS[name]
    missing = [k for k in required if k not in params]
    if missing:
        raise ConfigError(f"system {name!r} is missing parameters: "
                          + ", ".join(f"system.params.{k}" for k in missing))
    unknown = sorted(set(params) - set(required) - set(defaults))
    if unknown:
        raise ConfigError(f"system {name!r} does not take parameters: {', '.join(unknown)}; "
                          f"valid: {', '.join(list(required) + sorted(defaults))}")

    stepper = raw.get("stepper", "galerkin")
    if stepper not in STEPPER_NAMES:
        raise ConfigError(f"unknown stepper {stepper!r}; valid options: {', '.join(STEPPER_NAMES)}")

    def vec(key):
        if key not in raw:
            return ()
        return tuple(_float(key, x) for x in raw[key].split(","))

    cfg = RunConfig(
        system_name=name,
        system_params={**defaults, **params},
        stepper=stepper,
        order=_int("order", raw.get("order", "2")),
        dt=_float("dt", raw["dt"]) if "dt" in raw else None,
        t_end=_float("t_end", raw["t_end"]) if "t_end" in raw else None,
        q0=vec("ic.q0"),
        v0=vec("ic.v0"),
        quadrature_points=_int("quadrature_points", raw.get("quadrature_points", str(DEFAULT_POINTS))),
        newton_tol=_float("newton_tol", raw.get("newton_tol", "1e-12")),
        newton_max_iters=_int("newton_max_iters", raw.get("newton_max_iters", "50")),
        output_path=raw.get("output_path"),
    )
    _validate(cfg)
    return cfg


def _validate(cfg):
    if cfg.dt is not None and not cfg.dt > 0:
        raise ConfigError(f"dt must be positive, got {cfg.dt!r}")
    if cfg.t_end is not None and not cfg.t_end > 0:
        raise ConfigError(f"t_end must be positive, got {cfg.t_end!r}")
    if not 1 <= cfg.quadrature_points <= MAX_POINTS:
        raise ConfigError(f"quadrature_points must be in 1..{MAX_POINTS}")
    if not cfg.newton_tol > 0 or cfg.newton_max_iters < 1:
        raise ConfigError("newton_tol must be positive and newton_max_iters at least 1")
    try:
        cfg.kind()
        sys_ = build_system(cfg.system_name, cfg.system_params)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc).strip("'\"")) from None
    if len(cfg.q0) != sys_.dim or len(cfg.v0) != sys_.dim:
        raise ConfigError(f"ic.q0 and ic.v0 need {sys_.dim} entries for system {cfg.system_name!r}")


def load_config(path, command="simulate"):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    return parse_config(text, command)


# ---------------------------------------------------------------------------
# output helpers


def _open_out(path):
    if path:
        return open(path, "w", encoding="utf-8", newline="\n")
    return _Stdout()


class _Stdout(io.StringIO):
    def close(self):
        sys.stdout.write(self.getvalue())
        sys.stdout.flush()
        super().close()


def _header(out, title, lines):
    out.write(f"# {title}\n")
    for line in lines:
        out.write(f"# {line}\n")


def _rows(out, rows):
    for row in rows:
        out.write(",".join(fmt(x) for x in row) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def _simulation_rows(sys_, traj):
    E = np.atleast_1d(sys_.energy(traj.q, traj.v))
    err = np.abs(E - E[0])
    return np.column_stack([traj.times, traj.q, traj.v, E, err])


def cmd_simulate(cfg, output=None):
    sys_ = build_system(cfg.system_name, cfg.system_params)
    d = sys_.dim
    columns = (["t"] + [f"q_{i}" for i in range(d)] + [f"v_{i}" for i in range(d)]
               + ["energy", "energy_error"])
    status, footer = EXIT_OK, None
    try:
        traj = simulate(sys_, cfg.kind(), cfg.initial_state(), cfg.dt, cfg.t_end,
                        cfg.solver_config(), cfg.quadrature_points)
    except StepFailure as exc:
        traj = exc.partial
        status = EXIT_RUNTIME
        footer = f"PARTIAL OUTPUT: {exc}"
    out = _open_out(output or cfg.output_path)
    try:
        _header(out, "hermite_onestep simulate", cfg.echo())
        out.write(",".join(columns) + "\n")
        _rows(out, _simulation_rows(sys_, traj))
        if footer:
            out.write(f"# {footer}\n")
    finally:
        out.close()
    if footer:
        print(footer, file=sys.stderr)
    return status


def _slope_text(slopes):
    if any(np.isnan(s) for s in slopes):
        return "slopes: n/a"
    return "slopes: traj={} vel={} energy={}".format(*(f"{s:.4f}" for s in slopes))


def cmd_converge(cfg, dts, output=None):
    sys_ = build_system(cfg.system_name, cfg.system_params)
    try:
        rep = convergence_study(sys_, cfg.kind(), cfg.initial_state(), dts, cfg.t_end,
                                cfg.solver_config(), quadrature_points=cfg.quadrature_points)
    except StudyFailure as exc:
        print(f"convergence study failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    slopes = _slope_text(rep.fitted_slopes)
    out = _open_out(output or cfg.output_path)
    try:
        _header(out, "hermite_onestep converge", cfg.echo() + [
            "dt_list = " + ",".join(fmt(x) for x in rep.dts),
            f"energy_mode = {rep.energy_mode}",
            f"reference_accuracy = {fmt(rep.reference_accuracy)}",
        ])
        out.write("dt,traj_err,vel_err,energy_err\n")
        _rows(out, np.column_stack([rep.dts, rep.traj_errors, rep.vel_errors, rep.energy_errors]))
        out.write(f"# {slopes}\n")
    finally:
        out.close()
    if output or cfg.output_path:
        print(slopes)
    return EXIT_OK


def _interval_text(intervals):
    if not intervals:
        return "instability intervals: none"
    return "instability intervals: " + "; ".join(f"({fmt(a)}, {fmt(b)})" for a, b in intervals)


def cmd_stability(method, z_min, z_max, n, output=None):
    sweep = stability_sweep(method, np.linspace(z_min, z_max, n))
    text = _interval_text(sweep.intervals)
    out = _open_out(output)
    try:
        _header(out, "hermite_onestep stability", [
            f"method = {method}", f"z_range = {fmt(z_min)}:{fmt(z_max)}:{n}", "ordering = (v, omega*q)"])
        out.write("z,abs_lambda_1,abs_lambda_2,spectral_radius\n")
        _rows(out, ((r.z, abs(r.eigenvalues[0]), abs(r.eigenvalues[1]), r.spectral_radius)
                    for r in sweep))
        out.write(f"# {text}\n")
    finally:
        out.close()
    if output:
        print(text)
    return EXIT_OK


def cmd_symplecticity(cfg, output=None):
    sys_ = build_system(cfg.system_name, cfg.system_params)
    try:
        G = step_jacobian(cfg.kind(), sys_, cfg.initial_state(), cfg.dt,
                          SolverConfig(residual_tol=min(cfg.newton_tol, 1e-14),
                                       max_iters=cfg.newton_max_iters))
    except (RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"symplecticity check failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    defect = symplecticity_defect(G)
    n = G.shape[0]
    out = _open_out(output or cfg.output_path)
    try:
        _header(out, "hermite_onestep symplecticity", cfg.echo() + ["ordering = (p, q)"])
        out.write(",".join(["stepper", "dt", "defect"]
                           + [f"G_{i}{j}" for i in range(n) for j in range(n)]) + "\n")
        out.write(",".join([cfg.stepper, fmt(cfg.dt), fmt(defect)] + [fmt(x) for x in G.ravel()]) + "\n")
    finally:
        out.close()
    if output or cfg.output_path:
        print(f"symplecticity defect = {fmt(defect)}")
    return EXIT_OK


def cmd_list_systems():
    for name, (_, required, defaults) in sorted(SYSTEMS.items()):
        parts = [f"{k} (required)" for k in required] + [f"{k}={fmt(v)}" for k, v in sorted(defaults.items())]
        print(f"{name}: {', '.join(parts) if parts else 'no parameters'}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def _parse_dt_list(text):
    try:
        dts = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"--dt-list: expected comma-separated numbers, got {text!r}") from None
    if not dts or any(not d > 0 for d in dts):
        raise ConfigError("--dt-list needs at least one positive step size")
    if len(set(dts)) != len(dts):
        raise ConfigError("--dt-list contains duplicates")
    return dts


def _parse_z_range(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--z-range must look like min:max:n, got {text!r}")
    try:
        z_min, z_max, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"--z-range must look like min:max:n, got {text!r}") from None
    if not (0 < z_min < z_max) or n < 2:
        raise ConfigError("--z-range needs 0 < min < max and n >= 2")
    return z_min, z_max, n


def build_parser():
    parser = argparse.ArgumentParser(prog="hermite-onestep", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="flat key = value config file")
        p.add_argument("--output", help="CSV destination (default: config output_path, else stdout)")

    p = sub.add_parser("simulate", help="integrate one trajectory and write node states")
    common(p)
    p = sub.add_parser("converge", help="error-versus-dt study against a fine-step reference")
    common(p)
    p.add_argument("--dt-list", required=True, help="comma-separated step sizes")
    p.add_argument("--method", choices=STEPPER_NAMES, help="override the config stepper")
    p = sub.add_parser("stability", help="spectral radius of the oscillator amplification matrix")
    p.add_argument("--method", required=True, choices=CLOSED_FORM_METHODS)
    p.add_argument("--z-range", default="0.05:10:1000", help="min:max:n (default 0.05:10:1000)")
    p.add_argument("--output")
    p = sub.add_parser("symplecticity", help="defect of the canonical symplectic condition for one step")
    common(p)
    p.add_argument("--method", choices=STEPPER_NAMES, help="override the config stepper")
    sub.add_parser("list-systems", help="show built-in systems and their parameters")
    return parser


def _override(cfg, method):
    if not method:
        return cfg
    new = replace(cfg, stepper=method)
    _validate(new)
    return new


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list-systems":
            return cmd_list_systems()
        if args.command == "stability":
            z_min, z_max, n = _parse_z_range(args.z_range)
            return cmd_stability(args.method, z_min, z_max, n, args.output)
        cfg = load_config(args.config, args.command)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.output)
        if args.command == "converge":
            dts = _parse_dt_list(args.dt_list)
            return cmd_converge(_override(cfg, args.method), dts, args.output)
        return cmd_symplecticity(_override(cfg, args.method), args.output)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
