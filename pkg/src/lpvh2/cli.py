"""Command-line entry point: synth | verify | simulate | demo-innerloop.

Exit codes: 0 success, 1 config/schema error, 2 infeasible synthesis,
3 solver failure, 4 verification failed, 5 attitude/command singularity.
Reports are byte-identical across runs for identical configs; the run
timestamp lives only in the manifest's metadata field. All numeric output
is written at 15 significant digits.
"""

from __future__ import annotations

import argparse
import datetime
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import h2, synthesis
from .attitude import AttitudeState, RigidBodyParams
from .errors import (
    Infeasible,
    LpvH2Error,
    NonFiniteState,
    PlantFileError,
    SingularAttitude,
    SolverFailure,
)
from .inner_loop import (
    DEFAULT_GAINS,
    InnerLoopCommand,
    InnerLoopGains,
    project_x_il,
    simulate_inner_loop,
    simulate_reference_model,
    x_il_trajectory,
)
from .lpv import close_loop, instantiate_vertices
from .plantfile import load_plant
from .sdp import SdpTolerances

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_SOLVER = 3
EXIT_VERIFY = 4
EXIT_SINGULAR = 5

# Small-rotorcraft demo inertia [kg m^2]; configuration, not identified data.
DEMO_INERTIA = np.diag([0.010, 0.013, 0.022])

log = logging.getLogger("lpvh2")


class CliError(Exception):
    """Configuration error to be reported with exit code 1."""


@dataclass
class RunConfig:
    command: str
    plant: Path | None = None
    epsilon: float | None = None
    feas_tol: float = 1e-8
    gap_tol: float = 1e-8
    max_iter: int = 200
    dt: float = 1e-3
    horizon: float = 10.0
    out: Path = Path("out")
    gains: InnerLoopGains = field(default_factory=lambda: DEFAULT_GAINS)
    cmd: InnerLoopCommand = field(default_factory=lambda: InnerLoopCommand(0.2, -0.1, 0.3))
    x0: np.ndarray = field(default_factory=lambda: np.zeros(6))
    gain_file: Path | None = None
    gamma: float | None = None

    def tolerances(self) -> SdpTolerances:
        return SdpTolerances(feas_tol=self.feas_tol, gap_tol=self.gap_tol, max_iter=self.max_iter)

    def effective_parameters(self) -> dict:
        return {
            "command": self.command,
            "plant": str(self.plant) if self.plant else None,
            "epsilon": self.epsilon,
            "feas_tol": self.feas_tol,
            "gap_tol": self.gap_tol,
            "max_iter": self.max_iter,
            "dt": self.dt,
            "horizon": self.horizon,
            "out": str(self.out),
            "gains": {
                "k_phi": self.gains.k1[0, 0],
                "k_theta": self.gains.k1[1, 1],
                "k_dphi": self.gains.k2[0, 0],
                "k_dtheta": self.gains.k2[1, 1],
                "k_dpsi": self.gains.k2[2, 2],
            },
            "cmd": {
                "u_phi": self.cmd.u_phi,
                "u_theta": self.cmd.u_theta,
                "u_psi_dot": self.cmd.u_psi_dot,
            },
            "x0": self.x0.tolist(),
            "gain_file": str(self.gain_file) if self.gain_file else None,
            "gamma": self.gamma,
            "inertia": DEMO_INERTIA.tolist(),
        }


def _round_sig(x: float) -> float:
    if x == 0.0 or not math.isfinite(x):
        return x
    return float(f"{x:.15g}")


def _json_ready(obj):
    """Recursively round floats to 15 significant digits for stable reports."""
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_ready(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        return _round_sig(float(obj))
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    return obj


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_json_ready(payload), indent=2) + "\n")


def _write_matrix_csv(path: Path, M: np.ndarray) -> None:
    with open(path, "w") as fh:
        for row in np.atleast_2d(M):
            fh.write(",".join(f"{x:.15g}" for x in row) + "\n")


def _read_matrix_csv(path: Path) -> np.ndarray:
    try:
        rows = []
        for line in Path(path).read_text().strip().splitlines():
            if not line.strip():
                continue
            rows.append([float(tok) for tok in line.split(",")])
    except OSError as exc:
        raise CliError(f"cannot read matrix file {path}: {exc}") from exc
    except ValueError as exc:
        raise CliError(f"malformed matrix file {path}: {exc}") from exc
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise CliError(f"malformed matrix file {path}: ragged or empty rows")
    return np.array(rows)


def _write_manifest(config: RunConfig) -> None:
    manifest = {
        "parameters": config.effective_parameters(),
        "metadata": {
            "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        },
    }
    _write_json(config.out / "manifest.json", manifest)


def cmd_synth(config: RunConfig) -> int:
    plant = load_plant(config.plant)
    config.out.mkdir(parents=True, exist_ok=True)
    _write_manifest(config)
    try:
        result = synthesis.synthesize(plant, epsilon=config.epsilon, tolerances=config.tolerances())
    except Infeasible as exc:
        log.error("synthesis infeasible: %s", exc)
        _write_json(
            config.out / "result.json",
            {"command": "synth", "plant": plant.name, "status": "infeasible", "detail": str(exc)},
        )
        return EXIT_INFEASIBLE
    except SolverFailure as exc:
        log.error("solver failure: %s", exc)
        _write_json(
            config.out / "result.json",
            {"command": "synth", "plant": plant.name, "status": "solver_failure", "detail": str(exc)},
        )
        return EXIT_SOLVER

    report = {
        "command": "synth",
        "plant": plant.name,
        "status": "optimal",
        "epsilon": result.epsilon,
        "gamma": result.gamma,
        "gamma_squared": result.gamma**2,
        "trace_Y": float(np.trace(result.Y)),
        "K": result.K,
        "X": result.X,
        "Y": result.Y,
        "cond_X": result.cond_x,
        "ill_conditioned": result.ill_conditioned,
        "solver": {
            "status": result.solver_status,
            "iterations": result.solution.iterations,
            "objective": result.solution.objective_value,
            "max_psd_violation": result.solution.max_psd_violation,
        },
        "vertices": [
            {
                "vertex": i,
                "max_eig_lyapunov": result.certificate.per_vertex_max_eig[i],
                "h2_norm": result.vertex_h2[i],
                "h2_below_gamma": bool(result.vertex_h2[i] < result.gamma),
            }
            for i in range(len(result.vertex_h2))
        ],
    }
    _write_json(config.out / "result.json", report)
    _write_matrix_csv(config.out / "K.csv", result.K)
    log.info("gamma = %.6g, K written to %s", result.gamma, config.out / "K.csv")
    print(f"synth: optimal, gamma = {result.gamma:.15g}")
    return EXIT_OK


def cmd_verify(config: RunConfig) -> int:
    plant = load_plant(config.plant)
    if config.gain_file is None:
        raise CliError("verify requires --gain pointing at a K.csv file")
    K = _read_matrix_csv(config.gain_file)
    n, m_w, m_u, q = plant.dims
    if K.shape != (m_u, n):
        raise CliError(f"gain must be {m_u}x{n} for this plant, got {K.shape[0]}x{K.shape[1]}")
    config.out.mkdir(parents=True, exist_ok=True)
    _write_manifest(config)

    closed = [close_loop(v, K) for v in instantiate_vertices(plant)]
    X = synthesis.find_common_lyapunov(closed, config.tolerances())
    certificate = None
    if X is not None:
        certificate = h2.verify_quadratic_stability(X, closed, margin=0.0)
    report = h2.verification_report(closed, certificate, config.gamma)
    report = {"command": "verify", "plant": plant.name, "K": K, **report}
    _write_json(config.out / "verification.json", report)
    passed = report["passed"]
    print(f"verify: {'pass' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_VERIFY


def cmd_simulate(config: RunConfig) -> int:
    config.out.mkdir(parents=True, exist_ok=True)
    _write_manifest(config)
    params = RigidBodyParams(DEMO_INERTIA)
    state0 = AttitudeState(config.x0[:3], config.x0[3:])
    traj = simulate_inner_loop(state0, config.cmd, config.gains, params, config.dt, config.horizon)
    traj.save_csv(config.out / "trajectory.csv")
    x_il_trajectory(traj).save_csv(config.out / "x_il.csv")
    print(f"simulate: {len(traj)} samples written to {config.out}")
    return EXIT_OK


def cmd_demo_innerloop(config: RunConfig) -> int:
    config.out.mkdir(parents=True, exist_ok=True)
    _write_manifest(config)
    params = RigidBodyParams(DEMO_INERTIA)
    state0 = AttitudeState(config.x0[:3], config.x0[3:])
    x0_il = project_x_il_state(state0)

    traj = simulate_inner_loop(state0, config.cmd, config.gains, params, config.dt, config.horizon)
    nonlinear_x = project_x_il(traj)
    reference = simulate_reference_model(config.cmd, config.gains, x0_il, config.dt, config.horizon)

    deviation = np.abs(nonlinear_x - reference.x)
    max_dev = float(deviation.max())
    per_channel = deviation.max(axis=0)

    traj.save_csv(config.out / "nonlinear.csv")
    x_il_trajectory(traj).save_csv(config.out / "x_il_nonlinear.csv")
    reference.save_csv(config.out / "x_il_reference.csv")
    _write_json(
        config.out / "comparison.json",
        {
            "command": "demo-innerloop",
            "dt": config.dt,
            "horizon": config.horizon,
            "max_deviation": max_dev,
            "per_channel_max_deviation": {
                "phi": per_channel[0],
                "theta": per_channel[1],
                "dphi": per_channel[2],
                "dtheta": per_channel[3],
                "dpsi": per_channel[4],
            },
        },
    )
    print(f"demo-innerloop: max |nonlinear - LTI| = {max_dev:.6g} over {config.horizon:g} s")
    return EXIT_OK


def project_x_il_state(state: AttitudeState) -> np.ndarray:
    """x_il = (phi, theta, dphi, dtheta, dpsi) of a single attitude state."""
    from .attitude import euler_rate_matrix

    lam_dot = euler_rate_matrix(state.lam) @ state.omega
    return np.array([state.lam[0], state.lam[1], lam_dot[0], lam_dot[1], lam_dot[2]])


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _parse_floats(text: str, count: int, what: str) -> list[float]:
    parts = text.split(",")
    if len(parts) != count:
        raise CliError(f"{what} expects {count} comma-separated values, got {len(parts)}")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise CliError(f"{what}: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lpvh2", description=__doc__, add_help=True)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, plant=False, solver=False, sim=False):
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        if plant:
            p.add_argument("--plant", type=Path, required=True, help="plant definition JSON")
        if solver:
            p.add_argument("--epsilon", type=float, default=None, help="LMI strictness margin")
            p.add_argument("--feas-tol", type=float, default=1e-8)
            p.add_argument("--gap-tol", type=float, default=1e-8)
            p.add_argument("--max-iter", type=int, default=200)
        if sim:
            p.add_argument("--dt", type=float, default=1e-3, help="integration step [s]")
            p.add_argument("--horizon", type=float, default=10.0, help="simulation length [s]")
            p.add_argument(
                "--gains",
                type=str,
                default=None,
                help="k_phi,k_theta,k_dphi,k_dtheta,k_dpsi",
            )
            p.add_argument("--cmd", type=str, default=None, help="u_phi,u_theta,u_dpsi")
            p.add_argument("--x0", type=str, default=None, help="phi,theta,psi,p,q,r initial state")

    add_common(sub.add_parser("synth", help="synthesize a gain from a plant file"), plant=True, solver=True)
    verify = sub.add_parser("verify", help="verify a gain against a plant file")
    add_common(verify, plant=True, solver=True)
    verify.add_argument("--gain", type=Path, required=False, help="gain matrix K.csv")
    verify.add_argument("--gamma", type=float, default=None, help="claimed H2 bound to check")
    add_common(sub.add_parser("simulate", help="simulate the nonlinear inner loop"), sim=True)
    add_common(
        sub.add_parser("demo-innerloop", help="compare nonlinear loop against its LTI model"),
        sim=True,
    )
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    config = RunConfig(command=args.command, out=args.out)
    for name in ("plant", "epsilon", "feas_tol", "gap_tol", "max_iter", "dt", "horizon", "gamma"):
        if hasattr(args, name) and getattr(args, name) is not None:
            setattr(config, name, getattr(args, name))
    if getattr(args, "gain", None) is not None:
        config.gain_file = args.gain
    if getattr(args, "gains", None) is not None:
        vals = _parse_floats(args.gains, 5, "--gains")
        try:
            config.gains = InnerLoopGains.from_values(*vals)
        except (ValueError, LpvH2Error) as exc:
            raise CliError(f"--gains: {exc}") from exc
    if getattr(args, "cmd", None) is not None:
        vals = _parse_floats(args.cmd, 3, "--cmd")
        config.cmd = InnerLoopCommand(*vals)
    if getattr(args, "x0", None) is not None:
        config.x0 = np.array(_parse_floats(args.x0, 6, "--x0"))
    if config.command in ("synth", "verify") and config.plant is not None and not config.plant.exists():
        raise CliError(f"plant file {config.plant} does not exist")
    if config.gain_file is not None and not config.gain_file.exists():
        raise CliError(f"gain file {config.gain_file} does not exist")
    for name in ("dt", "horizon", "feas_tol", "gap_tol"):
        if getattr(config, name) <= 0:
            raise CliError(f"--{name.replace('_', '-')} must be positive")
    if config.epsilon is not None and config.epsilon <= 0:
        raise CliError("--epsilon must be positive")
    if config.max_iter < 1:
        raise CliError("--max-iter must be at least 1")
    return config


def _setup_logging() -> None:
    level_name = os.environ.get("LPVH2_LOG", "warning").lower()
    levels = {
        "debug": logging.DEBUG,
        "info": logging.INFO,
        "warning": logging.WARNING,
        "error": logging.ERROR,
        "quiet": logging.CRITICAL,
    }
    logging.basicConfig(level=levels.get(level_name, logging.WARNING), format="%(message)s")


_COMMANDS = {
    "synth": cmd_synth,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "demo-innerloop": cmd_demo_innerloop,
}


def main(argv=None) -> int:
    _setup_logging()
    try:
        args = build_parser().parse_args(argv)
        config = config_from_args(args)
        return _COMMANDS[config.command](config)
    except (CliError, PlantFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularAttitude, NonFiniteState) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except Infeasible as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolverFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except LpvH2Error as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
