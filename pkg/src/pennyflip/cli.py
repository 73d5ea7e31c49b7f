"""Command-line front end: single games, gamma sweeps, pulse optimization.

All three subcommands read one JSON config file; --jobs, --out and --seed
override the matching config fields. Outputs are CSV/JSON files designed
to be plotted by external tools. Exit codes: 0 success (a reported
non-convergence is still success), 2 malformed config, 3 numerical
failure.

Config fields by command:

  simulate: channel, gamma, pulses ({"alpha": [9 floats]} or
            {"alice": [t1, t2], "bob": [t]} with each t a 3-float list or
            one of the names identity/ix/iy/iz), steps_per_segment?
  sweep:    channel, gamma_range {start, stop, count}, optimize_alice?,
            optimize_bob?, starts?, seed?, steps_per_segment?
  optimize: channel, gamma, role ("alice"|"bob"), starts?, seed?,
            grad_tol?, max_iterations?, steps_per_segment?

Common optional fields: out_dir, jobs, seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .game import (
    GameConfig,
    GameOutcome,
    Role,
    branch_outcomes,
    expected_payoff,
    pauli_strategy,
    play_deterministic,
)
from .lindblad import IntegrationError, NoiseModel, Trajectory
from .optimize import OptimizationProblem, multistart_optimize, strategy_from_vector
from .qubit import NAMED_TRIPLES, PulseTriple

CHANNELS = ("amplitude_damping", "amplitude_raising", "phase_damping", "none")


class ConfigError(ValueError):
    """Malformed run configuration; carries the offending field name."""

    def __init__(self, field: str, message: str):
        super().__init__(f"field '{field}': {message}")
        self.field = field


def _get(cfg: dict, field: str, kind, default=None, required=False):
    if field not in cfg:
        if required:
            raise ConfigError(field, "missing required field")
        return default
    value = cfg[field]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ConfigError(field, f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def _parse_noise(cfg: dict, need_gamma: bool = True) -> tuple[str, float, NoiseModel]:
    channel = _get(cfg, "channel", str, default="none")
    if channel not in CHANNELS:
        raise ConfigError("channel", f"must be one of {CHANNELS}")
    if channel == "none":
        return channel, 0.0, NoiseModel.none()
    gamma = _get(cfg, "gamma", float, required=need_gamma, default=0.0)
    if gamma < 0:
        raise ConfigError("gamma", "must be >= 0")
    return channel, gamma, NoiseModel.preset(channel, gamma)


def _parse_triple(value, field: str) -> PulseTriple:
    if isinstance(value, str):
        if value not in NAMED_TRIPLES:
            raise ConfigError(field, f"unknown pulse name {value!r}")
        return NAMED_TRIPLES[value]
    if isinstance(value, list) and len(value) == 3 and all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in value):
        return PulseTriple(*map(float, value))
    raise ConfigError(field, "each pulse must be a 3-float list or a named triple")


def _parse_pulses(cfg: dict) -> tuple[tuple[PulseTriple, PulseTriple], PulseTriple]:
    pulses = _get(cfg, "pulses", dict, required=True)
    if "alpha" in pulses:
        alpha = pulses["alpha"]
        if not (isinstance(alpha, list) and len(alpha) == 9):
            raise ConfigError("pulses.alpha", "must be a list of 9 coefficients")
        a = [_parse_triple(list(alpha[i:i + 3]), "pulses.alpha") for i in (0, 3, 6)]
        return (a[0], a[2]), a[1]
    if "alice" not in pulses or "bob" not in pulses:
        raise ConfigError("pulses", "need either 'alpha' or both 'alice' and 'bob'")
    alice = pulses["alice"]
    bob = pulses["bob"]
    if not (isinstance(alice, list) and len(alice) == 2):
        raise ConfigError("pulses.alice", "Alice plays rounds 1 and 3: need 2 entries")
    if not (isinstance(bob, list) and len(bob) == 1):
        raise ConfigError("pulses.bob", "Bob plays round 2: need 1 entry")
    a1 = _parse_triple(alice[0], "pulses.alice[0]")
    a2 = _parse_triple(alice[1], "pulses.alice[1]")
    b = _parse_triple(bob[0], "pulses.bob[0]")
    return (a1, a2), b


def _game_config(cfg: dict, noise: NoiseModel) -> GameConfig:
    steps = _get(cfg, "steps_per_segment", int, default=200)
    if steps < 1:
        raise ConfigError("steps_per_segment", "must be >= 1")
    return GameConfig(noise=noise, steps_per_segment=steps)


def _outcome_json(outcome: GameOutcome, channel: str, gamma: float) -> dict:
    rho = outcome.final_state
    return {
        "channel": channel,
        "gamma": gamma,
        "payoff": outcome.payoff,
        "p_alice_win": outcome.p_alice_win,
        "p_bob_win": outcome.p_bob_win,
        "final_state_re": [[float(rho[i, j].real) for j in (0, 1)] for i in (0, 1)],
        "final_state_im": [[float(rho[i, j].imag) for j in (0, 1)] for i in (0, 1)],
    }


def _write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def cmd_simulate(cfg: dict, out_dir: str) -> None:
    channel, gamma, noise = _parse_noise(cfg)
    alice, bob = _parse_pulses(cfg)
    game = _game_config(cfg, noise)
    outcome = play_deterministic(game, alice, bob, keep_trajectory=True)
    outcome.trajectory.write_csv(os.path.join(out_dir, "trajectory.csv"))
    _write_json(os.path.join(out_dir, "outcome.json"), _outcome_json(outcome, channel, gamma))


def _sweep_point(task) -> tuple:
    channel, gamma, steps, opt_alice, opt_bob, starts, seed = task
    noise = NoiseModel.preset(channel, gamma) if channel != "none" else NoiseModel.none()
    game = GameConfig(noise=noise, steps_per_segment=steps)
    alice, bob = pauli_strategy(Role.ALICE), pauli_strategy(Role.BOB)
    row = [gamma, expected_payoff(game, alice, bob)]
    if opt_alice:
        prob = OptimizationProblem(cfg=game, role=Role.ALICE, opponent=bob)
        row.append(multistart_optimize(prob, starts, seed).payoff)
    if opt_bob:
        prob = OptimizationProblem(cfg=game, role=Role.BOB, opponent=alice)
        row.append(multistart_optimize(prob, starts, seed).payoff)
    return tuple(row)


def cmd_sweep(cfg: dict, out_dir: str, jobs: int) -> None:
    channel, _, _ = _parse_noise(cfg, need_gamma=False)
    grange = _get(cfg, "gamma_range", dict, required=True)
    start = _get(grange, "start", float, required=True)
    stop = _get(grange, "stop", float, required=True)
    count = _get(grange, "count", int, required=True)
    if count < 1:
        raise ConfigError("gamma_range.count", "must be >= 1")
    if start < 0 or stop < 0:
        raise ConfigError("gamma_range", "rates must be >= 0")
    steps = _get(cfg, "steps_per_segment", int, default=200)
    opt_alice = _get(cfg, "optimize_alice", bool, default=False)
    opt_bob = _get(cfg, "optimize_bob", bool, default=False)
    starts = _get(cfg, "starts", int, default=16)
    seed = _get(cfg, "seed", int, default=0)

    gammas = np.linspace(start, stop, count)
    tasks = [(channel, float(g), steps, opt_alice, opt_bob, starts, seed) for g in gammas]
    if jobs > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]

    header = ["gamma", "payoff_pauli"]
    if opt_alice:
        header.append("payoff_opt_alice")
    if opt_bob:
        header.append("payoff_opt_bob")
    with open(os.path.join(out_dir, "sweep.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(x)) for x in row])


def cmd_optimize(cfg: dict, out_dir: str, jobs: int) -> None:
    channel, gamma, noise = _parse_noise(cfg)
    role_name = _get(cfg, "role", str, required=True)
    if role_name not in ("alice", "bob"):
        raise ConfigError("role", "must be 'alice' or 'bob'")
    role = Role.ALICE if role_name == "alice" else Role.BOB
    starts = _get(cfg, "starts", int, default=16)
    seed = _get(cfg, "seed", int, default=0)
    grad_tol = _get(cfg, "grad_tol", float, default=1e-6)
    max_iterations = _get(cfg, "max_iterations", int, default=500)
    game = _game_config(cfg, noise)

    opponent = pauli_strategy(Role.BOB if role is Role.ALICE else Role.ALICE)
    prob = OptimizationProblem(cfg=game, role=role, opponent=opponent,
                               grad_tol=grad_tol, max_iterations=max_iterations)
    result = multistart_optimize(prob, starts, seed, jobs=jobs)
    _write_json(os.path.join(out_dir, "result.json"), result.to_json_dict())

    mine = strategy_from_vector(role, result.epsilon)
    alice, bob = (mine, opponent) if role is Role.ALICE else (opponent, mine)
    branches = branch_outcomes(game, alice, bob, keep_trajectory=True)
    mean_states = None
    times = None
    for i, (p, outcome) in enumerate(branches):
        traj = outcome.trajectory
        traj.write_csv(os.path.join(out_dir, f"trajectory_branch_{i:02d}.csv"))
        if mean_states is None:
            times = traj.times
            mean_states = p * traj.states
        else:
            mean_states = mean_states + p * traj.states
    Trajectory(times, mean_states).write_csv(os.path.join(out_dir, "trajectory_mean.csv"))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pennyflip",
        description="Noisy quantum penny-flip game: simulate, sweep, optimize.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, blurb in (
        ("simulate", "run one game and export its trajectory"),
        ("sweep", "expected payoff over a range of noise rates"),
        ("optimize", "tune one player's pulses against the Pauli strategy"),
    ):
        p = sub.add_parser(name, help=blurb)
        p.add_argument("--config", required=True, help="path to the JSON run config")
        p.add_argument("--jobs", type=int, default=None,
                       help="worker pool size (default: number of processors)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
    args = parser.parse_args(argv)

    try:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc}")
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}")
        if not isinstance(cfg, dict):
            raise ConfigError("config", "top level must be a JSON object")
        if args.seed is not None:
            cfg["seed"] = args.seed
        out_dir = args.out or _get(cfg, "out_dir", str, default=".")
        os.makedirs(out_dir, exist_ok=True)
        jobs = args.jobs or _get(cfg, "jobs", int, default=os.cpu_count() or 1)
        if jobs < 1:
            raise ConfigError("jobs", "must be >= 1")

        if args.command == "simulate":
            cmd_simulate(cfg, out_dir)
        elif args.command == "sweep":
            cmd_sweep(cfg, out_dir, jobs)
        else:
            cmd_optimize(cfg, out_dir, jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
