"""The penny-flip game on a classical coin and on a noisy quantum coin.

Three rounds: Alice moves first and third, Bob second. The quantum game
drives the coin qubit through nine Z-Y-Z control segments (three per
round) under a Lindblad noise model; Bob's payoff is tr(sigma_z rho(T)),
+1 when the coin ends heads (|0>) and -1 when it ends tails. Mixed
strategies are evaluated by exact enumeration of every support
combination, never by sampling.
"""

from __future__ import annotations

import csv
import enum
import itertools
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .lindblad import (
    NoiseModel,
    Trajectory,
    propagate,
    segment_hamiltonians,
)
from .qubit import (
    KET0,
    NAMED_TRIPLES,
    SZ,
    ControlSegment,
    PulseTriple,
    check_state,
)

PROB_TOL = 1e-12


class ClassicalMove(enum.Enum):
    """Flip the coin or leave it."""

    N = "N"
    F = "F"


class Role(enum.Enum):
    ALICE = "alice"
    BOB = "bob"


ROUNDS_PER_ROLE = {Role.ALICE: 2, Role.BOB: 1}


def classical_payoff(alice: tuple, bob) -> int:
    """Bob's payoff for one classical profile; +1 iff the coin ends heads up.

    The coin starts heads; moves apply in the order (Alice 1, Bob, Alice 2).
    """
    heads = True
    for move in (alice[0], bob, alice[1]):
        if ClassicalMove(move) is ClassicalMove.F:
            heads = not heads
    return 1 if heads else -1


@dataclass(frozen=True)
class Strategy:
    """A player's plan: fixed pulse triples, or a per-round distribution.

    A mixed strategy draws one triple from ``support`` independently in
    each of the player's rounds.
    """

    role: Role
    rounds: tuple[PulseTriple, ...] | None = None
    support: tuple[tuple[PulseTriple, float], ...] | None = None

    def __post_init__(self):
        if (self.rounds is None) == (self.support is None):
            raise ValueError("exactly one of rounds/support must be given")
        n = ROUNDS_PER_ROLE[self.role]
        if self.rounds is not None and len(self.rounds) != n:
            raise ValueError(
                f"{self.role.value} strategies need {n} round(s), got {len(self.rounds)}"
            )
        if self.support is not None:
            probs = np.array([p for _, p in self.support])
            if len(probs) == 0:
                raise ValueError("mixed strategy needs a non-empty support")
            if probs.min() < 0:
                raise ValueError("probabilities must be >= 0")
            if abs(probs.sum() - 1.0) > PROB_TOL:
                raise ValueError(f"probabilities sum to {probs.sum()}, not 1")

    @classmethod
    def deterministic(cls, role: Role, rounds) -> "Strategy":
        return cls(role, rounds=tuple(rounds))

    @classmethod
    def mixed(cls, role: Role, support) -> "Strategy":
        return cls(role, support=tuple((t, float(p)) for t, p in support))

    @property
    def is_mixed(self) -> bool:
        return self.support is not None

    def branches(self):
        """All (rounds, probability) realisations of this strategy."""
        if self.rounds is not None:
            return [(self.rounds, 1.0)]
        n = ROUNDS_PER_ROLE[self.role]
        out = []
        for combo in itertools.product(self.support, repeat=n):
            rounds = tuple(t for t, _ in combo)
            prob = 1.0
            for _, p in combo:
                prob *= p
            out.append((rounds, prob))
        return out


def pauli_strategy(role: Role) -> Strategy:
    """Uniform mixture over the four triples realising 1, i*sx, i*sy, i*sz."""
    support = [(NAMED_TRIPLES[name], 0.25) for name in ("identity", "ix", "iy", "iz")]
    return Strategy.mixed(role, support)


@dataclass(frozen=True, eq=False)
class GameConfig:
    """Fixed ingredients of one game: initial state, noise, timing."""

    initial_state: np.ndarray = field(default_factory=lambda: KET0.copy())
    noise: NoiseModel = field(default_factory=NoiseModel.none)
    dt: float = 1.0
    steps_per_segment: int = 200

    def __post_init__(self):
        check_state(self.initial_state)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.steps_per_segment < 1:
            raise ValueError("steps_per_segment must be >= 1")

    def with_noise(self, noise: NoiseModel) -> "GameConfig":
        return GameConfig(self.initial_state, noise, self.dt, self.steps_per_segment)


@dataclass(frozen=True, eq=False)
class GameOutcome:
    """Final state and derived payoffs of one played game."""

    final_state: np.ndarray
    payoff: float
    p_alice_win: float
    p_bob_win: float
    trajectory: Trajectory | None = None

    @classmethod
    def from_final_state(cls, rho, trajectory=None) -> "GameOutcome":
        payoff = float(np.trace(SZ @ rho).real)
        p_bob = float(rho[0, 0].real)
        p_alice = float(rho[1, 1].real)
        if abs(p_alice + p_bob - 1.0) > 1e-9:
            raise ValueError(f"win probabilities sum to {p_alice + p_bob}")
        return cls(rho, payoff, p_alice, p_bob, trajectory)


def game_schedule(alice_round1: PulseTriple, bob: PulseTriple,
                  alice_round2: PulseTriple, dt: float = 1.0) -> tuple[ControlSegment, ...]:
    """The nine-segment Z,Y,Z / Z,Y,Z / Z,Y,Z game Hamiltonian schedule."""
    return (alice_round1.segments(dt) + bob.segments(dt) + alice_round2.segments(dt))


def schedule_coefficients(alice_round1, bob, alice_round2) -> np.ndarray:
    """The nine control coefficients of a game schedule, in segment order."""
    return np.concatenate([
        alice_round1.as_array(), bob.as_array(), alice_round2.as_array(),
    ])


def play_deterministic(cfg: GameConfig, alice, bob: PulseTriple,
                       keep_trajectory: bool = False) -> GameOutcome:
    """Play one game with fixed pulses for both players.

    alice is a pair of PulseTriples (rounds 1 and 3), bob a single one.
    """
    a1, a2 = alice
    schedule = game_schedule(a1, bob, a2, cfg.dt)
    if keep_trajectory:
        traj = propagate(cfg.initial_state, schedule, cfg.noise, cfg.steps_per_segment)
        return GameOutcome.from_final_state(traj.final_state, traj)
    hs, durations = segment_hamiltonians(schedule)
    l_ops, rates = cfg.noise.stacked()
    final = kernels.propagate_rk4(cfg.initial_state, hs, durations, l_ops, rates,
                                  cfg.steps_per_segment, False)[0]
    return GameOutcome.from_final_state(final)


def enumerate_branches(alice: Strategy, bob: Strategy):
    """Every joint realisation: ((alice rounds), bob round, probability)."""
    _check_roles(alice, bob)
    out = []
    for a_rounds, pa in alice.branches():
        for b_rounds, pb in bob.branches():
            out.append((a_rounds, b_rounds[0], pa * pb))
    return out


def branch_outcomes(cfg: GameConfig, alice: Strategy, bob: Strategy,
                    keep_trajectory: bool = False):
    """(probability, GameOutcome) for every joint branch, in enumeration order."""
    return [
        (prob, play_deterministic(cfg, a_rounds, b_triple, keep_trajectory))
        for a_rounds, b_triple, prob in enumerate_branches(alice, bob)
    ]


def expected_payoff(cfg: GameConfig, alice: Strategy, bob: Strategy) -> float:
    """Exact expected payoff over all mixed-strategy branches."""
    return float(sum(prob * out.payoff for prob, out in branch_outcomes(cfg, alice, bob)))


def payoff_sweep(cfg: GameConfig, alice: Strategy, bob: Strategy, gammas):
    """Expected payoff at each rate, re-using cfg's preset noise channel."""
    if cfg.noise.kind is None:
        raise ValueError("payoff_sweep needs a config with a preset noise channel")
    out = []
    for gamma in gammas:
        if gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {gamma}")
        swept = cfg.with_noise(NoiseModel.preset(cfg.noise.kind, gamma))
        out.append((float(gamma), expected_payoff(swept, alice, bob)))
    return out


def write_sweep_csv(path, rows) -> None:
    """Write (gamma, payoff) pairs as gamma, payoff, p_alice, p_bob."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gamma", "payoff", "p_alice", "p_bob"])
        for gamma, payoff in rows:
            p_bob = 0.5 * (1.0 + payoff)
            p_alice = 0.5 * (1.0 - payoff)
            writer.writerow([repr(float(gamma)), repr(float(payoff)),
                             repr(p_alice), repr(p_bob)])


def _check_roles(alice: Strategy, bob: Strategy) -> None:
    if alice.role is not Role.ALICE:
        raise ValueError("first strategy must have the Alice role")
    if bob.role is not Role.BOB:
        raise ValueError("second strategy must have the Bob role")
