import itertools

import numpy as np
import pytest
from numpy.testing import assert_allclose

from pennyflip.game import (
    ClassicalMove,
    GameConfig,
    GameOutcome,
    Role,
    Strategy,
    branch_outcomes,
    classical_payoff,
    enumerate_branches,
    expected_payoff,
    game_schedule,
    pauli_strategy,
    payoff_sweep,
    play_deterministic,
    write_sweep_csv,
)
from pennyflip.lindblad import NoiseModel
from pennyflip.qubit import (
    KET1,
    NAMED_TRIPLES,
    SZ,
    Axis,
    PulseTriple,
    gate_from_pulses,
)

N, F = ClassicalMove.N, ClassicalMove.F
ID_TRIPLE = NAMED_TRIPLES["identity"]
IX_TRIPLE = NAMED_TRIPLES["ix"]

# Bob's payoff table: rows = Bob's move, columns = Alice's (round1, round3)
PAYOFF_TABLE = {
    (N, (N, N)): 1, (N, (F, N)): -1, (N, (N, F)): -1, (N, (F, F)): 1,
    (F, (N, N)): -1, (F, (F, N)): 1, (F, (N, F)): 1, (F, (F, F)): -1,
}


def test_classical_payoff_matches_table():
    for (bob, alice), expected in PAYOFF_TABLE.items():
        assert classical_payoff(alice, bob) == expected


def test_classical_payoff_parity_oracle():
    # independent oracle: +1 iff the number of flips is even
    for a1, b, a2 in itertools.product([N, F], repeat=3):
        flips = [a1, b, a2].count(F)
        expected = 1 if flips % 2 == 0 else -1
        assert classical_payoff((a1, a2), b) == expected


def test_classical_payoff_accepts_strings():
    assert classical_payoff(("N", "N"), "N") == 1
    assert classical_payoff(("F", "N"), "N") == -1


# ---------------------------------------------------------------- strategies

def test_pauli_strategy_support():
    strat = pauli_strategy(Role.BOB)
    assert strat.is_mixed
    assert len(strat.support) == 4
    probs = [p for _, p in strat.support]
    assert probs == [0.25] * 4
    assert sum(probs) == pytest.approx(1.0, abs=1e-12)


def test_pauli_strategy_realises_quartet():
    import pennyflip.qubit as q

    expected = [q.ID2, 1j * q.SX, 1j * q.SY, 1j * q.SZ]
    strat = pauli_strategy(Role.ALICE)
    for (triple, _), gate in zip(strat.support, expected):
        assert np.max(np.abs(gate_from_pulses(triple) - gate)) < 1e-12


def test_strategy_round_counts():
    Strategy.deterministic(Role.ALICE, (ID_TRIPLE, ID_TRIPLE))
    Strategy.deterministic(Role.BOB, (ID_TRIPLE,))
    with pytest.raises(ValueError):
        Strategy.deterministic(Role.ALICE, (ID_TRIPLE,))
    with pytest.raises(ValueError):
        Strategy.deterministic(Role.BOB, (ID_TRIPLE, ID_TRIPLE))


def test_strategy_probability_validation():
    with pytest.raises(ValueError):
        Strategy.mixed(Role.BOB, [(ID_TRIPLE, 0.6), (IX_TRIPLE, 0.6)])
    with pytest.raises(ValueError):
        Strategy.mixed(Role.BOB, [(ID_TRIPLE, 1.2), (IX_TRIPLE, -0.2)])


def test_branch_counts():
    alice, bob = pauli_strategy(Role.ALICE), pauli_strategy(Role.BOB)
    assert len(alice.branches()) == 16  # two independent rounds
    assert len(bob.branches()) == 4
    assert len(enumerate_branches(alice, bob)) == 64
    total = sum(p for _, _, p in enumerate_branches(alice, bob))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_enumerate_branches_checks_roles():
    with pytest.raises(ValueError):
        enumerate_branches(pauli_strategy(Role.BOB), pauli_strategy(Role.BOB))


# ---------------------------------------------------------------- single games

def test_schedule_layout():
    sched = game_schedule(PulseTriple(1, 2, 3), PulseTriple(4, 5, 6), PulseTriple(7, 8, 9))
    assert len(sched) == 9
    assert [s.axis for s in sched] == [Axis.Z, Axis.Y, Axis.Z] * 3
    assert [s.coefficient for s in sched] == [1, 2, 3, 4, 5, 6, 7, 8, 9]


def test_identity_game_bob_wins():
    out = play_deterministic(GameConfig(), (ID_TRIPLE, ID_TRIPLE), ID_TRIPLE)
    assert out.payoff == pytest.approx(1.0, abs=1e-12)
    assert out.p_bob_win == pytest.approx(1.0, abs=1e-12)


def test_single_flip_alice_wins():
    out = play_deterministic(GameConfig(), (IX_TRIPLE, ID_TRIPLE), ID_TRIPLE)
    assert out.payoff == pytest.approx(-1.0, abs=1e-8)


def test_two_flips_cancel():
    # i*sx twice composes to -identity; the coin returns to heads
    u = gate_from_pulses(IX_TRIPLE) @ gate_from_pulses(IX_TRIPLE)
    assert np.max(np.abs(u + np.eye(2))) < 1e-12
    out = play_deterministic(GameConfig(), (IX_TRIPLE, ID_TRIPLE), IX_TRIPLE)
    assert out.payoff == pytest.approx(1.0, abs=1e-8)


def test_outcome_invariants_random_games():
    rng = np.random.default_rng(21)
    cfg = GameConfig(noise=NoiseModel.amplitude_damping(0.8))
    for _ in range(5):
        triples = [PulseTriple(*rng.uniform(-np.pi, np.pi, 3)) for _ in range(3)]
        out = play_deterministic(cfg, (triples[0], triples[2]), triples[1])
        assert out.p_alice_win + out.p_bob_win == pytest.approx(1.0, abs=1e-9)
        assert out.payoff == pytest.approx(out.p_bob_win - out.p_alice_win, abs=1e-9)


def test_outcome_trajectory_kept_on_request():
    out = play_deterministic(GameConfig(steps_per_segment=10), (ID_TRIPLE, ID_TRIPLE),
                             ID_TRIPLE, keep_trajectory=True)
    assert out.trajectory is not None
    assert len(out.trajectory.times) == 91
    assert_allclose(out.trajectory.final_state, out.final_state)


# ---------------------------------------------------------------- expectations

def test_pauli_vs_pauli_fair_at_zero_noise():
    value = expected_payoff(GameConfig(), pauli_strategy(Role.ALICE), pauli_strategy(Role.BOB))
    assert abs(value) < 1e-10


def test_identity_vs_identity():
    alice = Strategy.deterministic(Role.ALICE, (ID_TRIPLE, ID_TRIPLE))
    bob = Strategy.deterministic(Role.BOB, (ID_TRIPLE,))
    assert expected_payoff(GameConfig(), alice, bob) == pytest.approx(1.0, abs=1e-12)


def test_strong_damping_favors_bob():
    cfg = GameConfig(noise=NoiseModel.amplitude_damping(50.0))
    value = expected_payoff(cfg, pauli_strategy(Role.ALICE), pauli_strategy(Role.BOB))
    assert value == pytest.approx(1.0, abs=1e-3)


def test_quantum_game_reproduces_classical_table():
    # at gamma = 0, restricting moves to {identity, i*sx} is the classical game
    move = {N: ID_TRIPLE, F: IX_TRIPLE}
    cfg = GameConfig()
    for a1, b, a2 in itertools.product([N, F], repeat=3):
        out = play_deterministic(cfg, (move[a1], move[a2]), move[b])
        assert out.payoff == pytest.approx(classical_payoff((a1, a2), b), abs=1e-9)


def test_expected_payoff_equals_mean_state_payoff():
    # linearity: E[tr(sz rho_b)] = tr(sz E[rho_b])
    cfg = GameConfig(noise=NoiseModel.phase_damping(0.9), steps_per_segment=100)
    outs = branch_outcomes(cfg, pauli_strategy(Role.ALICE), pauli_strategy(Role.BOB))
    mean_state = sum(p * o.final_state for p, o in outs)
    via_mean = np.trace(SZ @ mean_state).real
    direct = sum(p * o.payoff for p, o in outs)
    assert direct == pytest.approx(via_mean, abs=1e-12)
    assert expected_payoff(cfg, pauli_strategy(Role.ALICE),
                           pauli_strategy(Role.BOB)) == pytest.approx(direct, abs=1e-12)


def test_expected_payoff_support_order_invariant():
    cfg = GameConfig(noise=NoiseModel.amplitude_damping(0.6), steps_per_segment=100)
    base = pauli_strategy(Role.BOB)
    shuffled = Strategy.mixed(Role.BOB, tuple(reversed(base.support)))
    alice = pauli_strategy(Role.ALICE)
    assert expected_payoff(cfg, alice, base) == pytest.approx(
        expected_payoff(cfg, alice, shuffled), abs=1e-12)


def test_mixed_vs_deterministic_expectation():
    # 50/50 mixture of identity and flip against identity opponent: mean of +-1
    cfg = GameConfig()
    bob = Strategy.mixed(Role.BOB, [(ID_TRIPLE, 0.5), (IX_TRIPLE, 0.5)])
    alice = Strategy.deterministic(Role.ALICE, (ID_TRIPLE, ID_TRIPLE))
    assert expected_payoff(cfg, alice, bob) == pytest.approx(0.0, abs=1e-9)


# ---------------------------------------------------------------- sweeps

def test_sweep_zero_noise_point():
    cfg = GameConfig(noise=NoiseModel.preset("phase_damping", 0.0))
    rows = payoff_sweep(cfg, pauli_strategy(Role.ALICE), pauli_strategy(Role.BOB), [0.0])
    assert rows[0][0] == 0.0
    assert abs(rows[0][1]) < 1e-10


def test_sweep_raising_limit():
    cfg = GameConfig(noise=NoiseModel.preset("amplitude_raising", 0.0))
    rows = payoff_sweep(cfg, pauli_strategy(Role.ALICE), pauli_strategy(Role.BOB), [50.0])
    assert rows[0][1] <= -0.99


def test_sweep_needs_preset_noise():
    with pytest.raises(ValueError):
        payoff_sweep(GameConfig(), pauli_strategy(Role.ALICE),
                     pauli_strategy(Role.BOB), [0.1])


def test_sweep_rejects_negative_gamma():
    cfg = GameConfig(noise=NoiseModel.preset("phase_damping", 0.0))
    with pytest.raises(ValueError):
        payoff_sweep(cfg, pauli_strategy(Role.ALICE), pauli_strategy(Role.BOB), [-1.0])


@pytest.mark.slow
def test_damping_payoff_monotone_in_gamma():
    cfg = GameConfig(noise=NoiseModel.preset("amplitude_damping", 0.0))
    rows = payoff_sweep(cfg, pauli_strategy(Role.ALICE), pauli_strategy(Role.BOB),
                        np.arange(0.0, 10.0001, 0.1))
    values = np.array([p for _, p in rows])
    assert np.all(np.diff(values) > -1e-3)


def test_sweep_csv(tmp_path):
    path = tmp_path / "sweep.csv"
    write_sweep_csv(path, [(0.0, 0.0), (1.0, 0.5)])
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "gamma,payoff,p_alice,p_bob"
    assert [float(x) for x in lines[2].split(",")] == [1.0, 0.5, 0.25, 0.75]


def test_game_outcome_rejects_unnormalized():
    with pytest.raises(ValueError):
        GameOutcome.from_final_state(1.5 * KET1)
