"""Quantum penny-flip game under Lindblad noise.

Simulation of the three-round qubit coin game with piecewise-constant
Z/Y control pulses, mixed-strategy evaluation by exact branch
enumeration, and adjoint-gradient pulse optimization against a fixed
opponent.
"""

from .game import (
    ClassicalMove,
    GameConfig,
    GameOutcome,
    Role,
    Strategy,
    classical_payoff,
    expected_payoff,
    pauli_strategy,
    payoff_sweep,
    play_deterministic,
)
from .lindblad import (
    DiagonalHamiltonian,
    IntegrationError,
    NoiseModel,
    Trajectory,
    analytic_amplitude_damping,
    analytic_amplitude_raising,
    analytic_phase_damping,
    asymptotic_state,
    lindblad_rhs,
    propagate,
)
from .optimize import (
    CostSpec,
    OptimizationProblem,
    OptimizationResult,
    cost,
    finite_difference_gradient,
    gradient,
    multistart_optimize,
    optimize,
)
from .qubit import (
    Axis,
    ControlSegment,
    PulseTriple,
    expectation,
    expm2,
    gate_from_pulses,
    pauli,
)

__version__ = "0.1.0"
