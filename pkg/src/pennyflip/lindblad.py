"""Markovian open-system dynamics for the quantum coin.

The master equation is

    drho/dt = -i[H(t), rho] + sum_j gamma_j (Lj rho Lj^dag - 1/2 {Lj^dag Lj, rho})

with H(t) piecewise constant over control segments. The general case is
integrated with classic fixed-step RK4 (see ``kernels``); for diagonal
Hamiltonians the three standard channels also have closed-form solutions,
which the tests validate against the integrator.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import kernels
from .qubit import (
    KET0,
    KET1,
    SMINUS,
    SPLUS,
    SZ,
    bloch_vector,
    check_state,
    expm2,
    purity,
)

AMPLITUDE_DAMPING = "amplitude_damping"
AMPLITUDE_RAISING = "amplitude_raising"
PHASE_DAMPING = "phase_damping"

_PRESET_OPERATORS = {
    AMPLITUDE_DAMPING: SMINUS,
    AMPLITUDE_RAISING: SPLUS,
    PHASE_DAMPING: SZ,
}

TRAJECTORY_COLUMNS = [
    "t",
    "rho_00_re", "rho_00_im", "rho_01_re", "rho_01_im",
    "rho_10_re", "rho_10_im", "rho_11_re", "rho_11_im",
    "sx", "sy", "sz", "trace", "purity",
]

DEFAULT_STEPS_PER_SEGMENT = 200
TRACE_DRIFT_LIMIT = 1e-6


class IntegrationError(RuntimeError):
    """Numerical propagation broke a state invariant."""


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """A set of Lindblad channels (operator, rate)."""

    channels: tuple[tuple[np.ndarray, float], ...]
    kind: str | None = None  # preset name when built from one

    def __post_init__(self):
        for op, rate in self.channels:
            if rate < 0:
                raise ValueError(f"channel rate must be >= 0, got {rate}")
            if np.asarray(op).shape != (2, 2):
                raise ValueError("channel operators must be 2x2")

    @classmethod
    def amplitude_damping(cls, gamma: float) -> "NoiseModel":
        return cls(((SMINUS, gamma),), AMPLITUDE_DAMPING)

    @classmethod
    def amplitude_raising(cls, gamma: float) -> "NoiseModel":
        return cls(((SPLUS, gamma),), AMPLITUDE_RAISING)

    @classmethod
    def phase_damping(cls, gamma: float) -> "NoiseModel":
        return cls(((SZ, gamma),), PHASE_DAMPING)

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls(())

    @classmethod
    def preset(cls, kind: str, gamma: float) -> "NoiseModel":
        if kind not in _PRESET_OPERATORS:
            raise ValueError(f"unknown noise preset {kind!r}")
        return cls(((_PRESET_OPERATORS[kind], gamma),), kind)

    def stacked(self) -> tuple[np.ndarray, np.ndarray]:
        """Channel operators and rates as arrays for the kernels."""
        if not self.channels:
            return np.zeros((0, 2, 2), dtype=complex), np.zeros(0)
        ops = np.stack([np.asarray(op, dtype=complex) for op, _ in self.channels])
        rates = np.array([rate for _, rate in self.channels], dtype=float)
        return ops, rates


@dataclass(frozen=True)
class DiagonalHamiltonian:
    """H = beta1 |0><0| + beta2 |1><1|."""

    beta1: float
    beta2: float

    def matrix(self) -> np.ndarray:
        return np.diag([self.beta1 + 0j, self.beta2 + 0j])


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-ordered density-matrix samples of one propagation."""

    times: np.ndarray
    states: np.ndarray  # (n, 2, 2) complex

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states length mismatch")
        if len(self.times) == 0:
            raise ValueError("empty trajectory")
        if abs(self.times[0]) > 1e-12:
            raise ValueError("trajectory must start at t = 0")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    def traces(self) -> np.ndarray:
        return (self.states[:, 0, 0] + self.states[:, 1, 1]).real

    def min_eigenvalues(self) -> np.ndarray:
        """Smaller eigenvalue of every sample, from the 2x2 closed form."""
        tr = self.states[:, 0, 0].real + self.states[:, 1, 1].real
        diff = self.states[:, 0, 0].real - self.states[:, 1, 1].real
        disc = np.sqrt(diff ** 2 + 4.0 * np.abs(self.states[:, 0, 1]) ** 2)
        return 0.5 * (tr - disc)

    def hermiticity_defects(self) -> np.ndarray:
        return np.max(np.abs(self.states - self.states.conj().transpose(0, 2, 1)), axis=(1, 2))

    def validate(self, hermiticity_tol=1e-10, trace_tol=1e-9, eigenvalue_tol=1e-9) -> None:
        """Raise IntegrationError if any sample violates the state invariants."""
        herm = self.hermiticity_defects().max()
        if herm > hermiticity_tol:
            raise IntegrationError(f"hermiticity defect {herm:g}")
        drift = np.abs(self.traces() - 1.0).max()
        if drift > trace_tol:
            raise IntegrationError(f"trace drift {drift:g}")
        low = self.min_eigenvalues().min()
        if low < -eigenvalue_tol:
            raise IntegrationError(f"negative eigenvalue {low:g}")

    def rows(self):
        for t, rho in zip(self.times, self.states):
            bx, by, bz = bloch_vector(0.5 * (rho + rho.conj().T))
            yield [
                t,
                rho[0, 0].real, rho[0, 0].imag, rho[0, 1].real, rho[0, 1].imag,
                rho[1, 0].real, rho[1, 0].imag, rho[1, 1].real, rho[1, 1].imag,
                bx, by, bz,
                np.trace(rho).real, purity(rho),
            ]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRAJECTORY_COLUMNS)
            for row in self.rows():
                writer.writerow([repr(float(x)) for x in row])


def lindblad_rhs(rho: np.ndarray, h: np.ndarray, noise: NoiseModel) -> np.ndarray:
    """Right-hand side of the master equation at state rho."""
    out = -1.0j * (h @ rho - rho @ h)
    for op, gamma in noise.channels:
        op = np.asarray(op, dtype=complex)
        opd = op.conj().T
        g = opd @ op
        out += gamma * (op @ rho @ opd - 0.5 * (g @ rho + rho @ g))
    return out


def segment_hamiltonians(schedule) -> tuple[np.ndarray, np.ndarray]:
    """Stack a schedule of ControlSegments into (hs, durations) arrays."""
    segs = tuple(schedule)
    if not segs:
        raise ValueError("empty schedule")
    hs = np.stack([seg.hamiltonian() for seg in segs])
    durations = np.array([seg.duration for seg in segs], dtype=float)
    return hs, durations


def propagate(rho0: np.ndarray, schedule, noise: NoiseModel,
              steps_per_segment: int = DEFAULT_STEPS_PER_SEGMENT) -> Trajectory:
    """RK4-propagate rho0 through a schedule of control segments.

    Records every substep; raises IntegrationError (naming the segment)
    if the trace drifts by more than 1e-6 anywhere along the way.
    """
    if steps_per_segment < 1:
        raise ValueError("steps_per_segment must be >= 1")
    check_state(rho0)
    hs, durations = segment_hamiltonians(schedule)
    return _propagate_packed(rho0, hs, durations, noise, steps_per_segment)


def propagate_hamiltonians(rho0: np.ndarray, hs, durations, noise: NoiseModel,
                           steps_per_segment: int = DEFAULT_STEPS_PER_SEGMENT) -> Trajectory:
    """Like propagate, but for explicit per-segment Hamiltonian matrices."""
    hs = np.asarray(hs, dtype=complex)
    durations = np.asarray(durations, dtype=float)
    if np.any(durations <= 0):
        raise ValueError("segment durations must be positive")
    return _propagate_packed(np.asarray(rho0, dtype=complex), hs, durations,
                             noise, steps_per_segment)


def _propagate_packed(rho0, hs, durations, noise, steps):
    l_ops, rates = noise.stacked()
    states = kernels.propagate_rk4(rho0, hs, durations, l_ops, rates, steps, True)
    times = _grid_times(durations, steps)
    traj = Trajectory(times, states)
    drift = np.abs(traj.traces() - 1.0)
    bad = (drift > TRACE_DRIFT_LIMIT) | ~np.isfinite(drift)
    if bad.any():
        first = int(np.argmax(bad))
        segment = min((first - 1) // steps, len(durations) - 1) if first > 0 else 0
        raise IntegrationError(
            f"trace drift {drift[first]:g} exceeds {TRACE_DRIFT_LIMIT:g} "
            f"in segment {segment}"
        )
    return traj


def _grid_times(durations, steps):
    n_seg = len(durations)
    times = np.empty(n_seg * steps + 1)
    times[0] = 0.0
    start = 0.0
    for k, d in enumerate(durations):
        times[1 + k * steps: 1 + (k + 1) * steps] = start + d * np.arange(1, steps + 1) / steps
        start += d
    return times


def analytic_amplitude_damping(rho0: np.ndarray, h: DiagonalHamiltonian,
                               gamma: float, t: float) -> np.ndarray:
    """Closed-form state under lowering-operator noise and a diagonal Hamiltonian.

    rho(t) = e^{At} [rho0 + (1 - e^{-gamma t}) s- rho0 s+] e^{A^dag t}
    with A = -iH - (gamma/2) |1><1|. At t = 0 this reproduces rho0 and the
    trace stays exactly 1 for every input state.
    """
    _check_channel_args(gamma, t)
    a = -1.0j * h.matrix() - 0.5 * gamma * KET1
    core = rho0 + (1.0 - np.exp(-gamma * t)) * (SMINUS @ rho0 @ SPLUS)
    e = expm2(a * t)
    return e @ core @ e.conj().T


def analytic_amplitude_raising(rho0: np.ndarray, h: DiagonalHamiltonian,
                               gamma: float, t: float) -> np.ndarray:
    """Mirror of analytic_amplitude_damping with s- and s+ exchanged; fixed point |1><1|."""
    _check_channel_args(gamma, t)
    a = -1.0j * h.matrix() - 0.5 * gamma * KET0
    core = rho0 + (1.0 - np.exp(-gamma * t)) * (SPLUS @ rho0 @ SMINUS)
    e = expm2(a * t)
    return e @ core @ e.conj().T


def analytic_phase_damping(rho0: np.ndarray, h: DiagonalHamiltonian,
                           gamma: float, t: float) -> np.ndarray:
    """Closed-form dephasing: populations frozen, coherences damped by e^{-2 gamma t}."""
    _check_channel_args(gamma, t)
    diag_part = KET0 @ rho0 @ KET0 + KET1 @ rho0 @ KET1
    off_part = KET0 @ rho0 @ KET1 + KET1 @ rho0 @ KET0
    u = expm2(-1.0j * h.matrix() * t)
    return diag_part + np.exp(-2.0 * gamma * t) * (u @ off_part @ u.conj().T)


ANALYTIC_SOLUTIONS = {
    AMPLITUDE_DAMPING: analytic_amplitude_damping,
    AMPLITUDE_RAISING: analytic_amplitude_raising,
    PHASE_DAMPING: analytic_phase_damping,
}


def asymptotic_state(noise: "NoiseModel | str", rho0: np.ndarray) -> np.ndarray:
    """gamma -> infinity limit of each preset channel.

    Damping collapses to |0><0|, raising to |1><1|, dephasing keeps the
    full diagonal of rho0 (trace preserved).
    """
    kind = noise if isinstance(noise, str) else noise.kind
    if kind == AMPLITUDE_DAMPING:
        return KET0.copy()
    if kind == AMPLITUDE_RAISING:
        return KET1.copy()
    if kind == PHASE_DAMPING:
        return np.diag(np.diag(rho0)).astype(complex)
    raise ValueError(f"no asymptotic limit for noise model {kind!r}")


def _check_channel_args(gamma, t):
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
