"""Single-qubit operators, gates and state checks.

Everything here is exact 2x2 complex linear algebra on numpy arrays.
Basis convention: |0> = (1, 0)^T is "heads", |1> = (0, 1)^T is "tails",
so sigma_z = diag(1, -1) assigns +1 to heads. The lowering operator
sigma_minus = |0><1| maps tails to heads.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-9
EIGENVALUE_TOL = 1e-9

ID2 = np.eye(2, dtype=complex)
SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SMINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |0><1|
SPLUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)   # |1><0|

KET0 = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)    # |0><0|
KET1 = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)    # |1><1|

_PAULI_BY_NAME = {
    "X": SX,
    "Y": SY,
    "Z": SZ,
    "Plus": SPLUS,
    "Minus": SMINUS,
    "Id": ID2,
}


class StateError(ValueError):
    """A matrix violates the density-matrix invariants."""


def pauli(which: str) -> np.ndarray:
    """Return a copy of the named operator: X, Y, Z, Plus, Minus or Id."""
    try:
        return _PAULI_BY_NAME[which].copy()
    except KeyError:
        raise ValueError(f"unknown operator {which!r}") from None


class Axis(enum.Enum):
    """Control axis of one Hamiltonian segment."""

    Z = "Z"
    Y = "Y"

    @property
    def matrix(self) -> np.ndarray:
        return SZ if self is Axis.Z else SY


@dataclass(frozen=True)
class ControlSegment:
    """One piecewise-constant Hamiltonian segment H = coefficient * axis."""

    coefficient: float
    axis: Axis
    duration: float = 1.0

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError(f"segment duration must be positive, got {self.duration}")

    def hamiltonian(self) -> np.ndarray:
        return self.coefficient * self.axis.matrix


@dataclass(frozen=True)
class PulseTriple:
    """One player's per-round controls (xi1, xi2, xi3) on the Z, Y, Z axes."""

    xi1: float
    xi2: float
    xi3: float

    def segments(self, dt: float = 1.0) -> tuple[ControlSegment, ControlSegment, ControlSegment]:
        return (
            ControlSegment(self.xi1, Axis.Z, dt),
            ControlSegment(self.xi2, Axis.Y, dt),
            ControlSegment(self.xi3, Axis.Z, dt),
        )

    def as_array(self) -> np.ndarray:
        return np.array([self.xi1, self.xi2, self.xi3])


# Pulse triples realising the four unitaries 1, i*sx, i*sy, i*sz at dt = 1.
TRIPLE_IDENTITY = PulseTriple(0.0, 0.0, 0.0)
TRIPLE_IX = PulseTriple(math.pi / 4, -math.pi / 2, -math.pi / 4)
TRIPLE_IY = PulseTriple(0.0, -math.pi / 2, 0.0)
TRIPLE_IZ = PulseTriple(-math.pi / 4, 0.0, -math.pi / 4)

NAMED_TRIPLES = {
    "identity": TRIPLE_IDENTITY,
    "ix": TRIPLE_IX,
    "iy": TRIPLE_IY,
    "iz": TRIPLE_IZ,
}

# Taylor fallback threshold for the quadratic invariant of expm2.
_EXPM_TAYLOR_CUTOFF = 1e-8


def expm2(m: np.ndarray) -> np.ndarray:
    """Matrix exponential of a 2x2 complex matrix, in closed form.

    Decomposes m = c*I + v.sigma and uses cosh/sinh of s = sqrt(v.v);
    when |s^2| is near zero the cosh and sinh(s)/s factors are replaced
    by their series in s^2.
    """
    m = np.asarray(m, dtype=complex)
    c = 0.5 * (m[0, 0] + m[1, 1])
    vx = 0.5 * (m[0, 1] + m[1, 0])
    vy = 0.5j * (m[0, 1] - m[1, 0])
    vz = 0.5 * (m[0, 0] - m[1, 1])
    s2 = vx * vx + vy * vy + vz * vz
    if abs(s2) < _EXPM_TAYLOR_CUTOFF:
        cosh_s = 1.0 + s2 / 2.0 + s2 * s2 / 24.0
        sinhc_s = 1.0 + s2 / 6.0 + s2 * s2 / 120.0
    else:
        s = np.sqrt(complex(s2))
        cosh_s = np.cosh(s)
        sinhc_s = np.sinh(s) / s
    return np.exp(c) * (cosh_s * ID2 + sinhc_s * (vx * SX + vy * SY + vz * SZ))


def gate_from_pulses(p: PulseTriple, dt: float = 1.0) -> np.ndarray:
    """Unitary realised by a Z-Y-Z pulse triple applied for dt each.

    U = exp(-i xi3 sz dt) exp(-i xi2 sy dt) exp(-i xi1 sz dt)
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    u3 = expm2(-1.0j * p.xi3 * dt * SZ)
    u2 = expm2(-1.0j * p.xi2 * dt * SY)
    u1 = expm2(-1.0j * p.xi1 * dt * SZ)
    return u3 @ u2 @ u1


def expectation(obs: np.ndarray, rho: np.ndarray) -> float:
    """tr(obs . rho) for a Hermitian observable; the imaginary residue is checked and dropped."""
    obs = np.asarray(obs, dtype=complex)
    if np.max(np.abs(obs - obs.conj().T)) > HERMITICITY_TOL:
        raise ValueError("observable must be Hermitian")
    val = np.trace(obs @ rho)
    if abs(val.imag) > 1e-12:
        raise ValueError(f"expectation has imaginary residue {val.imag:g}")
    return float(val.real)


def density_matrix(m: np.ndarray) -> np.ndarray:
    """Validate and return a 2x2 density matrix as a fresh complex array.

    Raises StateError unless m is Hermitian (entrywise 1e-12), unit trace
    (1e-9) and positive semidefinite (eigenvalues >= -1e-9).
    """
    rho = np.array(m, dtype=complex)
    if rho.shape != (2, 2):
        raise StateError(f"expected a 2x2 matrix, got shape {rho.shape}")
    check_state(rho)
    return rho


def check_state(rho: np.ndarray,
                hermiticity_tol: float = HERMITICITY_TOL,
                trace_tol: float = TRACE_TOL,
                eigenvalue_tol: float = EIGENVALUE_TOL) -> None:
    """Raise StateError if rho violates the density-matrix invariants."""
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > hermiticity_tol:
        raise StateError(f"not Hermitian: max |rho - rho^dag| = {herm:g}")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise StateError(f"trace {tr} deviates from 1 by {abs(tr - 1.0):g}")
    eigs = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if eigs.min() < -eigenvalue_tol:
        raise StateError(f"negative eigenvalue {eigs.min():g}")


def bloch_vector(rho: np.ndarray) -> np.ndarray:
    """(<sx>, <sy>, <sz>) of a state."""
    return np.array([
        np.trace(SX @ rho).real,
        np.trace(SY @ rho).real,
        np.trace(SZ @ rho).real,
    ])


def purity(rho: np.ndarray) -> float:
    """tr(rho^2)."""
    return float(np.trace(rho @ rho).real)
