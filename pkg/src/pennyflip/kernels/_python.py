"""Pure-numpy fixed-step RK4 kernels for piecewise-constant Lindblad dynamics.

Fallback backend; the compiled extension in ``_core`` implements the same
two entry points with identical semantics. Both integrate 2x2 density
matrices (forward) and adjoint states (backward) on a uniform grid of
``steps`` substeps per Hamiltonian segment.
"""

from __future__ import annotations

import numpy as np


def _forward_rhs(rho, h, channels):
    out = -1.0j * (h @ rho - rho @ h)
    for gamma, l, ldag, g in channels:
        out += gamma * (l @ rho @ ldag - 0.5 * (g @ rho + rho @ g))
    return out


def _adjoint_rhs(lam, h, channels):
    # d(lam)/dt = -i[H, lam] - sum_j gamma_j (Lj^dag lam Lj - 1/2 {Lj^dag Lj, lam})
    out = -1.0j * (h @ lam - lam @ h)
    for gamma, l, ldag, g in channels:
        out -= gamma * (ldag @ lam @ l - 0.5 * (g @ lam + lam @ g))
    return out


def _channel_table(l_ops, rates):
    table = []
    for l, gamma in zip(l_ops, rates):
        ldag = l.conj().T
        table.append((gamma, l, ldag, ldag @ l))
    return table


def propagate_rk4(rho0, hs, durations, l_ops, rates, steps, record=True):
    """Integrate the master equation through piecewise-constant Hamiltonians.

    Returns an array of shape (n_seg*steps + 1, 2, 2) when recording,
    otherwise (1, 2, 2) holding the final state.
    """
    channels = _channel_table(l_ops, rates)
    n_seg = len(hs)
    rho = np.array(rho0, dtype=complex)
    if record:
        out = np.empty((n_seg * steps + 1, 2, 2), dtype=complex)
        out[0] = rho
    idx = 0
    for k in range(n_seg):
        h = hs[k]
        dt = durations[k] / steps
        for _ in range(steps):
            k1 = _forward_rhs(rho, h, channels)
            k2 = _forward_rhs(rho + 0.5 * dt * k1, h, channels)
            k3 = _forward_rhs(rho + 0.5 * dt * k2, h, channels)
            k4 = _forward_rhs(rho + dt * k3, h, channels)
            rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            idx += 1
            if record:
                out[idx] = rho
    if not record:
        out = rho.reshape(1, 2, 2)
    return out


def adjoint_rk4(lam_final, hs, durations, l_ops, rates, steps):
    """Integrate the adjoint state backward from t = T to t = 0.

    Samples are aligned with the forward grid: index 0 is t = 0, the last
    index is t = T and equals ``lam_final``. Shape (n_seg*steps + 1, 2, 2).
    """
    channels = _channel_table(l_ops, rates)
    n_seg = len(hs)
    lam = np.array(lam_final, dtype=complex)
    out = np.empty((n_seg * steps + 1, 2, 2), dtype=complex)
    idx = n_seg * steps
    out[idx] = lam
    for k in range(n_seg - 1, -1, -1):
        h = hs[k]
        dt = -durations[k] / steps
        for _ in range(steps):
            k1 = _adjoint_rhs(lam, h, channels)
            k2 = _adjoint_rhs(lam + 0.5 * dt * k1, h, channels)
            k3 = _adjoint_rhs(lam + 0.5 * dt * k2, h, channels)
            k4 = _adjoint_rhs(lam + dt * k3, h, channels)
            lam = lam + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            idx -= 1
            out[idx] = lam
    return out
