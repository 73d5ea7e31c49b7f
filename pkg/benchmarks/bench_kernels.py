#!/usr/bin/env python3
"""Benchmark the compiled RK4 core against the pure-numpy fallback.

The integrator dominates everything the package does: a single mixed-game
evaluation runs 64 nine-segment propagations and one optimizer gradient
runs a forward and an adjoint pass per opponent branch. This script times
those workloads on both backends and prints the speedup.

Usage: python benchmarks/bench_kernels.py [--steps N] [--repeats K]
"""

import argparse
import time

import numpy as np

from pennyflip.game import GameConfig, Role, expected_payoff, pauli_strategy
from pennyflip.kernels import _core, _python
from pennyflip.lindblad import NoiseModel
from pennyflip.optimize import OptimizationProblem, gradient
from pennyflip.qubit import SMINUS, SY, SZ


def time_call(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_workloads(steps):
    rng = np.random.default_rng(0)
    rho0 = np.diag([1.0, 0.0]).astype(complex)
    coeffs = rng.uniform(-np.pi, np.pi, 9)
    hs = np.stack([c * (SY if i % 3 == 1 else SZ) for i, c in enumerate(coeffs)])
    dur = np.ones(9)
    l_ops = SMINUS.reshape(1, 2, 2)
    rates = np.array([0.7])
    lam_T = np.diag([0.5, -0.5]).astype(complex)
    return {
        "forward, final state": lambda k: k.propagate_rk4(rho0, hs, dur, l_ops, rates, steps, False),
        "forward, recorded": lambda k: k.propagate_rk4(rho0, hs, dur, l_ops, rates, steps, True),
        "adjoint, recorded": lambda k: k.adjoint_rk4(lam_T, hs, dur, l_ops, rates, steps),
    }


def library_workloads(steps):
    cfg = GameConfig(noise=NoiseModel.amplitude_damping(0.7), steps_per_segment=steps)
    alice, bob = pauli_strategy(Role.ALICE), pauli_strategy(Role.BOB)
    prob = OptimizationProblem(cfg=cfg, role=Role.BOB, opponent=alice)
    eps = np.array([0.4, -0.8, 0.3])
    return {
        "expected payoff (64 branches)": lambda: expected_payoff(cfg, alice, bob),
        "cost gradient (16 branches)": lambda: gradient(prob, eps),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=200, help="RK4 substeps per segment")
    parser.add_argument("--repeats", type=int, default=5, help="repeats per timing (best-of)")
    args = parser.parse_args()

    width = 34
    print(f"{'workload':{width}s} {'python':>12s} {'cython':>12s} {'speedup':>9s}")
    for name, fn in kernel_workloads(args.steps).items():
        t_py = time_call(lambda: fn(_python), args.repeats)
        t_cy = time_call(lambda: fn(_core), args.repeats)
        print(f"{name:{width}s} {t_py * 1e3:10.2f}ms {t_cy * 1e3:10.3f}ms {t_py / t_cy:8.1f}x")

    import pennyflip.kernels as kernels

    for backend, module in (("python", _python), ("cython", _core)):
        kernels.propagate_rk4 = module.propagate_rk4
        kernels.adjoint_rk4 = module.adjoint_rk4
        for name, fn in library_workloads(args.steps).items():
            t = time_call(fn, max(1, args.repeats // 2))
            label = f"{name} [{backend}]"
            print(f"{label:{width}s} {t * 1e3:23.2f}ms")
    kernels.propagate_rk4 = _core.propagate_rk4
    kernels.adjoint_rk4 = _core.adjoint_rk4


if __name__ == "__main__":
    main()
