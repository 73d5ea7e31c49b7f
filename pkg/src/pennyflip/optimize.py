"""Pulse optimization against a fixed opponent strategy.

One player's control coefficients are tuned to steer the branch-averaged
final state toward a target (|0><0| for Bob, |1><1| for Alice). The cost

    J(eps) = E_branches[ 1/2 || rho(T) - rho_target ||_F^2 ]

is minimized with BFGS under a strong-Wolfe line search. Its gradient
comes from the adjoint state lam(t), integrated backward from
lam(T) = rho(T) - rho_target under the Hilbert-Schmidt adjoint of the
Lindblad generator; the per-segment derivative is the time integral of
tr(-i lam [dH/deps, rho]) over that segment, accumulated with composite
Simpson weights on the RK4 grid. Central finite differences of the same
cost serve as the independent check in the tests.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import line_search
from scipy.optimize._linesearch import LineSearchWarning

from . import kernels
from .game import GameConfig, Role, Strategy, expected_payoff
from .lindblad import segment_hamiltonians
from .qubit import KET0, KET1, SY, SZ, HERMITICITY_TOL, PulseTriple, check_state

FREE_SEGMENTS = {Role.ALICE: (0, 1, 2, 6, 7, 8), Role.BOB: (3, 4, 5)}
N_SEGMENTS = 9

WOLFE_C1 = 1e-4
WOLFE_C2 = 0.9


def segment_axis(index: int) -> np.ndarray:
    """Control axis matrix of segment ``index`` in the Z,Y,Z pattern."""
    return SY if index % 3 == 1 else SZ


@dataclass(frozen=True, eq=False)
class CostSpec:
    """Target state of the squared Frobenius-distance cost."""

    target: np.ndarray

    def __post_init__(self):
        check_state(self.target)


def default_target(role: Role) -> np.ndarray:
    """The optimizing player's winning state."""
    return KET1.copy() if role is Role.ALICE else KET0.copy()


def cost(rho_final: np.ndarray, spec: CostSpec) -> float:
    """1/2 || rho - target ||_F^2."""
    diff = rho_final - spec.target
    return float(0.5 * np.sum(np.abs(diff) ** 2))


@dataclass(frozen=True, eq=False)
class OptimizationProblem:
    """One player's pulse-optimization setup against a fixed opponent."""

    cfg: GameConfig
    role: Role
    opponent: Strategy
    cost_spec: CostSpec | None = None
    initial_guess: np.ndarray | None = None
    bounds: tuple[float, float] | None = None  # optional box per coefficient
    grad_tol: float = 1e-6
    cost_tol: float = 1e-12
    max_iterations: int = 500

    def __post_init__(self):
        if self.opponent.role is self.role:
            raise ValueError("opponent must play the other role")
        if self.initial_guess is not None:
            guess = np.asarray(self.initial_guess, dtype=float)
            if guess.shape != (self.n_parameters,):
                raise ValueError(
                    f"initial guess must have length {self.n_parameters}"
                )
            if not np.all(np.isfinite(guess)):
                raise ValueError("initial guess must be finite")

    @property
    def n_parameters(self) -> int:
        return len(FREE_SEGMENTS[self.role])

    def target_matrix(self) -> np.ndarray:
        if self.cost_spec is not None:
            return self.cost_spec.target
        return default_target(self.role)

    def start_point(self) -> np.ndarray:
        if self.initial_guess is None:
            return np.zeros(self.n_parameters)
        return np.asarray(self.initial_guess, dtype=float)


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    """Best pulses found, their cost, and the payoff they achieve."""

    epsilon: np.ndarray
    cost: float
    payoff: float
    iterations: int
    grad_norm: float
    converged: bool
    seed: int | None = None

    def to_json_dict(self) -> dict:
        return {
            "epsilon": [float(x) for x in self.epsilon],
            "cost": self.cost,
            "payoff": self.payoff,
            "iterations": self.iterations,
            "grad_norm": self.grad_norm,
            "converged": self.converged,
            "seed": self.seed,
        }


def strategy_from_vector(role: Role, eps) -> Strategy:
    """Deterministic strategy whose rounds are filled from a flat coefficient vector."""
    eps = np.asarray(eps, dtype=float)
    n = len(FREE_SEGMENTS[role])
    if eps.shape != (n,):
        raise ValueError(f"expected {n} coefficients, got shape {eps.shape}")
    triples = tuple(PulseTriple(*eps[i:i + 3]) for i in range(0, n, 3))
    return Strategy.deterministic(role, triples)


def _full_coefficients(role: Role, eps, opponent_rounds) -> np.ndarray:
    coeffs = np.empty(N_SEGMENTS)
    free = FREE_SEGMENTS[role]
    coeffs[list(free)] = eps
    opp = np.concatenate([t.as_array() for t in opponent_rounds])
    other = [i for i in range(N_SEGMENTS) if i not in free]
    coeffs[other] = opp
    return coeffs


def _segment_hamiltonians(coeffs) -> np.ndarray:
    return np.stack([coeffs[i] * segment_axis(i) for i in range(N_SEGMENTS)])


def _branch_final_state(cfg, coeffs, l_ops, rates):
    hs = _segment_hamiltonians(coeffs)
    durations = np.full(N_SEGMENTS, cfg.dt)
    return kernels.propagate_rk4(cfg.initial_state, hs, durations, l_ops, rates,
                                 cfg.steps_per_segment, False)[0]


def average_cost(prob: OptimizationProblem, eps) -> float:
    """Branch-averaged cost of one coefficient vector.

    Returns inf when the integrator leaves the stable step-size region
    (huge trial amplitudes during a line search), so such points are
    rejected as ordinary ascent.
    """
    eps = np.asarray(eps, dtype=float)
    spec = CostSpec(prob.target_matrix())
    l_ops, rates = prob.cfg.noise.stacked()
    total = 0.0
    for opp_rounds, p in prob.opponent.branches():
        coeffs = _full_coefficients(prob.role, eps, opp_rounds)
        final = _branch_final_state(prob.cfg, coeffs, l_ops, rates)
        # a physical state has entries of order one; anything larger means
        # the trial step left the integrator's stability region
        if not np.isfinite(final).all() or np.max(np.abs(final)) > 1e3:
            return np.inf
        total += p * cost(final, spec)
    return total


def adjoint_backward(lam_final: np.ndarray, schedule, noise, steps: int) -> np.ndarray:
    """Integrate the adjoint state backward through a control schedule.

    Returns samples aligned with the forward grid (index 0 at t = 0).
    """
    lam_final = np.asarray(lam_final, dtype=complex)
    if np.max(np.abs(lam_final - lam_final.conj().T)) > HERMITICITY_TOL:
        raise ValueError("terminal adjoint state must be Hermitian")
    hs, durations = segment_hamiltonians(schedule)
    l_ops, rates = noise.stacked()
    return kernels.adjoint_rk4(lam_final, hs, durations, l_ops, rates, steps)


def segment_gradient(lam_samples, rho_samples, axis_matrix, dt_step: float) -> float:
    """Simpson-weighted integral of tr(-i lam [axis, rho]) over one segment.

    Linear in the segment duration when the samples are held fixed.
    """
    comm = axis_matrix @ rho_samples - rho_samples @ axis_matrix
    vals = -1.0j * np.einsum("nab,nba->n", lam_samples, comm)
    residue = np.max(np.abs(vals.imag))
    if residue > 1e-10:
        raise ValueError(f"gradient integrand has imaginary residue {residue:g}")
    return float(simpson(vals.real, dx=dt_step))


def gradient(prob: OptimizationProblem, eps) -> np.ndarray:
    """Adjoint-state gradient of the branch-averaged cost."""
    eps = np.asarray(eps, dtype=float)
    if eps.shape != (prob.n_parameters,):
        raise ValueError(f"expected {prob.n_parameters} coefficients")
    target = prob.target_matrix()
    l_ops, rates = prob.cfg.noise.stacked()
    steps = prob.cfg.steps_per_segment
    durations = np.full(N_SEGMENTS, prob.cfg.dt)
    free = FREE_SEGMENTS[prob.role]
    grad = np.zeros(prob.n_parameters)
    for opp_rounds, p in prob.opponent.branches():
        coeffs = _full_coefficients(prob.role, eps, opp_rounds)
        hs = _segment_hamiltonians(coeffs)
        rho = kernels.propagate_rk4(prob.cfg.initial_state, hs, durations,
                                    l_ops, rates, steps, True)
        if not np.isfinite(rho[-1]).all() or np.max(np.abs(rho[-1])) > 1e3:
            # unstable trial point; the matching inf cost already rejects it
            return np.zeros(prob.n_parameters)
        lam = kernels.adjoint_rk4(rho[-1] - target, hs, durations, l_ops, rates, steps)
        for j, seg in enumerate(free):
            window = slice(seg * steps, (seg + 1) * steps + 1)
            grad[j] += p * segment_gradient(lam[window], rho[window],
                                            segment_axis(seg), prob.cfg.dt / steps)
    return grad


def central_difference(fun, x, h: float) -> np.ndarray:
    """Central-difference gradient of a scalar function of a vector."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for k in range(len(x)):
        step = np.zeros_like(x)
        step[k] = h
        out[k] = (fun(x + step) - fun(x - step)) / (2.0 * h)
    return out


def finite_difference_gradient(prob: OptimizationProblem, eps, h: float = 1e-5) -> np.ndarray:
    """Finite-difference check of ``gradient``; test/diagnostic use only."""
    if not h > 0:
        raise ValueError("h must be positive")
    return central_difference(lambda e: average_cost(prob, e), eps, h)


class _Evaluations:
    """Memoized cost/gradient evaluations for the line search."""

    def __init__(self, prob):
        self._prob = prob
        self._costs = {}
        self._grads = {}

    def cost(self, x):
        key = x.tobytes()
        if key not in self._costs:
            self._costs[key] = average_cost(self._prob, x)
        return self._costs[key]

    def grad(self, x):
        key = x.tobytes()
        if key not in self._grads:
            self._grads[key] = gradient(self._prob, x)
        return self._grads[key]


def _max_feasible_step(x, direction, bounds):
    lo, hi = bounds
    amax = np.inf
    for xi, di in zip(x, direction):
        if di > 0:
            amax = min(amax, (hi - xi) / di)
        elif di < 0:
            amax = min(amax, (lo - xi) / di)
    return amax


def optimize(prob: OptimizationProblem, callback=None) -> OptimizationResult:
    """Minimize the branch-averaged cost with BFGS from the problem's start point.

    The convergence flag is set only when the gradient norm drops below
    the problem's tolerance; a failed line search or a stalled cost
    returns the best iterate found with the flag cleared. ``callback``,
    when given, is invoked as callback(x, f) at the start point and after
    every accepted iterate.
    """
    evals = _Evaluations(prob)
    x = prob.start_point()
    if prob.bounds is not None:
        x = np.clip(x, *prob.bounds)
    f = evals.cost(x)
    g = evals.grad(x)
    if callback is not None:
        callback(x.copy(), f)
    n = len(x)
    h_inv = np.eye(n)
    iterations = 0
    converged = np.linalg.norm(g) < prob.grad_tol

    while not converged and iterations < prob.max_iterations:
        direction = -h_inv @ g
        if direction @ g >= 0:
            # inverse-Hessian estimate lost descent; restart from steepest descent
            h_inv = np.eye(n)
            direction = -g
        amax = None
        if prob.bounds is not None:
            amax = _max_feasible_step(x, direction, prob.bounds)
            if not amax > 0:
                break
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LineSearchWarning)
            alpha, _, _, f_new, _, _ = line_search(
                evals.cost, evals.grad, x, direction, gfk=g, old_fval=f,
                c1=WOLFE_C1, c2=WOLFE_C2, amax=amax,
            )
        if alpha is None:
            break
        x_new = x + alpha * direction
        g_new = evals.grad(x_new)
        s = x_new - x
        y = g_new - g
        decrease = f - f_new
        x, f, g = x_new, f_new, g_new
        iterations += 1
        if callback is not None:
            callback(x.copy(), f)
        if np.linalg.norm(g) < prob.grad_tol:
            converged = True
            break
        if decrease < prob.cost_tol:
            break
        sy = s @ y
        if sy > 1e-14:
            rho_k = 1.0 / sy
            outer = np.outer(s, y)
            h_inv = ((np.eye(n) - rho_k * outer) @ h_inv @ (np.eye(n) - rho_k * outer.T)
                     + rho_k * np.outer(s, s))

    payoff = _payoff_of(prob, x)
    return OptimizationResult(
        epsilon=x,
        cost=f,
        payoff=payoff,
        iterations=iterations,
        grad_norm=float(np.linalg.norm(g)),
        converged=bool(converged),
    )


def _with_guess(prob: OptimizationProblem, guess) -> OptimizationProblem:
    return OptimizationProblem(
        cfg=prob.cfg, role=prob.role, opponent=prob.opponent,
        cost_spec=prob.cost_spec, initial_guess=guess, bounds=prob.bounds,
        grad_tol=prob.grad_tol, cost_tol=prob.cost_tol,
        max_iterations=prob.max_iterations,
    )


def _optimize_task(args):
    prob, guess = args
    return optimize(_with_guess(prob, guess))


def multistart_optimize(prob: OptimizationProblem, n_starts: int, seed: int,
                        jobs: int = 1) -> OptimizationResult:
    """Best of ``n_starts`` BFGS runs: the zero start plus seeded uniform draws.

    The draws form a prefix sequence, so a longer run with the same seed
    can only improve on a shorter one. Starts are independent and may run
    in a process pool (``jobs``); results are reduced in start order, so
    the outcome does not depend on the pool size.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    rng = np.random.default_rng(seed)
    guesses = [np.zeros(prob.n_parameters)]
    for _ in range(n_starts - 1):
        guesses.append(rng.uniform(-np.pi, np.pi, prob.n_parameters))
    if jobs > 1 and n_starts > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=min(jobs, n_starts)) as pool:
            results = list(pool.map(_optimize_task, [(prob, g) for g in guesses]))
    else:
        results = [_optimize_task((prob, g)) for g in guesses]
    best = min(results, key=lambda r: r.cost)
    return OptimizationResult(
        epsilon=best.epsilon, cost=best.cost, payoff=best.payoff,
        iterations=best.iterations, grad_norm=best.grad_norm,
        converged=best.converged, seed=seed,
    )


def _payoff_of(prob: OptimizationProblem, eps) -> float:
    mine = strategy_from_vector(prob.role, eps)
    if prob.role is Role.ALICE:
        return expected_payoff(prob.cfg, mine, prob.opponent)
    return expected_payoff(prob.cfg, prob.opponent, mine)
