"""Cuttlefish population optimiser for box-constrained minimisation.

Every new candidate is ``reflection + visibility``.  The population is cut
in index order into four groups, each with its own update rule:

* G1: ``Q * x + U * (best - x)``
* G2: ``Q * best + U * (best - x)``
* G3: ``Q * best + U * (best - mean(best))``
* G4: a fresh uniform sample from the box

with ``Q = r * (q1 - q2) + q2`` and ``U = r * (u1 - u2) + u2`` drawn afresh
for every cell.  Proposals are clamped to the box and replace their cell
only when strictly better, so best-so-far fitness never increases.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._rng import Xoshiro256pp
from .exceptions import NumericError, UsageError

DEFAULT_GROUP_FRACTIONS = (0.5, 0.25, 0.15, 0.1)


@dataclass
class CuttlefishConfig:
    """Optimiser settings.  ``lower``/``upper`` may be scalars or d-vectors."""

    dim: int
    lower: object = -5.0
    upper: object = 5.0
    pop_size: int = 20
    group_fractions: tuple = DEFAULT_GROUP_FRACTIONS
    q1: float = 1.0
    q2: float = -0.5
    u1: float = 1.0
    u2: float = -0.5
    budget: int = 10000
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.dim, bool) or not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise UsageError(f"dim must be a positive integer, got {self.dim!r}")
        self.lower = np.broadcast_to(np.asarray(self.lower, dtype=np.float64), (self.dim,)).copy()
        self.upper = np.broadcast_to(np.asarray(self.upper, dtype=np.float64), (self.dim,)).copy()
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise UsageError("bounds must be finite")
        if not np.all(self.lower < self.upper):
            raise UsageError("lower bound must be strictly below upper bound in every dimension")
        if self.pop_size < 1:
            raise UsageError(f"pop_size must be positive, got {self.pop_size}")
        fr = tuple(float(f) for f in self.group_fractions)
        if len(fr) != 4 or min(fr) < 0 or abs(sum(fr) - 1.0) > 1e-12:
            raise UsageError("group_fractions must be four non-negative numbers summing to 1")
        self.group_fractions = fr
        if self.budget < self.pop_size:
            raise UsageError(f"budget ({self.budget}) must be at least pop_size ({self.pop_size})")

    def group_bounds(self):
        """End index (exclusive) of G1..G4 in the population."""
        ends = []
        acc = 0.0
        for f in self.group_fractions[:-1]:
            acc += f
            ends.append(min(self.pop_size, math.floor(acc * self.pop_size + 0.5)))
        ends.append(self.pop_size)
        return tuple(ends)

    def clamp(self, x):
        return np.minimum(np.maximum(x, self.lower), self.upper)


@dataclass
class Cell:
    point: np.ndarray
    fitness: float = math.inf


@dataclass
class CuttlefishState:
    population: list
    best: Cell
    av_best: float
    evals_used: int
    rng: Xoshiro256pp
    iteration: int = 0
    trace: list = field(default_factory=list, repr=False)


def _evaluate(obj, point):
    value = float(obj(point))
    if not math.isfinite(value):
        raise NumericError(f"objective returned {value} at point {point.tolist()}")
    return value


def _draw_factor(rng, a, b):
    return rng.random() * (a - b) + b


def cf_init(cfg, obj):
    """Sample and evaluate the initial population."""
    rng = Xoshiro256pp.for_stream(cfg.seed, "cuttlefish")
    population = []
    for _ in range(cfg.pop_size):
        point = cfg.lower + (cfg.upper - cfg.lower) * rng.random_array(cfg.dim)
        population.append(Cell(point, _evaluate(obj, point)))
    best_idx = min(range(len(population)), key=lambda i: (population[i].fitness, i))
    best = Cell(population[best_idx].point.copy(), population[best_idx].fitness)
    return CuttlefishState(population, best, float(np.mean(best.point)),
                           cfg.pop_size, rng)


def cf_new_point_g1(cell, best, Q, U):
    return Q * cell.point + U * (best.point - cell.point)


def cf_new_point_g2(cell, best, Q, U):
    return Q * best.point + U * (best.point - cell.point)


def cf_new_point_g3(best, av_best, Q, V):
    return Q * best.point + V * (best.point - av_best)


def cf_new_point_g4(cfg, rng):
    return cfg.lower + (cfg.upper - cfg.lower) * rng.random_array(cfg.dim)


def cf_propose(state, cfg, n):
    """Clamped proposals for the first ``n`` cells; advances ``state.rng``."""
    g1, g2, g3, _ = cfg.group_bounds()
    rng = state.rng
    proposals = []
    for i in range(n):
        cell = state.population[i]
        if i >= g3:
            p = cf_new_point_g4(cfg, rng)
        else:
            Q = _draw_factor(rng, cfg.q1, cfg.q2)
            U = _draw_factor(rng, cfg.u1, cfg.u2)
            if i < g1:
                p = cf_new_point_g1(cell, state.best, Q, U)
            elif i < g2:
                p = cf_new_point_g2(cell, state.best, Q, U)
            else:
                p = cf_new_point_g3(state.best, state.av_best, Q, U)
        proposals.append(cfg.clamp(p))
    return proposals


def cf_step(state, cfg, obj):
    """One generation.  Returns a new state; ``state`` is left untouched."""
    remaining = cfg.budget - state.evals_used
    if remaining <= 0:
        return state
    new = replace(state, population=list(state.population), rng=state.rng.copy(),
                  best=state.best, trace=state.trace)
    n = min(cfg.pop_size, remaining)
    proposals = cf_propose(new, cfg, n)
    fitness = [_evaluate(obj, p) for p in proposals]
    best = new.best
    for i, (p, f) in enumerate(zip(proposals, fitness)):
        if f < new.population[i].fitness:
            new.population[i] = Cell(p, f)
            if f < best.fitness:
                best = Cell(p.copy(), f)
    new.best = best
    new.av_best = float(np.mean(best.point))
    new.evals_used = state.evals_used + n
    new.iteration = state.iteration + 1
    return new


@dataclass
class CuttlefishResult:
    best_point: np.ndarray
    best_fitness: float
    curve: list
    evals_used: int
    state: CuttlefishState = field(repr=False)


def cf_optimize(cfg, obj, callback=None):
    """Run until the evaluation budget is spent.

    ``curve[0]`` is the best fitness after initialisation and ``curve[t]`` the
    best after generation ``t``.  ``callback(state)`` is called after each
    generation, if given.
    """
    state = cf_init(cfg, obj)
    curve = [state.best.fitness]
    while state.evals_used < cfg.budget:
        state = cf_step(state, cfg, obj)
        curve.append(state.best.fitness)
        if callback is not None:
            callback(state)
    return CuttlefishResult(state.best.point.copy(), state.best.fitness, curve,
                            state.evals_used, state)


class CuttlefishOptimizer:
    """Object-style front end: ``CuttlefishOptimizer(**settings).minimize(f, lower, upper)``."""

    def __init__(self, pop_size=20, budget=10000, group_fractions=DEFAULT_GROUP_FRACTIONS,
                 q1=1.0, q2=-0.5, u1=1.0, u2=-0.5, seed=0):
        self.pop_size = pop_size
        self.budget = budget
        self.group_fractions = group_fractions
        self.q1, self.q2, self.u1, self.u2 = q1, q2, u1, u2
        self.seed = seed

    def get_params(self, deep=True):
        return {k: getattr(self, k) for k in
                ("pop_size", "budget", "group_fractions", "q1", "q2", "u1", "u2", "seed")}

    def set_params(self, **params):
        for k, v in params.items():
            if k not in self.get_params():
                raise ValueError(f"unknown parameter {k!r}")
            setattr(self, k, v)
        return self

    def minimize(self, fun, lower, upper):
        lower = np.atleast_1d(np.asarray(lower, dtype=np.float64))
        cfg = CuttlefishConfig(dim=lower.size, lower=lower, upper=upper, **self.get_params())
        self.result_ = cf_optimize(cfg, fun)
        return self.result_
