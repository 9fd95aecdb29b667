"""Search over tax policies with a noisy objective.

Both optimizers take ``objective(policy) -> float`` (normally a
:class:`polis.estimator.PolicyEvaluator`) and a ``numpy`` generator. The
generator is split with ``rng.spawn(2)`` into a move stream and an
acceptance stream, so simulated annealing at vanishing temperature proposes
exactly the same candidates as the local search given the same ``rng``.

A solution's value is the estimate recorded when it was evaluated; it is
not re-estimated on later comparisons unless ``reestimate=True``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from polis.economy import TaxPolicy
from polis.errors import InvalidConfiguration, OptimizerError

__all__ = [
    "NeighborhoodSpec",
    "AnnealerConfig",
    "SearchConfig",
    "Evaluation",
    "OptimizerRun",
    "neighbor_policy",
    "sa_accept",
    "cool",
    "simulated_annealing",
    "stochastic_local_search",
    "write_history_csv",
    "read_history_csv",
]

Objective = Callable[[TaxPolicy], float]


@dataclass(frozen=True)
class NeighborhoodSpec:
    rate_radius: float = 0.02
    fixed_radius: float = 5.0
    rate_bounds: tuple[float, float] = (-0.25, 0.25)
    fixed_bounds: tuple[float, float] = (-50.0, 50.0)

    def __post_init__(self):
        if self.rate_radius < 0 or self.fixed_radius < 0:
            raise InvalidConfiguration("neighbourhood radii must be non-negative")
        if not (self.rate_bounds[0] < self.rate_bounds[1] and self.fixed_bounds[0] < self.fixed_bounds[1]):
            raise InvalidConfiguration("policy bounds must be non-degenerate intervals")

    def contains(self, policy: TaxPolicy) -> bool:
        return policy.within(self.rate_bounds, self.fixed_bounds)


@dataclass(frozen=True)
class AnnealerConfig:
    t0: float = 10.0
    alpha: float = 0.8
    inner_iters: int = 10
    t_final: float = 0.001
    max_evaluations: int | None = 210  # None: temperature criterion only
    neighborhood: NeighborhoodSpec = field(default_factory=NeighborhoodSpec)
    reestimate: bool = False

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InvalidConfiguration(f"alpha must be in (0, 1), got {self.alpha}")
        if not self.t0 > self.t_final > 0.0:
            raise InvalidConfiguration("need t0 > t_final > 0")
        if self.inner_iters < 1:
            raise InvalidConfiguration("inner_iters must be >= 1")
        if self.max_evaluations is not None and self.max_evaluations < 1:
            raise InvalidConfiguration("max_evaluations must be >= 1")


@dataclass(frozen=True)
class SearchConfig:
    iterations: int = 200
    neighborhood: NeighborhoodSpec = field(default_factory=NeighborhoodSpec)
    reestimate: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise InvalidConfiguration("iterations must be >= 1")


class Evaluation(NamedTuple):
    policy: TaxPolicy
    value: float
    accepted: bool
    temperature: float | None = None


@dataclass
class OptimizerRun:
    algorithm: str
    best_policy: TaxPolicy
    best_value: float
    final_policy: TaxPolicy
    final_value: float
    history: list[Evaluation]
    evaluations: int
    outer_loops: int = 0

    def summary(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "best_policy": self.best_policy.to_dict(),
            "best_value": self.best_value,
            "final_policy": self.final_policy.to_dict(),
            "final_value": self.final_value,
            "evaluations": self.evaluations,
            "outer_loops": self.outer_loops,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


def neighbor_policy(current: TaxPolicy, spec: NeighborhoodSpec, rng: np.random.Generator) -> TaxPolicy:
    """Perturb every coordinate uniformly within its radius, then clamp to the box."""
    m = current.n_markets
    vec = current.as_vector()
    radius = np.r_[np.full(m, spec.rate_radius), np.full(m, spec.fixed_radius)]
    lo = np.r_[np.full(m, spec.rate_bounds[0]), np.full(m, spec.fixed_bounds[0])]
    hi = np.r_[np.full(m, spec.rate_bounds[1]), np.full(m, spec.fixed_bounds[1])]
    moved = rng.uniform(vec - radius, vec + radius)
    return TaxPolicy.from_vector(np.clip(moved, lo, hi))


def sa_accept(delta: float, temperature: float, rng: np.random.Generator) -> bool:
    """Metropolis rule. Downhill moves are accepted without drawing."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    if delta < 0:
        return True
    x = rng.random()
    ratio = delta / temperature
    return x < (math.exp(-ratio) if ratio < 745.0 else 0.0)


def cool(t: float, alpha: float) -> float:
    if t <= 0:
        raise ValueError("temperature must be positive")
    return alpha * t


class _Tracker:
    """Evaluation bookkeeping shared by both searches."""

    def __init__(self, algorithm, objective, initial):
        self.algorithm = algorithm
        self.objective = objective
        self.history: list[Evaluation] = []
        self.calls = 0
        self.outer_loops = 0
        self.current = self.best = initial
        self.current_value = self.best_value = math.nan

    def evaluate(self, policy: TaxPolicy) -> float:
        try:
            value = float(self.objective(policy))
        except Exception as exc:
            raise OptimizerError(f"objective evaluation {self.calls} failed: {exc}", self.run()) from exc
        self.calls += 1
        return value

    def move(self, policy, value):
        self.current, self.current_value = policy, value
        if not value >= self.best_value:  # also true while best_value is nan
            self.best, self.best_value = policy, value

    def run(self) -> OptimizerRun:
        return OptimizerRun(self.algorithm, self.best, self.best_value, self.current, self.current_value,
                            list(self.history), self.calls, self.outer_loops)


def simulated_annealing(objective: Objective, initial: TaxPolicy, config: AnnealerConfig | None = None,
                        rng: np.random.Generator | None = None) -> OptimizerRun:
    """Minimise ``objective`` by simulated annealing with geometric cooling.

    The outer loop runs while the temperature is at least ``t_final``; each
    outer iteration makes ``inner_iters`` moves at a fixed temperature and
    then cools by ``alpha``. The run also stops once ``max_evaluations``
    objective calls (the initial one included) have been spent.

    The best accepted solution is tracked separately from the current one
    and returned as ``best_policy``.
    """
    config = config or AnnealerConfig()
    rng = np.random.default_rng() if rng is None else rng
    if not config.neighborhood.contains(initial):
        raise InvalidConfiguration("initial policy lies outside the feasible box")
    move_rng, accept_rng = rng.spawn(2)
    budget = math.inf if config.max_evaluations is None else config.max_evaluations

    tr = _Tracker("sa", objective, initial)
    value = tr.evaluate(initial)
    tr.history.append(Evaluation(initial, value, True, None))
    tr.move(initial, value)

    t = config.t0
    while t >= config.t_final and tr.calls < budget:
        tr.outer_loops += 1
        for _ in range(config.inner_iters):
            if tr.calls >= budget:
                break
            candidate = neighbor_policy(tr.current, config.neighborhood, move_rng)
            if config.reestimate:
                if tr.calls + 2 > budget:
                    break
                tr.current_value = tr.evaluate(tr.current)
            value = tr.evaluate(candidate)
            accepted = sa_accept(value - tr.current_value, t, accept_rng)
            tr.history.append(Evaluation(candidate, value, accepted, t))
            if accepted:
                tr.move(candidate, value)
        t = cool(t, config.alpha)
    return tr.run()


def stochastic_local_search(objective: Objective, initial: TaxPolicy, config: SearchConfig | None = None,
                            rng: np.random.Generator | None = None) -> OptimizerRun:
    """Random-neighbour descent: move only on strict improvement.

    Makes exactly ``iterations`` candidate evaluations after the initial one.
    """
    config = config or SearchConfig()
    rng = np.random.default_rng() if rng is None else rng
    if not config.neighborhood.contains(initial):
        raise InvalidConfiguration("initial policy lies outside the feasible box")
    move_rng, _ = rng.spawn(2)

    tr = _Tracker("sls", objective, initial)
    value = tr.evaluate(initial)
    tr.history.append(Evaluation(initial, value, True, None))
    tr.move(initial, value)
    for _ in range(config.iterations):
        candidate = neighbor_policy(tr.current, config.neighborhood, move_rng)
        if config.reestimate:
            tr.current_value = tr.evaluate(tr.current)
        value = tr.evaluate(candidate)
        accepted = value < tr.current_value
        tr.history.append(Evaluation(candidate, value, accepted, None))
        if accepted:
            tr.move(candidate, value)
    return tr.run()


def write_history_csv(run: OptimizerRun, path: str | Path) -> None:
    m = run.best_policy.n_markets
    header = (["eval_index", "temperature"] + [f"rate_{j + 1}" for j in range(m)]
              + [f"fixed_{j + 1}" for j in range(m)] + ["estimate", "accepted"])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for k, ev in enumerate(run.history):
            w.writerow([k, "" if ev.temperature is None else repr(ev.temperature)]
                       + [repr(float(v)) for v in ev.policy.as_vector()]
                       + [repr(ev.value), int(ev.accepted)])


def read_history_csv(path: str | Path) -> list[Evaluation]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    m = sum(1 for h in header if h.startswith("rate_"))
    out = []
    for line_no, row in enumerate(body, start=2):
        try:
            vec = [float(v) for v in row[2:2 + 2 * m]]
            out.append(Evaluation(TaxPolicy.from_vector(vec), float(row[2 + 2 * m]), row[3 + 2 * m] == "1",
                                  float(row[1]) if row[1] else None))
        except (ValueError, IndexError) as exc:
            raise ValueError(f"{path}:{line_no}: malformed history row: {exc}") from exc
    return out
