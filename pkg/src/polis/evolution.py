"""Market-selection dynamics driven by imitation and mutation.

Every round each firm sells its single unit in the market it chose, prices
clear from the linear demand curves, and each firm books its taxed profit.
Then, simultaneously, every firm may copy the last choice of one of its
nearest neighbours (picked with probability proportional to the neighbour's
profit in excess of the worst neighbour) and may independently switch to a
uniformly random market.

Random stream
-------------
A run's generator is ``numpy.random.default_rng(seed)``, i.e. PCG64 seeded
through ``SeedSequence``. The draw order is fixed:

1. initial choices: ``rng.integers(0, n_markets, n_firms)``;
2. per step, ``rng.random((n_firms, 4))``. Row ``i`` holds firm ``i``'s
   mimic coin, mimic pick, mutate coin and mutate pick, in that order.

All four uniforms are consumed every step whether or not they are used, so
a run of ``k`` steps can draw its whole block as ``rng.random((k, n, 4))``
and get identical numbers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import NamedTuple, Sequence

import numba
import numpy as np

from polis.economy import EconomyMap, MarketParams, TaxPolicy
from polis.errors import InvalidConfiguration

__all__ = [
    "SimConfig",
    "StrategyState",
    "StepRecord",
    "SimResult",
    "init_strategies",
    "neighbors",
    "neighbor_table",
    "mimic_distribution",
    "step",
    "run_simulation",
    "objective_from_trace",
    "write_trace_csv",
    "read_trace_csv",
]

DRAWS_PER_FIRM = 4
_CHUNK_STEPS = 256


@dataclass(frozen=True)
class SimConfig:
    steps: int = 1000
    warmup: int = 100
    neighbor_count: int = 4
    mimic_prob: float = 0.5
    mutate_prob: float = 0.0
    market_params: MarketParams = field(default_factory=MarketParams)
    seed: int | None = 0

    def __post_init__(self):
        if not 0.0 <= self.mimic_prob <= 1.0:
            raise InvalidConfiguration(f"mimic_prob must be in [0, 1], got {self.mimic_prob}")
        if not 0.0 <= self.mutate_prob <= 1.0:
            raise InvalidConfiguration(f"mutate_prob must be in [0, 1], got {self.mutate_prob}")
        if self.neighbor_count < 1:
            raise InvalidConfiguration("neighbor_count must be >= 1")
        if not 0 <= self.warmup < self.steps:
            raise InvalidConfiguration(f"need 0 <= warmup < steps, got warmup={self.warmup}, steps={self.steps}")

    def check_against(self, economy: EconomyMap) -> None:
        if self.neighbor_count > economy.n_firms:
            raise InvalidConfiguration(
                f"neighbor_count={self.neighbor_count} exceeds the {economy.n_firms} firms of the map"
            )


class StrategyState(NamedTuple):
    choice: np.ndarray  # market index per firm
    last_payoff: np.ndarray


class StepRecord(NamedTuple):
    t: int
    quantities: np.ndarray
    prices: np.ndarray
    mean_profit: float


@dataclass
class SimResult:
    """Objective plus the full per-step trace, stored column-wise."""

    objective: float
    quantities: np.ndarray  # (steps, n_markets)
    prices: np.ndarray  # (steps, n_markets)
    mean_profit: np.ndarray  # (steps,)
    final_state: StrategyState | None = None

    @property
    def trace(self) -> list[StepRecord]:
        return [
            StepRecord(t, self.quantities[t], self.prices[t], float(self.mean_profit[t]))
            for t in range(len(self.mean_profit))
        ]


def init_strategies(rng: np.random.Generator, n_firms: int, n_markets: int) -> StrategyState:
    if n_firms < 1 or n_markets < 1:
        raise InvalidConfiguration("n_firms and n_markets must be >= 1")
    choice = rng.integers(0, n_markets, size=n_firms).astype(np.int64)
    return StrategyState(choice, np.zeros(n_firms))


def neighbor_table(economy: EconomyMap, n: int) -> np.ndarray:
    """(n_firms, n) array; row ``i`` is :func:`neighbors` of firm ``i``.

    Cached per (map, n); treat the returned array as read-only.
    """
    return _neighbor_table(economy, n)


@lru_cache(maxsize=64)
def _neighbor_table(economy: EconomyMap, n: int) -> np.ndarray:
    if not 1 <= n <= economy.n_firms:
        raise InvalidConfiguration(f"neighbour count must be in [1, {economy.n_firms}], got {n}")
    pts = np.asarray(economy.firms, dtype=np.int64)
    # squared integer distances keep ties exact
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1)
    idx = np.arange(economy.n_firms)
    d2[idx, idx] = -1  # self first even when another firm shares its tile
    order = np.argsort(d2, axis=1, kind="stable")
    table = order[:, :n].copy()
    table.setflags(write=False)
    return table


def neighbors(economy: EconomyMap, firm: int, n: int) -> list[int]:
    """The ``n`` firms closest to ``firm``, itself first, ties by lower index."""
    if not 1 <= n <= economy.n_firms:
        raise InvalidConfiguration(f"neighbour count must be in [1, {economy.n_firms}], got {n}")
    here = economy.firms[firm]
    others = sorted(
        (i for i in range(economy.n_firms) if i != firm),
        key=lambda i: ((economy.firms[i].x - here.x) ** 2 + (economy.firms[i].y - here.y) ** 2, i),
    )
    return [firm] + others[: n - 1]


def mimic_distribution(payoffs: Sequence[float]) -> np.ndarray:
    """Imitation probabilities over a neighbourhood.

    Each neighbour is weighted by its payoff minus the neighbourhood minimum.
    If all payoffs are equal the weights vanish and the distribution is
    uniform.
    """
    r = np.asarray(payoffs, dtype=float)
    if r.size == 0:
        raise ValueError("mimic_distribution needs at least one payoff")
    w = r - r.min()
    total = w.sum()
    if total == 0.0:
        return np.full(r.size, 1.0 / r.size)
    return w / total


@numba.njit(cache=True, nogil=True)
def _advance(choice, new_choice, payoff, quantities, prices, dist, nbrs, intercept, slope, rate, fixed,
             transport, mimic_prob, mutate_prob, u):
    n, m = dist.shape
    k = nbrs.shape[1]
    quantities[:] = 0
    for i in range(n):
        quantities[choice[i]] += 1
    for j in range(m):
        prices[j] = intercept[j] - slope[j] * quantities[j]
    total_profit = 0.0
    for i in range(n):
        c = choice[i]
        payoff[i] = (1.0 + rate[c]) * prices[c] + fixed[c] - transport * dist[i, c]
        total_profit += payoff[i]

    for i in range(n):
        nxt = choice[i]
        if u[i, 0] < mimic_prob:
            rmin = payoff[nbrs[i, 0]]
            for q in range(1, k):
                if payoff[nbrs[i, q]] < rmin:
                    rmin = payoff[nbrs[i, q]]
            wsum = 0.0
            for q in range(k):
                wsum += payoff[nbrs[i, q]] - rmin
            if wsum > 0.0:
                target = u[i, 1] * wsum
                cum = 0.0
                pick = -1
                for q in range(k):
                    w = payoff[nbrs[i, q]] - rmin
                    if w > 0.0:
                        pick = q
                        cum += w
                        if target < cum:
                            break
            else:
                pick = min(int(u[i, 1] * k), k - 1)
            nxt = choice[nbrs[i, pick]]
        if u[i, 2] < mutate_prob:
            nxt = min(int(u[i, 3] * m), m - 1)
        new_choice[i] = nxt
    return total_profit / n


@numba.njit(cache=True, nogil=True)
def _run_block(choice, payoff, dist, nbrs, intercept, slope, rate, fixed, transport, mimic_prob, mutate_prob,
               uniforms, quantities_out, prices_out, mean_profit_out):
    scratch = np.empty_like(choice)
    for t in range(uniforms.shape[0]):
        mean_profit_out[t] = _advance(choice, scratch, payoff, quantities_out[t], prices_out[t], dist, nbrs,
                                      intercept, slope, rate, fixed, transport, mimic_prob, mutate_prob,
                                      uniforms[t])
        choice[:] = scratch


def _coefficients(economy: EconomyMap, params: MarketParams, policy: TaxPolicy):
    m = economy.n_markets
    if policy.n_markets != m:
        raise InvalidConfiguration(f"policy covers {policy.n_markets} markets, map has {m}")
    return (
        params.intercepts(m),
        params.slopes(m),
        np.asarray(policy.rate, dtype=float),
        np.asarray(policy.fixed, dtype=float),
        float(params.transport_rate),
    )


def step(economy: EconomyMap, params: MarketParams, policy: TaxPolicy, state: StrategyState,
         rng: np.random.Generator, *, nbrs: np.ndarray | None = None, neighbor_count: int = 4,
         mimic_prob: float = 0.5, mutate_prob: float = 0.0, t: int = 0) -> tuple[StrategyState, StepRecord]:
    """Play one round from ``state`` and return the next state and its record.

    ``nbrs`` may carry a precomputed :func:`neighbor_table`; otherwise it is
    built from ``neighbor_count``.
    """
    n, m = economy.n_firms, economy.n_markets
    choice = np.asarray(state.choice, dtype=np.int64)
    if choice.shape != (n,) or choice.min() < 0 or choice.max() >= m:
        raise InvalidConfiguration("strategy state does not match the map")
    if nbrs is None:
        nbrs = neighbor_table(economy, neighbor_count)
    intercept, slope, rate, fixed, transport = _coefficients(economy, params, policy)
    u = rng.random((n, DRAWS_PER_FIRM))
    new_choice = np.empty(n, dtype=np.int64)
    payoff = np.empty(n)
    quantities = np.empty(m, dtype=np.int64)
    prices = np.empty(m)
    mean_profit = _advance(choice, new_choice, payoff, quantities, prices, economy.distances, nbrs, intercept,
                           slope, rate, fixed, transport, float(mimic_prob), float(mutate_prob), u)
    return StrategyState(new_choice, payoff), StepRecord(t, quantities, prices, float(mean_profit))


def run_simulation(economy: EconomyMap, params: MarketParams | None, policy: TaxPolicy, config: SimConfig, *,
                   seed=None, initial_choice: Sequence[int] | None = None,
                   nbrs: np.ndarray | None = None) -> SimResult:
    """Simulate ``config.steps`` rounds and score the post-warmup window.

    ``seed`` overrides ``config.seed`` (the estimator passes per-replicate
    seed sequences this way). ``initial_choice`` replaces the random initial
    strategies; the initial draw is skipped in that case.
    """
    params = config.market_params if params is None else params
    config.check_against(economy)
    n, m = economy.n_firms, economy.n_markets
    rng = np.random.default_rng(config.seed if seed is None else seed)
    if initial_choice is None:
        choice = init_strategies(rng, n, m).choice
    else:
        choice = np.array(initial_choice, dtype=np.int64)
        if choice.shape != (n,) or choice.min() < 0 or choice.max() >= m:
            raise InvalidConfiguration("initial_choice does not match the map")
    if nbrs is None:
        nbrs = neighbor_table(economy, config.neighbor_count)
    intercept, slope, rate, fixed, transport = _coefficients(economy, params, policy)

    steps = config.steps
    quantities = np.empty((steps, m), dtype=np.int64)
    prices = np.empty((steps, m))
    mean_profit = np.empty(steps)
    payoff = np.zeros(n)
    for start in range(0, steps, _CHUNK_STEPS):
        stop = min(start + _CHUNK_STEPS, steps)
        u = rng.random((stop - start, n, DRAWS_PER_FIRM))
        _run_block(choice, payoff, economy.distances, nbrs, intercept, slope, rate, fixed, transport,
                   float(config.mimic_prob), float(config.mutate_prob), u, quantities[start:stop],
                   prices[start:stop], mean_profit[start:stop])

    objective = _dispersion(quantities[config.warmup:], n / m)
    return SimResult(objective, quantities, prices, mean_profit, StrategyState(choice, payoff))


def _dispersion(quantities: np.ndarray, mean_quantity: float) -> float:
    n_markets = quantities.shape[1]
    dev = quantities - mean_quantity
    per_step = np.sqrt((dev * dev).sum(axis=1) / (n_markets - 1))
    return float(per_step.mean())


def objective_from_trace(trace, warmup: int, n_firms: int, n_markets: int) -> float:
    """Mean over steps ``t >= warmup`` of the cross-market quantity std.

    The per-step std uses the ``n_markets - 1`` divisor around the constant
    mean ``n_firms / n_markets``. ``trace`` is a list of :class:`StepRecord`
    or a ``(steps, n_markets)`` array of quantities.
    """
    if n_markets < 2:
        raise ValueError("dispersion across markets needs at least two markets")
    if isinstance(trace, np.ndarray):
        q = trace
    else:
        q = np.array([rec.quantities for rec in trace], dtype=float).reshape(len(trace), -1)
    if q.ndim != 2 or q.shape[1] != n_markets:
        raise ValueError(f"trace quantities must have {n_markets} columns")
    if len(q) <= warmup:
        raise ValueError(f"empty objective window: trace has {len(q)} steps, warmup is {warmup}")
    return _dispersion(np.asarray(q[warmup:], dtype=float), n_firms / n_markets)


def write_trace_csv(result: SimResult, path: str | Path) -> None:
    m = result.quantities.shape[1]
    header = ["t"] + [f"Q_{j + 1}" for j in range(m)] + [f"p_{j + 1}" for j in range(m)] + ["mean_profit"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for t in range(len(result.mean_profit)):
            w.writerow(
                [t]
                + [int(v) for v in result.quantities[t]]
                + [repr(float(v)) for v in result.prices[t]]
                + [repr(float(result.mean_profit[t]))]
            )


def read_trace_csv(path: str | Path) -> list[StepRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    m = sum(1 for h in header if h.startswith("Q_"))
    out = []
    for line_no, row in enumerate(body, start=2):
        try:
            out.append(
                StepRecord(
                    int(row[0]),
                    np.array([int(v) for v in row[1:1 + m]], dtype=np.int64),
                    np.array([float(v) for v in row[1 + m:1 + 2 * m]]),
                    float(row[1 + 2 * m]),
                )
            )
        except (ValueError, IndexError) as exc:
            raise ValueError(f"{path}:{line_no}: malformed trace row: {exc}") from exc
    return out
