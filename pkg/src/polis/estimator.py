"""Monte-Carlo estimate of a policy's expected dispersion objective.

Replicate ``i`` of root seed ``r`` is simulated with
``numpy.random.SeedSequence(r, spawn_key=(i,))``, so every replicate has its
own stream regardless of how many run or in which order they finish. Values
are stored by replicate index and aggregated in that order, which makes
threaded and sequential runs bit-identical.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from polis.economy import EconomyMap, MarketParams, TaxPolicy
from polis.evolution import SimConfig, neighbor_table, run_simulation
from polis.stats import z_for_confidence

__all__ = [
    "ObjectiveEstimate",
    "replicate_seed",
    "estimate_expected_objective",
    "estimate_from_values",
    "required_sample_size",
    "PolicyEvaluator",
    "thread_count",
]

FULL_SCALE_N_SIM = 10_000


@dataclass(frozen=True)
class ObjectiveEstimate:
    n: int
    mean: float
    std: float
    half_width: float
    confidence: float = 0.95
    replicate_values: tuple[float, ...] | None = field(default=None, compare=False, repr=False)

    def to_dict(self) -> dict:
        return {"n": self.n, "mean": self.mean, "std": self.std, "half_width": self.half_width,
                "confidence": self.confidence}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ObjectiveEstimate":
        d = json.loads(text)
        return cls(int(d["n"]), float(d["mean"]), float(d["std"]), float(d["half_width"]),
                   float(d["confidence"]))


def thread_count(default: int | None = None) -> int:
    """Worker cap from ``POLIS_THREADS``; falls back to the CPU count."""
    env = os.environ.get("POLIS_THREADS")
    if env:
        return max(1, int(env))
    return default or os.cpu_count() or 1


def replicate_seed(root_seed, index: int) -> np.random.SeedSequence:
    entropy = list(root_seed) if isinstance(root_seed, (list, tuple)) else root_seed
    return np.random.SeedSequence(entropy, spawn_key=(index,))


def estimate_from_values(values: Sequence[float], confidence: float = 0.95) -> ObjectiveEstimate:
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ValueError("need at least one replicate")
    mean = math.fsum(x) / x.size
    std = float(np.sqrt(((x - mean) ** 2).sum() / (x.size - 1))) if x.size > 1 else 0.0
    half = z_for_confidence(confidence) * std / math.sqrt(x.size)
    return ObjectiveEstimate(int(x.size), mean, std, half, confidence, tuple(float(v) for v in x))


def estimate_expected_objective(economy: EconomyMap, params: MarketParams | None, policy: TaxPolicy,
                                config: SimConfig, n_sim: int, root_seed, *, confidence: float = 0.95,
                                parallel: bool | int = False,
                                initial_choice: Sequence[int] | None = None) -> ObjectiveEstimate:
    """Run ``n_sim`` seeded replicates of one policy and summarise them.

    ``parallel`` may be ``True`` (use :func:`thread_count` workers) or a
    worker count. The simulation kernel releases the GIL, so threads help.
    """
    if n_sim < 1:
        raise ValueError(f"n_sim must be >= 1, got {n_sim}")
    params = config.market_params if params is None else params
    config.check_against(economy)
    nbrs = neighbor_table(economy, config.neighbor_count)

    def one(i):
        return run_simulation(economy, params, policy, config, seed=replicate_seed(root_seed, i),
                              initial_choice=initial_choice, nbrs=nbrs).objective

    workers = thread_count() if parallel is True else int(parallel or 1)
    if workers > 1 and n_sim > 1:
        with ThreadPoolExecutor(max_workers=min(workers, n_sim)) as pool:
            values = list(pool.map(one, range(n_sim)))
    else:
        values = [one(i) for i in range(n_sim)]
    return estimate_from_values(values, confidence)


def required_sample_size(std_guess: float, half_width: float, confidence: float = 0.95,
                         minimum: int = 30, z: float | None = None) -> int:
    """Smallest ``n`` whose normal interval half-width is at most ``half_width``.

    The result is floored at ``minimum`` (30), below which the normal
    approximation is not trusted. ``z`` overrides the exact quantile, e.g.
    ``z=1.96`` to match hand calculations with the rounded table value.
    """
    if std_guess <= 0 or half_width <= 0:
        raise ValueError("std_guess and half_width must be positive")
    if z is None:
        z = z_for_confidence(confidence)
    n = math.ceil((z * std_guess / half_width) ** 2)
    return max(n, minimum)


class PolicyEvaluator:
    """Noisy objective for the optimizers: policy -> estimated mean dispersion.

    Evaluation ``k`` uses root seed ``[*root_seed, k]``, so repeated
    evaluations of one policy draw fresh replicates while the whole run stays
    reproducible.
    """

    def __init__(self, economy: EconomyMap, config: SimConfig, n_sim: int, root_seed: int | tuple = 0, *,
                 params: MarketParams | None = None, confidence: float = 0.95,
                 parallel: bool | int = False):
        self.economy = economy
        self.config = config
        self.params = config.market_params if params is None else params
        self.n_sim = n_sim
        self.root_seed = tuple(root_seed) if isinstance(root_seed, (tuple, list)) else (int(root_seed),)
        self.confidence = confidence
        self.parallel = parallel
        self.calls = 0
        self.estimates: list[ObjectiveEstimate] = []

    def estimate(self, policy: TaxPolicy) -> ObjectiveEstimate:
        est = estimate_expected_objective(self.economy, self.params, policy, self.config, self.n_sim,
                                          (*self.root_seed, self.calls), confidence=self.confidence,
                                          parallel=self.parallel)
        self.calls += 1
        self.estimates.append(est)
        return est

    def __call__(self, policy: TaxPolicy) -> float:
        return self.estimate(policy).mean
