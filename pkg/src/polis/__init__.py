"""Spatial market-selection economy with tax-policy search.

Firms on a grid learn which market to sell in by imitating profitable
neighbours; a planner searches per-market tax/subsidy coefficients that
even out the quantities sold, using simulated annealing or stochastic local
search over a Monte-Carlo estimate of the dispersion objective.
"""

from polis.economy import EconomyMap, GridPoint, MarketParams, TaxPolicy, generate_map
from polis.estimator import ObjectiveEstimate, PolicyEvaluator, estimate_expected_objective
from polis.evolution import SimConfig, SimResult, run_simulation
from polis.metaheuristics import (
    AnnealerConfig,
    NeighborhoodSpec,
    OptimizerRun,
    SearchConfig,
    simulated_annealing,
    stochastic_local_search,
)
from polis.stats import confidence_interval, one_sided_test, summarize

__version__ = "0.1.0"
