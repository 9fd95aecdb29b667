"""
Searching for a tax policy
==========================

Simulated annealing and stochastic local search both move through the box
of feasible tax/subsidy coefficients by perturbing every coefficient a
little, and both score candidates with a Monte-Carlo estimate of the
dispersion objective. This demo runs a small campaign of each and compares
the best values they report.

Run with::

    python demos/03_policy_search.py [executions]

The default of 3 executions per method takes a couple of minutes.
"""

# %%

import sys

import numpy as np

from polis import (
    AnnealerConfig,
    PolicyEvaluator,
    SearchConfig,
    SimConfig,
    TaxPolicy,
    generate_map,
    one_sided_test,
    simulated_annealing,
    stochastic_local_search,
    summarize,
)

executions = int(sys.argv[1]) if len(sys.argv) > 1 else 3
economy = generate_map(seed=1)
config = SimConfig(steps=300, warmup=100)
start = TaxPolicy.zeros(5)

# %%
# Run both optimizers
# -------------------

sa_best, sls_best = [], []
for k in range(executions):
    sa = simulated_annealing(PolicyEvaluator(economy, config, 50, root_seed=(1, k)), start,
                             AnnealerConfig(), np.random.default_rng([1, k]))
    sls = stochastic_local_search(PolicyEvaluator(economy, config, 50, root_seed=(2, k)), start,
                                  SearchConfig(), np.random.default_rng([2, k]))
    sa_best.append(sa.best_value)
    sls_best.append(sls.best_value)
    print(f"execution {k}: SA {sa.best_value:.4f} ({sa.evaluations} evals), "
          f"SLS {sls.best_value:.4f} ({sls.evaluations} evals)")

print("SA best policy of the last execution:")
print("  rate ", np.round(sa.best_policy.rate, 3))
print("  fixed", np.round(sa.best_policy.fixed, 2))

# %%
# Compare
# -------

if executions >= 2:
    z, p = one_sided_test(summarize(sls_best), summarize(sa_best))
    print(f"mean best: SA {np.mean(sa_best):.4f}, SLS {np.mean(sls_best):.4f}; "
          f"one-sided z = {z:.3f}, p = {p:.3g}")
