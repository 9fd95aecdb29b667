"""
Estimating a policy's expected dispersion
=========================================

The learning dynamics are random, so the dispersion objective of a policy
is a random variable. Its expectation is estimated from independent seeded
replicates, with a normal confidence interval around the mean.

Run with::

    python demos/02_estimating_the_objective.py
"""

# %%

from polis import SimConfig, TaxPolicy, estimate_expected_objective, generate_map
from polis.estimator import required_sample_size

economy = generate_map(seed=1)
config = SimConfig(steps=1000)

for n_sim in (10, 40, 160):
    est = estimate_expected_objective(economy, None, TaxPolicy.zeros(5), config, n_sim, root_seed=0)
    print(f"n_sim={n_sim:4d}: mean {est.mean:.4f}  std {est.std:.4f}  95% half width {est.half_width:.4f}")

# %%
# How many replicates for a given precision?
# ------------------------------------------
#
# With a per-replicate std of 4.5, a +/-0.05 interval at 95% needs about
# 31,000 replicates; 10,000 replicates give that width at roughly 73%.

print("replicates for +/-0.05 at 95% with std 4.5:", required_sample_size(4.5, 0.05, 0.95))
print("replicates for +/-0.1 at 95% with the std measured above:",
      required_sample_size(est.std, 0.1, 0.95))
