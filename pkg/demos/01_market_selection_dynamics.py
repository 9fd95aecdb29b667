"""
Market selection on a grid
==========================

A hundred firms on a 100x100 grid each sell one unit per round in one of
five markets. Firms copy profitable neighbours, so over time they sort
themselves toward markets that are close and not overcrowded, and the
average profit climbs.

Run with::

    python demos/01_market_selection_dynamics.py

Writes ``mean_profit.png`` next to the working directory when matplotlib is
installed.
"""

# %%
# Build an economy
# ----------------

import numpy as np

from polis import SimConfig, TaxPolicy, generate_map, run_simulation

economy = generate_map(seed=1)
print(f"{economy.n_firms} firms, {economy.n_markets} markets on a {economy.grid_size}^2 grid")
print("markets at", [tuple(m) for m in economy.markets])

# %%
# One run without taxes, and one with a subsidy on market 1
# -----------------------------------------------------------

config = SimConfig(steps=1000, seed=7)
no_tax = run_simulation(economy, None, TaxPolicy.zeros(5), config)
subsidy = run_simulation(economy, None, TaxPolicy((0.1, 0, 0, 0, 0), (20, 0, 0, 0, 0)), config)

for name, res in [("no taxes", no_tax), ("subsidy", subsidy)]:
    print(f"{name:>9}: dispersion {res.objective:.3f}, "
          f"mean profit {res.mean_profit[:10].mean():.1f} -> {res.mean_profit[-100:].mean():.1f}, "
          f"final quantities {res.quantities[-1]}")

# %%
# Plot the mean profit series
# ---------------------------

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, axes = plt.subplots(1, 2, figsize=(10, 3.5), sharey=True)
    for ax, (title, res) in zip(axes, [("no taxes", no_tax), ("subsidy on market 1", subsidy)]):
        ax.plot(np.arange(len(res.mean_profit)), res.mean_profit, lw=0.8)
        ax.set_title(title)
        ax.set_xlabel("step")
    axes[0].set_ylabel("mean profit")
    fig.tight_layout()
    fig.savefig("mean_profit.png", dpi=120)
    print("wrote mean_profit.png")
