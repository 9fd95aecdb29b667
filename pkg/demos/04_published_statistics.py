"""
Summary statistics of optimizer campaigns
=========================================

Thirty final objective values per optimizer and economy are summarised by
their mean, unbiased standard deviation and normal 95% / 98% intervals,
and the two optimizers are compared with a one-sided two-sample z-test.
The sample files live in ``tests/data``.

Run with::

    python demos/04_published_statistics.py
"""

# %%

from pathlib import Path

from polis.stats import format_summary_table, one_sided_test, read_values, summarize, summary_block

data = Path(__file__).resolve().parent.parent / "tests" / "data"

for algorithm in ("sls", "sa"):
    blocks = {f"Economy {e}": summary_block(read_values(data / f"{algorithm}_economy{e}.txt")) for e in (1, 2)}
    print(algorithm.upper())
    print(format_summary_table(blocks, digits=3))
    print()

# %%
# Is local search worse than annealing?
# -------------------------------------

for e in (1, 2):
    sls = summarize(read_values(data / f"sls_economy{e}.txt"))
    sa = summarize(read_values(data / f"sa_economy{e}.txt"))
    z, p = one_sided_test(sls, sa)
    print(f"economy {e}: z = {z:.3f}, p = {p:.2e}, reject at 0.001: {p < 0.001}")
