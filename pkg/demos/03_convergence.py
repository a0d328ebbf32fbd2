"""Watch plan cost fall as the sample count grows.

A small Monte-Carlo sweep on the maze: for each N, several seeded runs of
DFMT*; the median cost should drift downward and the success rate upward.
Runs in a few minutes on one core.
"""

import numpy as np

from lqdmp.cli import ExperimentSpec, run_sweep

spec = ExperimentSpec(scenario='maze', N=[250, 500, 1000, 2000], seeds=5,
                      eta=0.5, output_dir='demo_output')
path, recs = run_sweep(spec)
for N in spec.N:
    rs = [r for r in recs if r.N == N]
    costs = [r.cost for r in rs if r.success]
    med = np.median(costs) if costs else float('nan')
    print(f"N={N:5d}  solved {len(costs)}/{len(rs)}  median cost {med:.4f}")
print(f"per-run rows in {path}")
