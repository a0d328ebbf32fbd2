"""Plan through the bundled maze with both planners.

DFMT* grows a tree in cost-to-come order over a fixed set of samples;
DPRM* searches the full connection graph on the same samples and radius,
so its cost can only be lower or equal. Both plans are written as JSON and
SVG drawings into ./demo_output.
"""

from pathlib import Path

from lqdmp.cli import run_single
from lqdmp.planner import PlannerConfig

out = Path('demo_output')
cfg = PlannerConfig(N=1000)
for planner in ('dfmt', 'dprm'):
    plan, _ = run_single('maze', cfg, seed=0, planner=planner, out_dir=out,
                      svg=out / f'maze_{planner}.svg')
    s = plan.stats
    print(f"{planner}: success={plan.success} cost={plan.cost:.4f} "
          f"radius={plan.radius:.3f} waypoints={len(plan.waypoints)} "
          f"collision checks={s['collision_checks']}")
print(f"drawings and plan JSON in {out.resolve()}")
