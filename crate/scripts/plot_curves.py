"""Two-parameter loci from `phosdyn diagram --kind hopf2d` and
`--kind cyclefold2d`, drawn in one (x, y) plane.
plot_curves.py OUT.png RUN_DIR [RUN_DIR ...]"""
import json
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

fig, ax = plt.subplots(figsize=(5, 4))
axes = None
for run in sys.argv[2:]:
    for name, style in (("hopf_curve.json", "r-"), ("cycle_fold_curve.json", "b--")):
        path = f"{run}/{name}"
        if not os.path.exists(path):
            continue
        c = json.load(open(path))
        branch = c.get("branch", c)
        ix, iy = 2, 3
        if name == "cycle_fold_curve.json":
            ix, iy = 4, 3
        axes = (branch["labels"][ix], branch["labels"][iy])
        ax.plot([p["u"][ix] for p in branch["points"]], [p["u"][iy] for p in branch["points"]], style, label=f"{run}: {name}")
        for b in c.get("bautin", []):
            ax.plot(*b["params"], "ko", ms=4)
if axes:
    ax.set_xscale("log")
    ax.set_xlabel(axes[0])
    ax.set_ylabel(axes[1])
ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig(sys.argv[1], dpi=150)
