"""Nullclines and equilibria from `phosdyn nullclines`, in (total, fraction)
coordinates: plot_phase_plane.py RUN_DIR [OUT.png]"""
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

run = sys.argv[1]
fig, ax = plt.subplots(figsize=(5, 4))
for name, colour in (("c_no", "tab:blue"), ("c_nop", "tab:orange")):
    df = pd.read_csv(f"{run}/nullcline_{name}.csv")
    for i, (_, part) in enumerate(df.groupby("component")):
        ax.plot(part["total"], part["frac"], color=colour, label=f"{name} nullcline" if i == 0 else None)
eq = pd.read_csv(f"{run}/equilibria.csv")
total = eq["c_no"] + eq["c_nop"]
frac = eq["c_nop"] / total
stable = eq["kind"].str.startswith("stable")
ax.scatter(total[stable], frac[stable], color="k", zorder=3, label="stable")
ax.scatter(total[~stable], frac[~stable], facecolor="w", edgecolor="k", zorder=3, label="unstable")
ax.set_xlabel("c_no + c_nop")
ax.set_ylabel("c_nop / (c_no + c_nop)")
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig(sys.argv[2] if len(sys.argv) > 2 else f"{run}/phase_plane.png", dpi=150)
