"""One-parameter diagram from `phosdyn diagram --kind eq1d`: equilibria as
lines (solid stable, dashed unstable), cycles as their c_no extremes.
Equilibria outside the physical box c_no + c_nop <= 1/A_cyto are skipped.
plot_diagram.py RUN_DIR [OUT.png]"""
import json
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

run = sys.argv[1]
d = json.load(open(f"{run}/diagram.json"))
free = d["free"]
cap = 1.0 / d["params"]["A_cyto"]
fig, ax = plt.subplots(figsize=(6, 4))


def runs(points):
    """Split points into runs of equal stability."""
    out = []
    for p in points:
        if out and out[-1][0] == p["stable"]:
            out[-1][1].append(p)
        else:
            if out:
                out[-1][1].append(p)
            out.append((p["stable"], [p]))
    return out


for b in d["equilibria"]:
    j = b["labels"].index(free)
    inside = [p for p in b["points"] if p["u"][0] + p["u"][1] <= cap]
    for stable, pts in runs(inside):
        ax.plot([p["u"][j] for p in pts], [p["u"][0] for p in pts], "k" + ("-" if stable else "--"), lw=1)
    for e in b["events"]:
        if e["kind"] == "hopf":
            ax.plot(e["u"][j], e["u"][0], "rs", ms=5)
for b in d["cycles"]:
    j = b["labels"].index(free)
    for stable, pts in runs(b["points"]):
        style = "g" + ("-" if stable else "--")
        x = [p["u"][j] for p in pts]
        ax.plot(x, [p["cycle"]["c_no_max"] for p in pts], style, lw=1)
        ax.plot(x, [p["cycle"]["c_no_min"] for p in pts], style, lw=1)
ax.set_xlabel(free)
ax.set_ylabel("c_no")
fig.tight_layout()
fig.savefig(sys.argv[2] if len(sys.argv) > 2 else f"{run}/diagram.png", dpi=150)
