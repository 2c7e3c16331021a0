"""Regime map from `phosdyn regime-grid`: plot_regimes.py RUN_DIR [OUT.png]"""
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

run = sys.argv[1]
df = pd.read_csv(f"{run}/regimes.csv")
fig, ax = plt.subplots(figsize=(5, 4))
for label, part in df.groupby("label"):
    ax.scatter(part["p1"], part["p2"], label=label, s=40, marker="s")
ax.set_xscale("log")
ax.set_xlabel("p1")
ax.set_ylabel("p2")
ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig(sys.argv[2] if len(sys.argv) > 2 else f"{run}/regimes.png", dpi=150)
