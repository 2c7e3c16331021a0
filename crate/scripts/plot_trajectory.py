"""Time course from `phosdyn simulate`: plot_trajectory.py RUN_DIR [OUT.png]"""
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

run = sys.argv[1]
df = pd.read_csv(f"{run}/trajectory.csv")
fig, ax = plt.subplots(figsize=(7, 3.5))
for col in ("c_no", "c_nop"):
    ax.plot(df["t"], df[col], label=col)
ax.set_xlabel("t")
ax.set_ylabel("concentration")
ax.legend()
fig.tight_layout()
fig.savefig(sys.argv[2] if len(sys.argv) > 2 else f"{run}/trajectory.png", dpi=150)
