"""Noise results: plot_noise.py sr RUN_DIR | plot_noise.py periods RUN_DIR"""
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

kind, run = sys.argv[1], sys.argv[2]
if kind == "sr":
    df = pd.read_csv(f"{run}/sr.csv")
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.errorbar(df["sigma"], df["mean_amplitude"], yerr=df["stderr"], marker="o", capsize=2)
    ax.set_xscale("log")
    ax.set_xlabel("sigma")
    ax.set_ylabel("peak Fourier amplitude")
else:
    df = pd.read_csv(f"{run}/periods.csv")
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(8, 3.5))
    a1.plot(df["param"], df["mean_period"], "o-")
    a1.set_ylabel("mean period")
    a2.plot(df["param"], df["cv"], "o-")
    a2.set_ylabel("CV")
    for a in (a1, a2):
        a.set_xlabel("parameter")
fig.tight_layout()
fig.savefig(f"{run}/{kind}.png", dpi=150)
