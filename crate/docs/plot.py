"""Plots for hitsim output directories.

    python docs/plot.py curve out/simulate_reciprocal
    python docs/plot.py order out/converge_reciprocal
    python docs/plot.py metrics out/blowup_gamma
    python docs/plot.py density out/density_a out/density_b
"""

import json
import sys
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np


def read(path):
    return np.genfromtxt(path, delimiter=",", names=True)


def curve(dirs):
    fig, (ax, dax) = plt.subplots(1, 2, figsize=(10, 4))
    for d in map(Path, dirs):
        c = read(d / "loss.csv")
        ax.step(c["t"], c["L"], where="post", label=d.name)
        if (d / "loss_rate.csv").exists():
            r = read(d / "loss_rate.csv")
            dax.plot(r["t"], r["dL"], label=d.name)
    ax.set(xlabel="t", ylabel="L")
    dax.set(xlabel="t", ylabel="dL/dt")
    ax.legend()
    return fig


def order(dirs):
    fig, ax = plt.subplots()
    for d in map(Path, dirs):
        e = read(d / "errors.csv")
        fit = json.loads((d / "order.json").read_text())
        ax.loglog(e["n"], e["error"], "o", label=f"{d.name}: {fit['fitted_order']:.2f}")
        ax.loglog(e["n"], np.exp(fit["intercept"]) * e["n"] ** -fit["fitted_order"], "--", color="gray")
    ax.set(xlabel="n", ylabel="|L(2n) - L(n)|")
    ax.legend()
    return fig


def metrics(dirs):
    fig, ax = plt.subplots()
    for d in map(Path, dirs):
        m = read(d / "metrics.csv")
        for name in ("d1", "d2", "d3"):
            ax.loglog(m["n"], m[name], "o-", label=f"{d.name} {name}")
    ax.set(xlabel="n", ylabel="distance between n and 2n")
    ax.legend()
    return fig


def density(dirs):
    fig, ax = plt.subplots()
    for d in map(Path, dirs):
        k = read(d / "density.csv")
        ax.plot(k["x"], k["density"], label=d.name)
    ax.set(xlabel="y", ylabel="density of surviving positions")
    ax.legend()
    return fig


if __name__ == "__main__":
    kind, *dirs = sys.argv[1:]
    fig = {"curve": curve, "order": order, "metrics": metrics, "density": density}[kind](dirs)
    fig.tight_layout()
    out = Path(dirs[0]) / f"{kind}.png"
    fig.savefig(out, dpi=150)
    print(out)
