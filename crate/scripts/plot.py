#!/usr/bin/env python3
"""Boxplots and p-value curves from an `halftaper experiment` output directory.

    python scripts/plot.py out/ [--save fig.png]
"""
import argparse
import pathlib

import matplotlib.pyplot as plt
import pandas as pd

MODES = ["F", "T", "HT"]
COLORS = {"F": "tab:gray", "T": "tab:red", "HT": "tab:blue"}


def read(dir_, name):
    return pd.read_csv(dir_ / name, comment="#")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("dir", type=pathlib.Path)
    ap.add_argument("--save", type=pathlib.Path)
    args = ap.parse_args()

    resp = read(args.dir, "responses.csv")
    ks = read(args.dir, "ks.csv")
    names = list(resp["response"].unique())
    ratios = sorted(resp["theta_ratio"].unique())

    fig, axes = plt.subplots(2, len(names), figsize=(5 * len(names), 8), squeeze=False)
    for col, name in enumerate(names):
        ax = axes[0][col]
        sub = resp[resp["response"] == name]
        for k, mode in enumerate(MODES):
            data = [sub[(sub["mode"] == mode) & (sub["theta_ratio"] == r)]["value"] for r in ratios]
            pos = [i * 4 + k for i in range(len(ratios))]
            bp = ax.boxplot(data, positions=pos, widths=0.8, patch_artist=True, showfliers=False)
            for patch in bp["boxes"]:
                patch.set_facecolor(COLORS[mode])
        ax.set_xticks([i * 4 + 1 for i in range(len(ratios))], [str(r) for r in ratios])
        ax.set_title(name)
        ax.set_xlabel("taper range / effective range")

        ax = axes[1][col]
        sub = ks[ks["response"] == name]
        for comp, mode in [("T_vs_F", "T"), ("HT_vs_F", "HT")]:
            s = sub[sub["comparison"] == comp].sort_values("theta_ratio")
            ax.semilogy(s["theta_ratio"], s["p"], "o-", color=COLORS[mode], label=comp)
        ax.axhline(0.05, ls="--", color="k", lw=0.8)
        ax.set_ylabel("KS p-value")
        ax.set_xlabel("taper range / effective range")
        ax.legend()

    fig.tight_layout()
    if args.save:
        fig.savefig(args.save, dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    main()
