"""One stem plot of the prior pmf per sweep parameter.

Usage: python plot_pmf.py [pmf.csv] [out.png]   (needs matplotlib)
"""
import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

src = sys.argv[1] if len(sys.argv) > 1 else "pmf.csv"
dst = sys.argv[2] if len(sys.argv) > 2 else "pmf.png"
groups = defaultdict(list)
with open(src) as fh:
    for r in csv.DictReader(fh):
        groups[r["parameter"]].append((float(r.get("location", r.get("location_0"))), float(r["mass"])))
keys = sorted(groups, key=float)
fig, axes = plt.subplots(len(keys), 1, figsize=(5, 1.6 * len(keys)), sharex=True, squeeze=False)
for ax, key in zip(axes[:, 0], keys):
    loc, mass = zip(*groups[key])
    ax.stem(loc, mass)
    ax.set_ylabel(key)
axes[-1, 0].set_xlabel("support point")
fig.tight_layout()
fig.savefig(dst, dpi=150)
