"""Atom locations against the sweep parameter, marker area proportional to mass.

Usage: python plot_support.py [support.csv] [out.png]   (needs matplotlib)
"""
import csv
import sys

import matplotlib.pyplot as plt

src = sys.argv[1] if len(sys.argv) > 1 else "support.csv"
dst = sys.argv[2] if len(sys.argv) > 2 else "support.png"
with open(src) as fh:
    rows = list(csv.DictReader(fh))
x = [float(r["parameter"]) for r in rows]
y = [float(r.get("location", r.get("location_0"))) for r in rows]
s = [400.0 * float(r["mass"]) for r in rows]
fig, ax = plt.subplots(figsize=(5, 4))
ax.scatter(x, y, s=s, alpha=0.7)
ax.set_xlabel("parameter")
ax.set_ylabel("support point")
fig.tight_layout()
fig.savefig(dst, dpi=150)
