#!/usr/bin/env python3
"""Plot a solution-field CSV produced by `polyflux solve` or `polyflux discrete`.

Usage: plot_solution.py solve_t0.csv [more.csv ...]
"""
import sys

import matplotlib.pyplot as plt
import pandas as pd

fig, (ax_w, ax_y) = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
for path in sys.argv[1:]:
    df = pd.read_csv(path, comment="#")
    ax_w.plot(df["x"], df["w"], label=path)
    ax_y.plot(df["x"], df["y_star"], label=path)
ax_w.set_ylabel("w(x, t)")
ax_y.set_ylabel("y*(x, t)")
ax_y.set_xlabel("x")
ax_w.legend()
fig.tight_layout()
plt.show()
