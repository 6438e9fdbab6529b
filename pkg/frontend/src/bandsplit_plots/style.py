"""Fixed matplotlib defaults so repeated renders are byte-identical."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams.update({
    "figure.figsize": (6.4, 4.2),
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.35,
    "lines.linewidth": 1.6,
    "lines.markersize": 4.5,
    "legend.fontsize": 9,
    "legend.framealpha": 0.9,
    "svg.fonttype": "none",          # keep labels as text, not paths
    "svg.hashsalt": "bandsplit-plots",  # deterministic element ids
})

# one fixed (color, marker) pair per series index
SERIES_STYLE = [
    ("#1f77b4", "o"),
    ("#d62728", "s"),
    ("#2ca02c", "^"),
    ("#9467bd", "v"),
    ("#ff7f0e", "D"),
    ("#8c564b", "P"),
]
