"""Render throughput/delay comparison figures from a sweep CSV.

One curve per (protocol, lambda_p) group: analytic values as a line,
simulated values (when the CSV carries them) as markers with 95% CI bars in
the same color. Infeasible rows become gaps. Output is SVG by default (PNG on
request) with fixed styling and no timestamps, so identical inputs produce
identical bytes.
"""

import csv
import math
import warnings
from dataclasses import dataclass

from . import style  # applies rcParams on import
import matplotlib.pyplot as plt

KINDS = ("throughput", "delay")

_COMMON = ("rate_R", "lambda_p", "protocol", "status")
_KIND_COLUMNS = {
    "throughput": ("mu_s_analytic", "mu_s_sim", "ci_mu_s"),
    "delay": ("D_s_analytic", "D_s_sim", "ci_D_s"),
}
_Y_LABEL = {
    "throughput": "max stable secondary throughput (packets/slot)",
    "delay": "secondary queueing delay (slots)",
}


class RenderError(ValueError):
    """Input CSV cannot be rendered; message names what is missing."""


@dataclass(frozen=True)
class FigureSpec:
    csv_path: str
    kind: str           # throughput | delay
    out_path: str
    png: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RenderError(f"kind must be one of {KINDS}, got {self.kind!r}")


def _load_rows(spec: FigureSpec):
    try:
        with open(spec.csv_path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            rows = list(reader)
    except OSError as exc:
        raise RenderError(f"cannot read {spec.csv_path}: {exc}") from None
    missing = [c for c in _COMMON + _KIND_COLUMNS[spec.kind] if c not in header]
    if missing:
        raise RenderError(
            f"{spec.csv_path} is missing required columns: {', '.join(missing)}")
    return rows


def _to_float(text: str) -> float:
    return float(text) if text not in ("", None) else math.nan


def render(spec: FigureSpec) -> list:
    """Write the figure; returns the series labels drawn, in legend order."""
    rows = _load_rows(spec)
    analytic_col, sim_col, ci_col = _KIND_COLUMNS[spec.kind]

    groups: dict = {}
    for row in rows:
        key = (row["protocol"], row["lambda_p"])
        groups.setdefault(key, []).append(row)
    if not groups:
        warnings.warn(f"{spec.csv_path}: no data rows, rendering empty axes")

    fig, ax = plt.subplots()
    labels = []
    for idx, (key, group) in enumerate(sorted(groups.items())):
        protocol, lam_p = key
        group.sort(key=lambda r: float(r["rate_R"]))
        x = [float(r["rate_R"]) for r in group]
        y = [_to_float(r[analytic_col]) if r["status"] == "ok" else math.nan
             for r in group]
        y_sim = [_to_float(r[sim_col]) if r["status"] == "ok" else math.nan
                 for r in group]
        ci = [_to_float(r[ci_col]) if r["status"] == "ok" else math.nan
              for r in group]
        if all(math.isnan(v) for v in y) and all(math.isnan(v) for v in y_sim):
            warnings.warn(f"series {protocol}, lambda_p={lam_p}: no plottable "
                          f"values, skipped")
            continue
        color, marker = style.SERIES_STYLE[idx % len(style.SERIES_STYLE)]
        label = f"{protocol}, lambda_p={lam_p}"
        if not all(math.isnan(v) for v in y):
            ax.plot(x, y, color=color, label=label)
            labels.append(label)
        sim_points = [(xi, yi, ci_i) for xi, yi, ci_i in zip(x, y_sim, ci)
                      if not math.isnan(yi)]
        if sim_points:
            xs, ys, cis = zip(*sim_points)
            yerr = [0.0 if math.isnan(c) else c for c in cis]
            ax.errorbar(xs, ys, yerr=yerr, color=color, marker=marker,
                        linestyle="none", capsize=2.5,
                        label=f"{label} (sim)")
            labels.append(f"{label} (sim)")
    ax.set_xlabel("spectral load (bits/s/Hz)")
    ax.set_ylabel(_Y_LABEL[spec.kind])
    if labels:
        ax.legend()
    fmt = "png" if spec.png else "svg"
    fig.savefig(spec.out_path, format=fmt, metadata=None if spec.png else {"Date": None})
    plt.close(fig)
    return sorted(labels)
