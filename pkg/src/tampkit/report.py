"""Figure rendering from benchmark results CSV.

Kept out of the harness itself: the benchmark emits CSV/JSON only, and
this module turns those files into matplotlib figures on request.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_FIXED = ("family", "mode", "seed", "success", "expansions",
          "mean_expansion_s", "plan_time_s", "samples", "plan_len", "replans")

METRICS = ("plan_time_s", "expansions", "mean_expansion_s")


def _nearest_rank(vals, pct):
    vals = sorted(vals)
    if not vals:
        return math.nan
    return vals[max(0, math.ceil(pct / 100.0 * len(vals)) - 1)]


def load_records(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def render_report(results_csv, out_dir) -> list[Path]:
    """One figure per metric: median with a 5th-95th percentile band
    against the first grid parameter, one line per mode, plus a success
    rate figure. Returns the written paths."""
    records = load_records(results_csv)
    if not records:
        raise ValueError(f"no rows in {results_csv}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    param_cols = [c for c in records[0] if c not in _FIXED]
    x_col = param_cols[0] if param_cols else None
    family = records[0]["family"]
    written = []

    def groups():
        out = {}
        for r in records:
            x = float(r[x_col]) if x_col and r[x_col] != "" else 0.0
            out.setdefault((r["mode"], x), []).append(r)
        return out

    grouped = groups()
    modes = sorted({m for m, _ in grouped})
    for metric in METRICS + ("success",):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for mode in modes:
            xs = sorted(x for m, x in grouped if m == mode)
            if metric == "success":
                ys = [sum(int(r["success"]) for r in grouped[(mode, x)])
                      / len(grouped[(mode, x)]) for x in xs]
                ax.plot(xs, ys, marker="o", label=mode)
            else:
                series = [[float(r[metric]) for r in grouped[(mode, x)]
                           if r[metric] != ""] for x in xs]
                med = [_nearest_rank(s, 50) for s in series]
                lo = [_nearest_rank(s, 5) for s in series]
                hi = [_nearest_rank(s, 95) for s in series]
                ax.plot(xs, med, marker="o", label=mode)
                ax.fill_between(xs, lo, hi, alpha=0.2)
        ax.set_xlabel(x_col or "cell")
        ax.set_ylabel(metric if metric != "success" else "success rate")
        ax.set_title(family)
        ax.legend()
        fig.tight_layout()
        path = out_dir / f"{family}_{metric}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written
