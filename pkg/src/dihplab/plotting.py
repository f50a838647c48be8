"""Figure rendering for the experiment reports.

Every experiment that writes a delimited file can also render a matching
figure next to it; all functions take plain row tuples and return the saved
path.  The Agg backend keeps this usable headless.
"""

from __future__ import annotations

import os
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path: str) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_gap(rows: Sequence[tuple], path: str) -> str:
    """Histogram of cut ratios for the planted and uniform instances."""
    yes = [r[4] for r in rows if r[1] == "yes"]
    no = [r[4] for r in rows if r[1] == "no"]
    fig, ax = plt.subplots(figsize=(6, 4))
    lo = min(no + yes) if (no or yes) else 0.0
    bins = 30
    ax.hist(no, bins=bins, range=(lo, 1.0001), alpha=0.6, label="uniform")
    ax.hist(yes, bins=bins, range=(lo, 1.0001), alpha=0.6, label="planted")
    ax.set_xlabel("maxcut / |E|")
    ax.set_ylabel("trials")
    ax.legend()
    ax.set_title("Cut ratio by instance type")
    return _save(fig, path)


def plot_decay(rows: Sequence[tuple], path: str) -> str:
    """Measured per-level weight against the decay envelope, log scale."""
    ds = [r[0] for r in rows]
    weights = [r[1] for r in rows]
    bounds = [r[2] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(ds, [max(w, 1e-18) for w in weights], "o-", label="level weight")
    ax.semilogy(ds, [max(b, 1e-18) for b in bounds], "s--", label="envelope")
    ax.set_xlabel("half-level d")
    ax.set_ylabel("weight")
    ax.legend()
    ax.set_title("Coefficient decay")
    return _save(fig, path)


def plot_inequality(rows: Sequence[tuple], path: str, title: str) -> str:
    """Paired bars of lhs and rhs per report row."""
    idx = range(len(rows))
    lhs = [r[4] for r in rows]
    rhs = [r[5] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    width = 0.4
    ax.bar([i - width / 2 for i in idx], lhs, width, label="lhs")
    ax.bar([i + width / 2 for i in idx], rhs, width, label="rhs")
    ax.set_yscale("log")
    ax.set_xticks(list(idx))
    ax.set_xticklabels([f"d={r[2]}" for r in rows])
    ax.set_ylabel("value")
    ax.legend()
    ax.set_title(title)
    return _save(fig, path)


def plot_discrepancy(rows: Sequence[tuple], path: str) -> str:
    """Scatter of yes mass against no mass per sampled rectangle."""
    no = [r[1] for r in rows]
    yes = [r[2] for r in rows]
    global_flags = [r[5] for r in rows]
    fig, ax = plt.subplots(figsize=(5, 5))
    for flag, marker, label in ((True, "o", "global"), (False, "x", "not global")):
        xs = [n for n, g in zip(no, global_flags) if g is flag]
        ys = [y for y, g in zip(yes, global_flags) if g is flag]
        if xs:
            ax.scatter(xs, ys, marker=marker, label=label, alpha=0.7)
    top = max(no + yes) if rows else 1.0
    ax.plot([0, top], [0, top], "k:", linewidth=1)
    ax.set_xlabel("no mass")
    ax.set_ylabel("yes mass")
    ax.legend()
    ax.set_title("Rectangle masses under the two distributions")
    return _save(fig, path)


def plot_decompose(records: Sequence[dict], path: str) -> str:
    """Piece sizes and density ratios of one decomposition."""
    sizes = [r["piece_size"] for r in records]
    ratios = [r["density_ratio"] or 0.0 for r in records]
    idx = range(len(records))
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 4))
    ax1.bar(idx, sizes)
    ax1.set_xlabel("piece")
    ax1.set_ylabel("size")
    ax1.set_title("Piece sizes")
    ax2.bar(idx, ratios, color="tab:orange")
    ax2.set_xlabel("piece")
    ax2.set_ylabel("density / original density")
    ax2.set_title("Density amplification")
    return _save(fig, path)


def plot_refine(rows: Sequence[tuple], path: str, bound_slope: float = 3.0) -> str:
    """Mass-weighted potential per round against the linear budget."""
    by_round: dict[int, float] = {}
    for round_, _rid, _zs, pot, mass_no, _my in rows:
        by_round[round_] = by_round.get(round_, 0.0) + pot * mass_no
    ds = sorted(by_round)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ds, [by_round[d] for d in ds], "o-", label="weighted potential")
    ax.plot(ds, [bound_slope * d for d in ds], "k--", label=f"{bound_slope:g} x round")
    ax.set_xlabel("round")
    ax.set_ylabel("potential")
    ax.legend()
    ax.set_title("Potential growth under refinement")
    return _save(fig, path)
