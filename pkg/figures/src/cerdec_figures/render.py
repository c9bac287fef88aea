"""The four figure kinds: gain-vs-K curves, per-bin gain violins,
sampler convergence curves, and the TVD summary table.

Rendering is deterministic: fonts and style parameters are pinned and file
metadata that would embed timestamps is stripped, so the same CSV bytes
produce the same image bytes.  All statistics (medians, quartiles) come
straight from the input tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .schemas import (
    CONVERGENCE_SCHEMA,
    RECORDS_SCHEMA,
    REPORT_SCHEMA,
    TVD_SCHEMA,
    read_csv,
)

KINDS = ("gain_vs_k", "violin", "convergence", "tvd_table")
_FORMATS = ("png", "svg", "pdf")

_STYLE = {
    "font.family": "DejaVu Sans",
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.dpi": 150,
    "savefig.dpi": 150,
    "svg.hashsalt": "cerdec-figures",
}

_BIN_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
               "#8c564b", "#17becf", "#7f7f7f"]


@dataclass(frozen=True)
class FigureSpec:
    inputs: tuple            # csv paths; violin wants (records, report)
    kind: str
    output: str
    k: int = None            # dataset size filter for the violin kind
    log_x: bool = True
    log_y: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        suffix = self.output.rsplit(".", 1)[-1].lower()
        if suffix not in _FORMATS:
            raise ValueError(f"output format {suffix!r} not in {_FORMATS}")
        object.__setattr__(self, "inputs", tuple(self.inputs))


def _bin_label(lo, hi, count, mean_eps, mean_logical):
    return (
        rf"$\epsilon \in [{lo:.1e}, {hi:.1e})$  n={count}, "
        rf"$\langle\epsilon\rangle$={mean_eps:.1e}, "
        rf"$\langle \bar r \rangle$={mean_logical:.1e}"
    )


def build_gain_vs_k(report_rows, log_x=True, log_y=True):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    bins = sorted({(r["bin_lo"], r["bin_hi"]) for r in report_rows})
    for i, (lo, hi) in enumerate(bins):
        rows = sorted(
            (r for r in report_rows if (r["bin_lo"], r["bin_hi"]) == (lo, hi)),
            key=lambda r: r["K"],
        )
        ks = np.array([r["K"] for r in rows], dtype=float)
        med = np.array([r["median_gain"] for r in rows])
        q1 = np.array([r["q1"] for r in rows])
        q3 = np.array([r["q3"] for r in rows])
        err = np.stack([np.maximum(med - q1, 0), np.maximum(q3 - med, 0)])
        finite = np.isfinite(med)
        ax.errorbar(
            ks[finite], med[finite], yerr=err[:, finite],
            marker="o", capsize=3, color=_BIN_COLORS[i % len(_BIN_COLORS)],
            label=_bin_label(lo, hi, rows[0]["count"], rows[0]["mean_eps"],
                             rows[0]["mean_logical"]),
        )
    if log_x:
        ax.set_xscale("log")
    if log_y:
        ax.set_yscale("log")
    ax.axhline(1.0, color="k", linewidth=0.8, linestyle=":")
    ax.set_xlabel("rates known to the decoder (K)")
    ax.set_ylabel("logical error-rate gain over the fidelity-only decoder")
    ax.legend(fontsize=7, loc="upper left")
    fig.tight_layout()
    return fig


def build_violin(records_rows, report_rows, k, log_y=True):
    rows = [r for r in records_rows if r["K"] == k]
    if not rows:
        raise ValueError(f"no records at K={k}")
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    bins = sorted({(r["bin_lo"], r["bin_hi"]) for r in report_rows if r["K"] == k})
    data, counts, positions = [], [], []
    for i, (lo, hi) in enumerate(bins):
        gains = [r["gain"] for r in rows
                 if lo <= r["eps_physical"] < hi and np.isfinite(r["gain"])]
        if not gains:
            continue
        data.append(np.log10(gains) if log_y else np.asarray(gains))
        counts.append(len(gains))
        positions.append(len(positions))
    widths = [0.8 * c / max(counts) for c in counts]
    parts = ax.violinplot(
        data, positions=positions, widths=widths,
        showextrema=False, showmedians=False,
    )
    for i, body in enumerate(parts["bodies"]):
        body.set_facecolor(_BIN_COLORS[i % len(_BIN_COLORS)])
        body.set_alpha(0.6)
    # dashed quartile markers come from the report, never recomputed
    for i, (lo, hi) in enumerate(bins[: len(positions)]):
        row = next(r for r in report_rows
                   if (r["bin_lo"], r["bin_hi"]) == (lo, hi) and r["K"] == k)
        for value in (row["q1"], row["median_gain"], row["q3"]):
            if not np.isfinite(value):
                continue
            y = np.log10(value) if log_y else value
            ax.hlines(y, positions[i] - widths[i] / 2, positions[i] + widths[i] / 2,
                      linestyle="--", color="k", linewidth=0.9)
    ax.set_xticks(positions)
    ax.set_xticklabels(
        [rf"$\epsilon \in [{lo:.0e}, {hi:.0e})$" for lo, hi in bins[: len(positions)]],
        fontsize=7,
    )
    ax.set_ylabel("gain (log10)" if log_y else "gain")
    ax.set_xlabel(f"physical error-rate bins (K = {k})")
    fig.tight_layout()
    return fig


def build_convergence(rows, log_x=True, log_y=True):
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    series = sorted({r["series"] for r in rows})
    for i, name in enumerate(series):
        pts = sorted((r for r in rows if r["series"] == name),
                     key=lambda r: r["n_samples"])
        n = np.array([p["n_samples"] for p in pts], dtype=float)
        r_hat = np.array([p["r_hat"] for p in pts])
        err = np.array([p["stderr"] for p in pts])
        color = _BIN_COLORS[i % len(_BIN_COLORS)]
        ax.plot(n, r_hat, marker="o", color=color, label=name)
        ax.fill_between(n, r_hat - err, r_hat + err, color=color, alpha=0.25)
    ratio = _sample_count_ratio(rows)
    if ratio is not None:
        ax.annotate(
            f"{ratio:.0f}x fewer samples",
            xy=(0.05, 0.08), xycoords="axes fraction", fontsize=9,
            bbox=dict(boxstyle="round", facecolor="white", alpha=0.8),
        )
    if log_x:
        ax.set_xscale("log")
    if log_y:
        ax.set_yscale("log")
    ax.set_xlabel("syndrome samples")
    ax.set_ylabel("estimated logical error rate")
    ax.legend()
    fig.tight_layout()
    return fig


def _sample_count_ratio(rows):
    """How many times fewer samples the flattened sampler needs to reach the
    direct sampler's final precision."""
    direct = sorted((r for r in rows if r["series"] == "direct"),
                    key=lambda r: r["n_samples"])
    imp = sorted((r for r in rows if r["series"] == "importance"),
                 key=lambda r: r["n_samples"])
    if not direct or not imp:
        return None
    target = direct[-1]["stderr"]
    for p in imp:
        if p["stderr"] <= target:
            return direct[-1]["n_samples"] / p["n_samples"]
    return None


def build_tvd_table(rows):
    fig, ax = plt.subplots(figsize=(6.5, 0.6 + 0.4 * len(rows)))
    ax.axis("off")
    header = ["mean physical error", "TVD (partial data)", "TVD (completed)"]
    cells = [[f"{r['mean_eps']:.2e}", f"{r['tvd_partial']:.3g}",
              f"{r['tvd_completed']:.3g}"] for r in rows]
    table = ax.table(cellText=cells, colLabels=header, loc="center")
    table.scale(1, 1.4)
    fig.tight_layout()
    return fig


def build_figure(spec: FigureSpec):
    with plt.rc_context(_STYLE):
        if spec.kind == "gain_vs_k":
            return build_gain_vs_k(
                read_csv(spec.inputs[0], REPORT_SCHEMA), spec.log_x, spec.log_y
            )
        if spec.kind == "violin":
            if spec.k is None:
                raise ValueError("violin figures need a dataset size (k)")
            records = read_csv(spec.inputs[0], RECORDS_SCHEMA)
            report = read_csv(spec.inputs[1], REPORT_SCHEMA)
            return build_violin(records, report, spec.k, spec.log_y)
        if spec.kind == "convergence":
            return build_convergence(
                read_csv(spec.inputs[0], CONVERGENCE_SCHEMA), spec.log_x, spec.log_y
            )
        return build_tvd_table(read_csv(spec.inputs[0], TVD_SCHEMA))


def render(spec: FigureSpec) -> str:
    """Build and write the figure; returns the output path."""
    fig = build_figure(spec)
    suffix = spec.output.rsplit(".", 1)[-1].lower()
    metadata = {"Date": None} if suffix in ("svg", "pdf") else {}
    with plt.rc_context(_STYLE):
        fig.savefig(spec.output, metadata=metadata)
    plt.close(fig)
    return spec.output
