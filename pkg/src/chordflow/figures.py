"""Figure rendering for analysis reports.

Each function draws one figure from already-computed analysis rows and
writes it as a PNG next to the CSV outputs. Rendering is deterministic:
fixed figure sizes, fixed dpi, colors assigned in sorted order.
"""

from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .corpus import Corpus
from .metrics import ComposerNovelty, InfluenceCurve, WorkNovelty
from .stats import PowerLawFit

log = logging.getLogger(__name__)

PERIOD_COLORS = {
    "Baroque": "tab:blue",
    "Classical": "tab:green",
    "Transition": "tab:orange",
    "Romantic": "tab:red",
    "Other": "tab:gray",
}

_DPI = 150


def _save(fig, path: Path) -> Path:
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def novelty_scatter(out_dir: Path, corpus: Corpus,
                    work_rows: list[WorkNovelty]) -> Path:
    """H-novelty vs P-novelty of the works, colored by period."""
    fig, ax = plt.subplots(figsize=(5.0, 4.2), constrained_layout=True)
    by_period: dict[str, tuple[list[float], list[float]]] = {}
    for row in work_rows:
        period = corpus.composers[corpus.works[row.work_id].composer_id].period.value
        xs, ys = by_period.setdefault(period, ([], []))
        xs.append(row.nu_h)
        ys.append(row.nu_p)
    for period in sorted(by_period):
        xs, ys = by_period[period]
        ax.scatter(xs, ys, s=14, alpha=0.7, label=period,
                   color=PERIOD_COLORS.get(period, "tab:gray"))
    ax.set_xlabel("H-novelty (log10 / codeword)")
    ax.set_ylabel("P-novelty (log10 / codeword)")
    ax.set_title("Work novelty: history vs own past")
    if by_period:
        ax.legend(fontsize=8)
    return _save(fig, out_dir / "novelty_scatter.png")


def composer_novelty_panels(out_dir: Path, corpus: Corpus,
                            composer_rows: list[ComposerNovelty]) -> Path:
    """Composer mean novelties against their timeline midpoints."""
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 4.0), sharex=True,
                             constrained_layout=True)
    for ax, attr, label in ((axes[0], "n_h", "mean H-novelty"),
                            (axes[1], "n_p", "mean P-novelty")):
        for row in composer_rows:
            comp = corpus.composers[row.composer_id]
            x = comp.midpoint_year
            y = getattr(row, attr)
            ax.scatter([x], [y], s=24,
                       color=PERIOD_COLORS.get(comp.period.value, "tab:gray"))
            ax.annotate(comp.id, (x, y), fontsize=7,
                        textcoords="offset points", xytext=(3, 3))
        ax.set_xlabel("composer midpoint year")
        ax.set_ylabel(label)
    fig.suptitle("Composer novelty over time")
    return _save(fig, out_dir / "composer_novelty.png")


def influence_curve_lines(out_dir: Path, curves: list[InfluenceCurve]) -> Path:
    """Mean influence of each composer on works near each year."""
    fig, ax = plt.subplots(figsize=(7.0, 4.2), constrained_layout=True)
    for curve in sorted(curves, key=lambda c: c.composer_id):
        if not curve.points:
            continue
        years = [p.year for p in curve.points]
        etas = [p.mean_eta for p in curve.points]
        ax.plot(years, etas, linewidth=1.2, label=curve.composer_id)
    ax.set_xlabel("year")
    ax.set_ylabel("mean influence (log10 / codeword)")
    ax.set_title("Composer influence on nearby works")
    if any(c.points for c in curves):
        ax.legend(fontsize=7, ncols=2)
    return _save(fig, out_dir / "influence_curves.png")


def occurrence_ccdf(out_dir: Path, distribution: list[tuple[int, float]],
                    fit: PowerLawFit | None) -> Path:
    """Log-log CCDF of codeword occurrence counts with the fitted slope."""
    fig, ax = plt.subplots(figsize=(5.0, 4.2), constrained_layout=True)
    if distribution:
        counts = [c for c, _ in distribution]
        ccdf = [p for _, p in distribution]
        ax.loglog(counts, ccdf, marker=".", linestyle="none", color="tab:blue",
                  label="codeword counts")
        if fit is not None:
            anchor = next((p for c, p in distribution if c >= fit.xmin), None)
            if anchor is not None:
                x_hi = counts[-1]
                y_hi = anchor * (x_hi / fit.xmin) ** (-fit.cumulative_exponent)
                ax.loglog([fit.xmin, x_hi], [anchor, y_hi], color="tab:red",
                          linewidth=1.0,
                          label=f"slope -{fit.cumulative_exponent:.2f} (cumulative)")
        ax.legend(fontsize=8)
    ax.set_xlabel("occurrence count")
    ax.set_ylabel("P(count >= x)")
    ax.set_title("Codeword occurrence distribution")
    return _save(fig, out_dir / "occurrence_ccdf.png")


def transition_growth_line(out_dir: Path, growth: list[tuple[int, int]]) -> Path:
    """Cumulative number of unique transitions ever used."""
    fig, ax = plt.subplots(figsize=(5.0, 4.2), constrained_layout=True)
    if growth:
        ax.plot([y for y, _ in growth], [c for _, c in growth],
                marker=".", color="tab:blue")
    ax.set_xlabel("year")
    ax.set_ylabel("unique transitions used so far")
    ax.set_title("Growth of the transition vocabulary")
    return _save(fig, out_dir / "transition_growth.png")


def render_figures(out_dir: str | Path, corpus: Corpus,
                   work_rows: list[WorkNovelty],
                   composer_rows: list[ComposerNovelty],
                   curves: list[InfluenceCurve],
                   distribution: list[tuple[int, float]],
                   fit: PowerLawFit | None,
                   growth: list[tuple[int, int]]) -> list[Path]:
    """Render the full report figure set into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [
        novelty_scatter(out, corpus, work_rows),
        composer_novelty_panels(out, corpus, composer_rows),
        influence_curve_lines(out, curves),
        occurrence_ccdf(out, distribution, fit),
        transition_growth_line(out, growth),
    ]
    log.info("rendered %d figures into %s", len(paths), out)
    return paths
