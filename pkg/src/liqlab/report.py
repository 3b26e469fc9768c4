"""Report generation: the five summary tables and five figures.

Tables are emitted as CSV (coefficient and standard error in separate
columns) plus an aligned-text rendering; figures are rendered with matplotlib
to SVG with a fixed hash salt and no embedded date so output trees are
byte-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np
import pandas as pd

matplotlib.use("svg")
from matplotlib.figure import Figure  # noqa: E402

from .domain import ARCHETYPE_NAMES, Panel
from .econometrics import (
    SUBGROUPS,
    EstimationError,
    EventStudySeries,
    event_study,
    interaction_estimate,
    subgroup_estimate,
    summarize_by_regime,
    twfe_estimate,
)
from .welfare import (
    archetype_cost_table,
    pass_through_frame,
    pass_through_table,
    welfare_decomposition,
)

#: Outcomes of the modular-coefficient table, in report order.
MODULAR_OUTCOMES = (
    "quoted_spread",
    "effective_spread",
    "log_depth",
    "price_impact",
    "brier",
    "noarb_gap",
)

SHOCK_OUTCOMES = ("adverse_selection", "realized_spread", "price_impact", "brier", "noarb_gap")

HET_OUTCOMES = ("quoted_spread", "price_impact", "brier", "noarb_gap")

#: The forecast-error outcome excludes the trailing-volatility control: that
#: control is a direct function of the observation noise that carries the
#: designed forecast effects and would absorb them.
def controls_for(outcome: str) -> tuple[str, ...]:
    return ("shock",) if outcome == "brier" else ("shock", "local_volatility")


def modular_table(panel: Panel) -> pd.DataFrame:
    """One row per outcome; cells are absent (NaN) when the panel has no
    usable treatment variation for the regression."""
    rows = []
    for outcome in MODULAR_OUTCOMES:
        row: dict[str, object] = {"outcome": outcome}
        try:
            r = twfe_estimate(panel, outcome, controls=controls_for(outcome))
        except EstimationError:
            r = None
        for ch in ("mm", "lip", "api"):
            row[f"{ch}_coef"] = r[ch] if r else float("nan")
            row[f"{ch}_se"] = r.se_of(ch) if r else float("nan")
            row[f"{ch}_stars"] = r.stars[r.names.index(ch)] if r else ""
        rows.append(row)
    return pd.DataFrame(rows)


def shock_table(panel: Panel) -> pd.DataFrame:
    rows = []
    for outcome in SHOCK_OUTCOMES:
        row: dict[str, object] = {"outcome": outcome}
        try:
            r = interaction_estimate(panel, outcome)
        except EstimationError:
            r = None
        for ch in ("shock", "mm_x_shock", "lip_x_shock", "api_x_shock"):
            row[f"{ch}_coef"] = r[ch] if r else float("nan")
            row[f"{ch}_se"] = r.se_of(ch) if r else float("nan")
            row[f"{ch}_stars"] = r.stars[r.names.index(ch)] if r else ""
        rows.append(row)
    return pd.DataFrame(rows)


def welfare_table(panel: Panel) -> pd.DataFrame:
    cells = archetype_cost_table(panel)
    by_key = {(c.archetype, c.shock_state, c.regime): c for c in cells}
    rows = []
    for name in ARCHETYPE_NAMES:
        row: dict[str, object] = {"archetype": name}
        for state in ("calm", "shock"):
            for regime in ("low", "high"):
                cell = by_key.get((name, state, regime))
                row[f"{state}_{regime}"] = cell.mean_cost if cell else float("nan")
                row[f"{state}_{regime}_n"] = cell.count if cell else 0
        rows.append(row)
    return pd.DataFrame(rows)


def heterogeneity_table(panel: Panel) -> pd.DataFrame:
    rows = []
    for attribute, band, label in SUBGROUPS:
        row: dict[str, object] = {"subgroup": label}
        for outcome in HET_OUTCOMES:
            try:
                r = subgroup_estimate(panel, outcome, attribute, band)
                row[f"{outcome}_coef"] = r["mm"]
                row[f"{outcome}_se"] = r.se_of("mm")
            except EstimationError:
                row[f"{outcome}_coef"] = float("nan")
                row[f"{outcome}_se"] = float("nan")
        rows.append(row)
    return pd.DataFrame(rows)


def event_study_frame(series: dict[str, EventStudySeries]) -> pd.DataFrame:
    columns = ["outcome", "k", "treated_mean", "control_mean", "diff", "se", "n_treated"]
    frames = []
    for outcome, s in series.items():
        frames.append(
            pd.DataFrame(
                {
                    "outcome": outcome,
                    "k": s.k,
                    "treated_mean": s.treated_mean,
                    "control_mean": s.control_mean,
                    "diff": s.diff,
                    "se": s.se,
                    "n_treated": s.n_treated,
                }
            )
        )
    if not frames:
        return pd.DataFrame(columns=columns)
    return pd.concat(frames, ignore_index=True)


def render_text_table(frame: pd.DataFrame, title: str) -> str:
    """Fixed-width rendering with 4-decimal floats."""
    show = frame.copy()
    for col in show.columns:
        if show[col].dtype.kind == "f":
            show[col] = show[col].map(lambda v: f"{v:.4f}" if pd.notna(v) else "")
    body = show.to_string(index=False)
    rule = "-" * max(len(line) for line in body.splitlines())
    return f"{title}\n{rule}\n{body}\n"


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------

_FIG_STYLE = {"figure.dpi": 96, "svg.hashsalt": "liqlab", "font.size": 9}


def _save(fig: Figure, path: Path) -> None:
    with matplotlib.rc_context(_FIG_STYLE):
        fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")


def _event_panel(ax, s: EventStudySeries | None, title: str) -> None:
    ax.set_xlabel("periods since activation")
    ax.set_title(title)
    if s is None:
        ax.text(0.5, 0.5, "no activations", ha="center", va="center", transform=ax.transAxes)
        return
    ok = ~np.isnan(s.diff)
    k, d, se = s.k[ok], s.diff[ok], s.se[ok]
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.axvline(-0.5, color="0.6", lw=0.8, ls="--")
    ax.fill_between(k, d - 2 * se, d + 2 * se, alpha=0.25, color="tab:blue", lw=0)
    ax.plot(k, d, marker="o", ms=3, color="tab:blue")


def fig_event_pair(
    series_a: EventStudySeries | None,
    title_a: str,
    series_b: EventStudySeries | None,
    title_b: str,
    path: Path,
) -> None:
    with matplotlib.rc_context(_FIG_STYLE):
        fig = Figure(figsize=(8.0, 3.2))
        ax1, ax2 = fig.subplots(1, 2)
        _event_panel(ax1, series_a, title_a)
        _event_panel(ax2, series_b, title_b)
        fig.suptitle("Treated vs not-yet-treated, normalized at k = -1", fontsize=9)
        fig.tight_layout()
        _save(fig, path)


def fig_calibration(panel: Panel, n_bins: int, path: Path) -> None:
    from .domain import regime_mask
    from .metrics import ece as compute_ece

    f = panel.frame
    hi = regime_mask(f)
    y = f["market_id"].map(panel.outcomes).to_numpy(dtype=float)
    p = f["observed_prob"].to_numpy()
    with matplotlib.rc_context(_FIG_STYLE):
        fig = Figure(figsize=(4.6, 4.2))
        ax = fig.subplots()
        ax.plot([0, 1], [0, 1], color="0.6", lw=0.8, ls="--")
        for label, mask, color in (("low bundle", ~hi, "tab:orange"), ("high bundle", hi, "tab:blue")):
            if mask.sum() == 0:
                continue
            rep = compute_ece(list(zip(p[mask], y[mask].astype(int))), n_bins)
            mids = np.asarray(rep.bin_mean_forecast)
            freq = np.asarray(rep.bin_frequency)
            ok = ~np.isnan(mids)
            ax.plot(mids[ok], freq[ok], marker="o", ms=4, label=f"{label} (ECE {rep.ece:.3f})", color=color)
        ax.set_xlabel("mean forecast probability")
        ax.set_ylabel("empirical resolution frequency")
        ax.set_title("Reliability by liquidity-bundle regime")
        ax.legend(loc="upper left", frameon=False)
        fig.tight_layout()
        _save(fig, path)


def fig_heterogeneity(table6: pd.DataFrame, path: Path) -> None:
    with matplotlib.rc_context(_FIG_STYLE):
        fig = Figure(figsize=(8.0, 3.6))
        ax1, ax2 = fig.subplots(1, 2)
        ypos = np.arange(len(table6))[::-1]
        for ax, outcome, title in (
            (ax1, "quoted_spread", "Quoted spread (cents)"),
            (ax2, "price_impact", "Price impact (bps)"),
        ):
            coefs = table6[f"{outcome}_coef"].to_numpy()
            ses = table6[f"{outcome}_se"].to_numpy()
            ax.barh(ypos, coefs, xerr=2 * ses, color="tab:blue", alpha=0.8, error_kw={"lw": 0.8})
            ax.set_yticks(ypos)
            ax.set_yticklabels(table6["subgroup"])
            ax.axvline(0, color="0.4", lw=0.8)
            ax.set_title(f"MM coefficient: {title}")
        fig.tight_layout()
        _save(fig, path)


def fig_welfare(table5: pd.DataFrame, pt_frame: pd.DataFrame, path: Path) -> None:
    cells = ("calm_low", "calm_high", "shock_low", "shock_high")
    with matplotlib.rc_context(_FIG_STYLE):
        fig = Figure(figsize=(8.6, 3.4))
        ax1, ax2 = fig.subplots(1, 2)
        xs = np.arange(len(table5))
        width = 0.2
        for i, cell in enumerate(cells):
            ax1.bar(xs + (i - 1.5) * width, table5[cell], width, label=cell.replace("_", "/"))
        ax1.set_xticks(xs)
        ax1.set_xticklabels([a.replace("_", "\n") for a in table5["archetype"]])
        ax1.set_ylabel("execution cost (cents)")
        ax1.set_title("Archetype execution cost")
        ax1.legend(frameon=False, fontsize=7)
        xs2 = np.arange(len(pt_frame))
        ax2.bar(xs2 - 0.2, pt_frame["pt_calm"], 0.4, label="calm")
        ax2.bar(xs2 + 0.2, pt_frame["pt_shock"], 0.4, label="shock")
        ax2.axhline(1.0, color="0.4", lw=0.8, ls="--")
        ax2.set_xticks(xs2)
        ax2.set_xticklabels([g.replace("_", "\n") for g in pt_frame["group"]])
        ax2.set_ylabel("pass-through")
        ax2.set_title("Quoted-spread pass-through by state")
        ax2.legend(frameon=False)
        fig.tight_layout()
        _save(fig, path)


# ---------------------------------------------------------------------------
# Bundle
# ---------------------------------------------------------------------------


@dataclass
class ReportBundle:
    """All report artifacts, materialized under one output directory."""

    paths: list[Path]


def _write_csv(frame: pd.DataFrame, path: Path) -> None:
    path.write_text(frame.to_csv(index=False, float_format="%.6f", lineterminator="\n"), encoding="utf-8")


def build_report(panel: Panel, out_dir: Path, n_bins: int = 8) -> ReportBundle:
    """Materialize every table and figure for one panel."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths: list[Path] = []

    def emit_csv(frame: pd.DataFrame, name: str, title: str | None = None) -> None:
        p = out_dir / name
        _write_csv(frame, p)
        paths.append(p)
        if title is not None:
            t = p.with_suffix(".txt")
            t.write_text(render_text_table(frame, title), encoding="utf-8")
            paths.append(t)

    summary = summarize_by_regime(panel, n_bins).reset_index(names="regime")
    emit_csv(summary, "table2_summary.csv", "Summary statistics by liquidity-bundle regime")

    table3 = modular_table(panel)
    emit_csv(table3, "table3_modular.csv", "Modular treatment coefficients (TWFE, clustered by market)")

    table4 = shock_table(panel)
    emit_csv(table4, "table4_shock.csv", "Shock-state interaction coefficients")

    table5 = welfare_table(panel)
    emit_csv(table5, "table5_welfare.csv", "Execution-cost proxy by trader archetype (cents)")

    table6 = heterogeneity_table(panel)
    emit_csv(table6, "table6_heterogeneity.csv", "MM coefficient by attribute subgroup (median splits)")

    try:
        pt = pass_through_frame(pass_through_table(panel))
    except EstimationError:
        pt = pass_through_frame([])
    emit_csv(pt, "passthrough_shockwedge.csv", "Pass-through and shock wedge by trader group")

    try:
        comp = welfare_decomposition(panel)
        comp_frame = pd.DataFrame(
            {
                "component": [c.name for c in comp],
                "cents_per_trade": [c.value_cents_per_trade for c in comp],
                "identification": [c.identification for c in comp],
            }
        )
    except EstimationError:
        comp_frame = pd.DataFrame(columns=["component", "cents_per_trade", "identification"])
    emit_csv(comp_frame, "welfare_components.csv", "Welfare accounting components (cents per trade)")

    series: dict[str, EventStudySeries | None] = {}
    for outcome in ("quoted_spread", "log_depth", "price_impact", "brier"):
        try:
            series[outcome] = event_study(panel, outcome)
        except EstimationError:
            series[outcome] = None
    emit_csv(
        event_study_frame({k: v for k, v in series.items() if v is not None}),
        "event_study_series.csv",
    )

    figures = out_dir / "fig_event_spread_depth.svg"
    fig_event_pair(series["quoted_spread"], "Quoted spread (cents)", series["log_depth"], "Log depth", figures)
    paths.append(figures)

    p = out_dir / "fig_event_impact_brier.svg"
    fig_event_pair(series["price_impact"], "Price impact (bps)", series["brier"], "Forecast squared error", p)
    paths.append(p)

    p = out_dir / "fig_calibration.svg"
    fig_calibration(panel, n_bins, p)
    paths.append(p)

    p = out_dir / "fig_heterogeneity.svg"
    fig_heterogeneity(table6, p)
    paths.append(p)

    p = out_dir / "fig_welfare.svg"
    fig_welfare(table5, pt, p)
    paths.append(p)

    return ReportBundle(paths=paths)
