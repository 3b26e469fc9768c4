"""Welfare incidence: archetype execution-cost cells, pass-through of
quoted-spread improvements, the shock wedge, and the four-component welfare
accounting diagnostic.

Pass-through for a trader group is the ratio of its effective-cost
improvement to the quoted-spread improvement; both are regime effects
estimated with market and time effects absorbed, separately on calm and shock
subsamples. The quoted-spread denominator is shared across groups within a
state. Informed-rent and risk-sharing components cannot be signed from public
order data, so they are reported as simulator-ground-truth diagnostics with
an explicit identification label.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .domain import ARCHETYPE_NAMES, Panel, regime_mask
from .econometrics import DesignMatrix, EstimationError, fit

#: Eq-undefined guard: quoted improvement smaller than this has no pass-through.
PASS_THROUGH_EPS = 1e-9

NOT_IDENTIFIED = "NOT-IDENTIFIED-FROM-PUBLIC-DATA"
IDENTIFIED = "IDENTIFIED-FROM-PUBLIC-DATA"

_COST_COLUMN = {
    "slow_taker": "cost_slow_taker",
    "fast_taker": "cost_fast_taker",
    "hedged_trader": "cost_hedged_trader",
    "informed_trader": "cost_informed_trader",
}


class UndefinedPassThroughError(ValueError):
    """Quoted-spread improvement is (numerically) zero."""


@dataclass(frozen=True)
class WelfareCell:
    archetype: str
    shock_state: str  # calm | shock
    regime: str  # low | high
    mean_cost: float
    count: int


@dataclass(frozen=True)
class GroupDeltas:
    """Regime effects on a group's execution cost and on the quoted spread."""

    group: str
    delta_cost_calm: float
    delta_cost_shock: float
    delta_quoted_calm: float
    delta_quoted_shock: float


@dataclass(frozen=True)
class PassThroughResult:
    group: str
    delta_cost_calm: float
    delta_cost_shock: float
    delta_quoted_calm: float
    delta_quoted_shock: float
    pt: float
    pt_calm: float
    pt_shock: float
    shock_wedge: float


@dataclass(frozen=True)
class WelfareComponent:
    name: str
    value_cents_per_trade: float
    identification: str


def pass_through(delta_eff_g: float, delta_quoted: float) -> float:
    """Share of the quoted-spread improvement converted into group gains.

    Improvements are negative spread changes; the ratio is positive when both
    improve and 1 means full conversion.
    """
    if abs(delta_quoted) < PASS_THROUGH_EPS:
        raise UndefinedPassThroughError(
            f"quoted-spread change {delta_quoted} is below {PASS_THROUGH_EPS}; pass-through undefined"
        )
    return (-delta_eff_g) / (-delta_quoted)


def shock_wedge(pt_shock: float, pt_calm: float) -> float:
    """Pass-through lost (or gained) exactly when information arrives."""
    return pt_shock - pt_calm


def archetype_cost_table(panel: Panel) -> list[WelfareCell]:
    """Mean execution cost per archetype by (shock state x regime).

    Empty cells are reported absent rather than raising.
    """
    f = panel.frame
    hi = regime_mask(f)
    shock = f["shock"].to_numpy().astype(bool)
    cells: list[WelfareCell] = []
    for name in ARCHETYPE_NAMES:
        costs = f[_COST_COLUMN[name]].to_numpy()
        for state, smask in (("calm", ~shock), ("shock", shock)):
            for regime, rmask in (("low", ~hi), ("high", hi)):
                mask = smask & rmask
                if mask.sum() == 0:
                    continue
                cells.append(
                    WelfareCell(name, state, regime, float(costs[mask].mean()), int(mask.sum()))
                )
    return cells


def _regime_effect(panel: Panel, values: np.ndarray, row_mask: np.ndarray) -> float:
    """Effect of the high-bundle regime with market/time effects absorbed."""
    f = panel.frame
    hi = regime_mask(f).astype(float)
    dm = DesignMatrix(
        values[row_mask],
        hi[row_mask][:, None],
        ["high_bundle"],
        f["market_id"].to_numpy()[row_mask],
        f["t"].to_numpy()[row_mask],
    )
    return float(fit(dm).coef[0])


def estimate_group_deltas(panel: Panel, group: str) -> GroupDeltas:
    """Regime effects on group cost and quoted spread, by shock state.

    The quoted-spread delta is computed once per state from the same rows, so
    it is identical across groups by construction.
    """
    if group not in _COST_COLUMN:
        raise KeyError(f"unknown trader group {group!r}")
    f = panel.frame
    hi = regime_mask(f)
    shock = f["shock"].to_numpy().astype(bool)
    cost = f[_COST_COLUMN[group]].to_numpy(dtype=float)
    quoted = f["quoted_spread"].to_numpy(dtype=float)

    out = {}
    for state, smask in (("calm", ~shock), ("shock", shock)):
        for regime, rmask in (("low", ~hi), ("high", hi)):
            if not (smask & rmask).any():
                raise EstimationError(f"no rows in cell ({state}, {regime})")
        out[f"delta_cost_{state}"] = _regime_effect(panel, cost, smask)
        out[f"delta_quoted_{state}"] = _regime_effect(panel, quoted, smask)
    return GroupDeltas(group=group, **out)


def pass_through_table(panel: Panel) -> list[PassThroughResult]:
    """Pass-through and shock wedge for every archetype."""
    f = panel.frame
    quoted = f["quoted_spread"].to_numpy(dtype=float)
    all_rows = np.ones(len(f), dtype=bool)
    results = []
    for name in ARCHETYPE_NAMES:
        d = estimate_group_deltas(panel, name)
        pt_calm = pass_through(d.delta_cost_calm, d.delta_quoted_calm)
        pt_shock = pass_through(d.delta_cost_shock, d.delta_quoted_shock)
        cost = f[_COST_COLUMN[name]].to_numpy(dtype=float)
        pt_all = pass_through(
            _regime_effect(panel, cost, all_rows), _regime_effect(panel, quoted, all_rows)
        )
        results.append(
            PassThroughResult(
                group=name,
                delta_cost_calm=d.delta_cost_calm,
                delta_cost_shock=d.delta_cost_shock,
                delta_quoted_calm=d.delta_quoted_calm,
                delta_quoted_shock=d.delta_quoted_shock,
                pt=pt_all,
                pt_calm=pt_calm,
                pt_shock=pt_shock,
                shock_wedge=shock_wedge(pt_shock, pt_calm),
            )
        )
    return results


def welfare_decomposition(panel: Panel) -> list[WelfareComponent]:
    """Four-component accounting of the regime change, cents per trade.

    Taker surplus comes from archetype execution costs and maker profits from
    the realized-spread revenue proxy; both are estimable from public data.
    Informed rents and inventory risk sharing are reported as ground-truth
    diagnostics of the designed environment and labeled accordingly.
    """
    f = panel.frame
    all_rows = np.ones(len(f), dtype=bool)
    cost_deltas = {
        name: _regime_effect(panel, f[_COST_COLUMN[name]].to_numpy(dtype=float), all_rows)
        for name in ARCHETYPE_NAMES
    }
    taker_gain = -float(np.mean(list(cost_deltas.values())))
    realized_delta = _regime_effect(panel, f["realized_spread"].to_numpy(dtype=float), all_rows)
    # ground-truth diagnostics: each group's gain in excess of the average taker
    informed_rent = (-cost_deltas["informed_trader"]) - taker_gain
    risk_sharing = (-cost_deltas["hedged_trader"]) - taker_gain
    return [
        WelfareComponent("taker_execution_gain", taker_gain, IDENTIFIED),
        WelfareComponent("maker_revenue_change", realized_delta, IDENTIFIED),
        WelfareComponent("informed_rent_shift", informed_rent, NOT_IDENTIFIED),
        WelfareComponent("risk_sharing_gain", risk_sharing, NOT_IDENTIFIED),
    ]


def pass_through_frame(results: list[PassThroughResult]) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "group": [r.group for r in results],
            "delta_cost_calm": [r.delta_cost_calm for r in results],
            "delta_cost_shock": [r.delta_cost_shock for r in results],
            "delta_quoted_calm": [r.delta_quoted_calm for r in results],
            "delta_quoted_shock": [r.delta_quoted_shock for r in results],
            "pt": [r.pt for r in results],
            "pt_calm": [r.pt_calm for r in results],
            "pt_shock": [r.pt_shock for r in results],
            "shock_wedge": [r.shock_wedge for r in results],
        }
    )
