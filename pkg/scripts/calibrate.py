"""Re-derive the calibrated default constants in liqlab.config.

Solves the market base levels so the low-bundle regime means land on the
design targets, then solves each archetype's execution-cost loadings exactly
against its four (state x regime) cell targets using the realized treatment
mixture of the default seed. Prints the constants to paste into config.py and
verifies the resulting cells.

Usage: python scripts/calibrate.py
"""

from __future__ import annotations

import numpy as np

from liqlab.calibration import ARCHETYPE_COST_TARGETS, REGIME_TARGETS
from liqlab.config import SimConfig
from liqlab.domain import regime_mask
from liqlab.simulator import heterogeneity_multipliers, simulate_panel


def regime_cells(panel):
    f = panel.frame
    hi = regime_mask(f)
    out = {}
    for name, mask in (("low", ~hi), ("high", hi)):
        out[name] = {
            "quoted_spread": f["quoted_spread"][mask].mean(),
            "effective_spread": f["effective_spread"][mask].mean(),
            "depth": f["depth"][mask].mean(),
            "price_impact": f["price_impact"][mask].mean(),
            "noarb_gap": np.abs(f["yes_price"] + f["no_price"] - 1.0)[mask].mean(),
        }
    return out


def solve_bases(cfg: SimConfig) -> dict[str, float]:
    panel = simulate_panel(cfg)
    cells = regime_cells(panel)
    low = REGIME_TARGETS["low"]
    new = {
        "quoted_spread": cfg.base.quoted_spread + (low["quoted_spread"] - cells["low"]["quoted_spread"]),
        "effective_spread": cfg.base.effective_spread
        + (low["effective_spread"] - cells["low"]["effective_spread"]),
        "log_depth": cfg.base.log_depth + np.log(low["depth"] / cells["low"]["depth"]),
        "price_impact": cfg.base.price_impact + (low["price_impact"] - cells["low"]["price_impact"]),
        "noarb_gap": cfg.base.noarb_gap + (low["noarb_gap"] - cells["low"]["noarb_gap"]),
    }
    return new


def archetype_cell_structure(cfg: SimConfig, panel):
    """Realized conditional means of the cost-model regressors per cell."""
    f = panel.frame
    hi = regime_mask(f)
    shock = f["shock"].to_numpy().astype(bool)
    het = heterogeneity_multipliers(cfg, panel.markets)["het_spread"]
    hrow = np.array([het[m] for m in f["market_id"]])
    e = cfg.effects.effective_spread
    mm = f["mm_active"].to_numpy().astype(float)
    lip = f["lip_active"].to_numpy().astype(float)
    api = f["api_intensity"].to_numpy()
    effmix = e.mm * hrow * mm + e.lip * lip + e.api * api
    score = mm + lip + api
    cells = {}
    for state, smask in (("calm", ~shock), ("shock", shock)):
        for regime, rmask in (("low", ~hi), ("high", hi)):
            mask = smask & rmask
            cells[(state, regime)] = (float(effmix[mask].mean()), float(score[mask].mean()))
    return cells


def solve_archetypes(cfg: SimConfig, panel) -> dict[str, tuple[float, float, float, float]]:
    cells = archetype_cell_structure(cfg, panel)
    order = [("calm", "low"), ("calm", "high"), ("shock", "low"), ("shock", "high")]
    A = []
    for state, regime in order:
        m, s = cells[(state, regime)]
        is_shock = 1.0 if state == "shock" else 0.0
        A.append([1.0, m, is_shock, is_shock * s])
    A = np.array(A)
    out = {}
    for name, targets in ARCHETYPE_COST_TARGETS.items():
        b = np.array([targets[f"{state}_{regime}"] for state, regime in order])
        base, rho, gamma, omega = np.linalg.solve(A, b)
        out[name] = (float(base), float(rho), float(gamma), float(omega))
    return out


def main() -> None:
    cfg = SimConfig()
    print("== pass 1: solve base levels against low-bundle targets ==")
    bases = solve_bases(cfg)
    for k, v in bases.items():
        print(f"    {k}: float = {v:.4f}")

    from dataclasses import replace

    cfg2 = replace(cfg, base=replace(cfg.base, **{k: round(v, 4) for k, v in bases.items()}))
    panel = simulate_panel(cfg2)
    cells = regime_cells(panel)
    print("\n== verification against regime targets ==")
    for regime in ("low", "high"):
        for k, target in REGIME_TARGETS[regime].items():
            got = cells[regime][k]
            print(f"  {regime:>4} {k:<18} {got:9.4f}  target {target:9.4f}  err {100*(got/target-1):+6.2f}%")

    print("\n== archetype cost loadings ==")
    sol = solve_archetypes(cfg2, panel)
    for name, (base, rho, gamma, omega) in sol.items():
        print(f"    {name}=ArchetypeCostParams({base:.4f}, {rho:.4f}, {gamma:.4f}, {omega:.4f}),")


if __name__ == "__main__":
    main()
