import itertools

import numpy as np
import pytest

from liqlab.config import SimConfig
from liqlab.domain import (
    ARCHETYPES,
    MarketAttributes,
    MarketSpec,
    Panel,
    PanelRow,
    Regime,
    TreatmentSchedule,
    classify_regime,
    panel_csv_text,
    read_panel_csv,
    validate_panel,
    write_panel_csv,
)
from liqlab.simulator import simulate_panel

from .conftest import small_config


def make_row(**overrides) -> PanelRow:
    base = dict(
        market_id=0,
        t=0,
        latent_logodds=0.0,
        true_prob=0.5,
        observed_prob=0.5,
        shock=False,
        mm_active=False,
        lip_active=False,
        api_intensity=0.0,
        professional_share=0.1,
        quoted_spread=7.0,
        effective_spread=6.9,
        realized_spread=4.9,
        adverse_selection=2.0,
        depth=150.0,
        price_impact=13.0,
        yes_price=0.5,
        no_price=0.52,
        family_id=None,
        archetype_costs=(6.9, 6.8, 6.3, 6.7),
    )
    base.update(overrides)
    return PanelRow(**base)


def regime_oracle(mm: bool, lip: bool, api: float) -> Regime:
    # brute-force channel count, written independently of the implementation
    active = 0
    if mm:
        active += 1
    if lip:
        active += 1
    if api >= 0.5:
        active += 1
    return Regime.HIGH_BUNDLE if active >= 2 else Regime.LOW_BUNDLE


def test_classify_regime_examples():
    assert classify_regime(make_row(mm_active=True, lip_active=True)) is Regime.HIGH_BUNDLE
    assert classify_regime(make_row()) is Regime.LOW_BUNDLE
    assert classify_regime(make_row(mm_active=True, api_intensity=0.49)) is Regime.LOW_BUNDLE


def test_classify_regime_truth_table():
    for mm, lip, api in itertools.product([False, True], [False, True], [0.0, 0.49, 0.5, 1.0]):
        row = make_row(mm_active=mm, lip_active=lip, api_intensity=api)
        assert classify_regime(row) is regime_oracle(mm, lip, api), (mm, lip, api)


def test_classify_regime_monotone():
    # activating one more channel never moves the row high -> low
    for mm, lip, api in itertools.product([False, True], [False, True], [0.0, 0.49, 0.5, 1.0]):
        row = make_row(mm_active=mm, lip_active=lip, api_intensity=api)
        before = classify_regime(row)
        ups = [
            make_row(mm_active=True, lip_active=lip, api_intensity=api),
            make_row(mm_active=mm, lip_active=True, api_intensity=api),
            make_row(mm_active=mm, lip_active=lip, api_intensity=1.0),
        ]
        for up in ups:
            if before is Regime.HIGH_BUNDLE:
                assert classify_regime(up) is Regime.HIGH_BUNDLE


def test_attribute_validation():
    good = dict(
        category="Macro",
        info_density=0.5,
        hedgeability=0.5,
        resolution_clarity=0.5,
        baseline_vol=0.08,
        anchor_logodds=0.0,
        mean_reversion=0.1,
        jump_intensity=0.05,
    )
    MarketAttributes(**good)
    with pytest.raises(ValueError):
        MarketAttributes(**{**good, "mean_reversion": 1.0})
    with pytest.raises(ValueError):
        MarketAttributes(**{**good, "info_density": 1.2})
    with pytest.raises(ValueError):
        MarketAttributes(**{**good, "baseline_vol": 0.0})
    with pytest.raises(ValueError):
        MarketAttributes(**{**good, "category": "Weather"})


def test_schedule():
    sched = TreatmentSchedule(mm_activation=5, api_adoption=10, api_ramp_length=4)
    assert not sched.never_treated
    assert not sched.mm_active(4) and sched.mm_active(5)
    assert sched.api_intensity(9) == 0.0
    assert sched.api_intensity(10) == pytest.approx(0.25)
    assert sched.api_intensity(13) == 1.0
    assert sched.api_intensity(50) == 1.0
    assert TreatmentSchedule().never_treated
    with pytest.raises(ValueError):
        TreatmentSchedule(api_ramp_length=0)
    with pytest.raises(ValueError):
        TreatmentSchedule(mm_activation=200).check_window(180)


def test_archetype_latency_ordering():
    lat = [a.latency_periods for a in ARCHETYPES]
    assert lat[0] > lat[1] >= lat[2] >= lat[3]


def _tiny_panel() -> Panel:
    attrs = MarketAttributes("Sports", 0.5, 0.5, 0.5, 0.08, 0.0, 0.1, 0.05)
    markets = [
        MarketSpec(0, attrs, TreatmentSchedule(), 1),
        MarketSpec(1, attrs, TreatmentSchedule(mm_activation=2), 0),
    ]
    rows = []
    for mid, sched in ((0, markets[0].schedule), (1, markets[1].schedule)):
        for t in range(3):
            rows.append(make_row(market_id=mid, t=t, mm_active=sched.mm_active(t)))
    return Panel.from_rows(rows, markets, seed=7)


def test_validate_panel_clean():
    assert validate_panel(_tiny_panel()) == []


def test_validate_panel_spread_identity():
    panel = _tiny_panel()
    panel.frame.loc[2, "adverse_selection"] = 3.0  # breaks eff - realized
    violations = validate_panel(panel)
    assert len(violations) == 1
    v = violations[0]
    assert v.market_id == 0 and v.t == 2
    assert "spread identity" in v.message


def test_validate_panel_missing_row():
    panel = _tiny_panel()
    panel.frame = panel.frame.iloc[:-1]
    violations = validate_panel(panel)
    assert any("non-rectangular" in v.message for v in violations)


def test_validate_panel_schedule_consistency():
    panel = _tiny_panel()
    panel.frame.loc[0, "mm_active"] = True
    assert any("treatment schedule" in v.message for v in validate_panel(panel))


def test_validate_panel_bounds():
    panel = _tiny_panel()
    panel.frame.loc[1, "quoted_spread"] = 0.05
    panel.frame.loc[4, "observed_prob"] = 0.999
    messages = [v.message for v in validate_panel(panel)]
    assert any("tick" in m for m in messages)
    assert any("observed_prob" in m for m in messages)


def test_panel_rows_round_trip():
    panel = _tiny_panel()
    rows = list(panel.rows())
    assert len(rows) == 6
    assert rows[0].archetype_costs == (6.9, 6.8, 6.3, 6.7)
    rebuilt = Panel.from_rows(rows, panel.markets, panel.seed)
    assert rebuilt.frame.equals(panel.frame)


def test_csv_round_trip_bytes(tmp_path):
    panel = simulate_panel(small_config())
    p1 = tmp_path / "panel.csv"
    m1 = tmp_path / "markets.csv"
    write_panel_csv(panel, p1, m1)
    loaded = read_panel_csv(p1, m1)
    assert validate_panel(loaded) == []
    # write -> read -> write is byte-identical
    assert panel_csv_text(loaded).encode() == p1.read_bytes()
    p2 = tmp_path / "again.csv"
    write_panel_csv(loaded, p2)
    assert p2.read_bytes() == p1.read_bytes()


def test_csv_loaded_identity_exact(tmp_path):
    panel = simulate_panel(small_config())
    p1 = tmp_path / "panel.csv"
    m1 = tmp_path / "markets.csv"
    write_panel_csv(panel, p1, m1)
    loaded = read_panel_csv(p1, m1)
    f = loaded.frame
    resid = f["adverse_selection"] - (f["effective_spread"] - f["realized_spread"])
    assert np.abs(resid.to_numpy()).max() < 1e-9
