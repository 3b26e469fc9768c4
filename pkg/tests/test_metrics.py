import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from liqlab.metrics import (
    CalibrationReport,
    TradeObs,
    adverse_selection,
    brier,
    complementary_gap,
    ece,
    effective_spread,
    price_impact,
    realized_spread,
    semantic_dispersion,
    simplex_gap,
)

prices = st.floats(min_value=0.02, max_value=0.98)
signs = st.sampled_from([1, -1])


def test_effective_spread_examples():
    assert effective_spread(TradeObs(0.52, 0.50, 0.50, 1)) == pytest.approx(4.0)
    assert effective_spread(TradeObs(0.48, 0.50, 0.50, -1)) == pytest.approx(4.0)
    assert effective_spread(TradeObs(0.3, 0.3, 0.4, 1)) == 0.0


def test_realized_spread_examples():
    # future midpoint equal to the contemporaneous one reduces to effective spread
    obs = TradeObs(0.52, 0.50, 0.50, 1)
    assert realized_spread(obs) == effective_spread(obs)
    assert realized_spread(TradeObs(0.52, 0.50, 0.53, 1)) == pytest.approx(-2.0)
    # buy then rising midpoint: maker revenue below the effective spread
    obs = TradeObs(0.52, 0.50, 0.55, 1)
    assert realized_spread(obs) < effective_spread(obs)


def test_adverse_selection_examples():
    assert adverse_selection(4.0, 4.0) == 0.0
    assert adverse_selection(4.0, -2.0) == 6.0


@given(prices, prices, prices, signs)
def test_adverse_selection_algebraic_oracle(p, m, m_future, d):
    # independent oracle: eff - realized telescopes to 200 * d * (M' - M)
    obs = TradeObs(p, m, m_future, d)
    got = adverse_selection(effective_spread(obs), realized_spread(obs))
    assert got == pytest.approx(200.0 * d * (m_future - m), abs=1e-12)


def test_adverse_selection_oracle_bulk():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        p, m, mf = rng.uniform(0.02, 0.98, size=3)
        d = 1 if rng.random() < 0.5 else -1
        obs = TradeObs(p, m, mf, d)
        got = adverse_selection(effective_spread(obs), realized_spread(obs))
        assert abs(got - 200.0 * d * (mf - m)) < 1e-12


def test_price_impact_examples():
    assert price_impact(0.5, 0.5, 1) == 0.0
    assert price_impact(0.50, 0.505, 1) == pytest.approx(100.0)
    assert price_impact(0.50, 0.495, -1) == pytest.approx(100.0)
    with pytest.raises(ValueError):
        price_impact(0.5, 0.5, 2)


def test_brier_examples():
    assert brier(1.0, 1) == 0.0
    assert brier(0.5, 0) == 0.25
    assert brier(0.5, 1) == 0.25
    with pytest.raises(ValueError):
        brier(1.2, 1)


@given(st.floats(min_value=0.0, max_value=1.0), st.sampled_from([0, 1]))
def test_brier_bounded(p, y):
    assert 0.0 <= brier(p, y) <= 1.0


def test_ece_perfectly_calibrated():
    # bin centers as forecasts, outcome frequencies exactly matching
    pairs = []
    for center, freq in ((0.25, 0.25), (0.75, 0.75)):
        n = 200
        ones = int(round(freq * n))
        pairs += [(center, 1)] * ones + [(center, 0)] * (n - ones)
    report = ece(pairs, n_bins=4)
    assert report.ece == pytest.approx(0.0, abs=1e-12)
    assert sum(report.bin_count) == len(pairs)


def test_ece_maximally_wrong():
    report = ece([(1.0, 0)] * 50)
    assert report.ece == pytest.approx(1.0)


def test_ece_errors():
    with pytest.raises(ValueError):
        ece([])
    with pytest.raises(ValueError):
        ece([(0.5, 1)], n_bins=1)


def test_ece_report_structure():
    rng = np.random.default_rng(1)
    pairs = [(float(p), int(rng.random() < p)) for p in rng.uniform(0, 1, 500)]
    report = ece(pairs)
    assert isinstance(report, CalibrationReport)
    assert report.n == 500
    assert 0.0 <= report.ece <= 1.0
    assert 0.0 <= report.mean_brier <= 1.0
    assert len(report.bin_count) == 10
    # p = 1.0 lands in the last bin rather than out of range
    top = ece([(1.0, 1)] * 10, n_bins=5)
    assert top.bin_count[-1] == 10


def test_complementary_gap():
    assert complementary_gap(0.6, 0.4) == pytest.approx(0.0)
    assert complementary_gap(0.62, 0.41) == pytest.approx(0.03)
    # relabeling YES and NO leaves the gap unchanged
    assert complementary_gap(0.62, 0.41) == complementary_gap(0.41, 0.62)


def test_simplex_gap():
    assert simplex_gap([0.2, 0.3, 0.5]) == pytest.approx(0.0)
    assert simplex_gap([0.25, 0.35, 0.5]) == pytest.approx(0.10)
    with pytest.raises(ValueError):
        simplex_gap([0.5])


@given(st.lists(prices, min_size=2, max_size=8), st.randoms())
def test_simplex_gap_permutation_invariant(ps, rnd):
    shuffled = list(ps)
    rnd.shuffle(shuffled)
    assert simplex_gap(shuffled) == pytest.approx(simplex_gap(ps))


def test_semantic_dispersion():
    assert semantic_dispersion([0.4, 0.4, 0.4]) == 0.0
    assert semantic_dispersion([0.40, 0.43]) == pytest.approx(0.03)
    # a price inside the range leaves the dispersion unchanged
    assert semantic_dispersion([0.40, 0.43, 0.41]) == pytest.approx(0.03)
    with pytest.raises(ValueError):
        semantic_dispersion([0.4])


def test_trade_obs_validation():
    with pytest.raises(ValueError):
        TradeObs(0.0, 0.5, 0.5, 1)
    with pytest.raises(ValueError):
        TradeObs(0.5, 0.5, 0.5, 0)
