import numpy as np
import pytest
from numpy.testing import assert_allclose

from liqlab.config import SimConfig
from liqlab.econometrics import (
    SUBGROUPS,
    DesignMatrix,
    EstimationError,
    cluster_robust_se,
    event_study,
    fit,
    interaction_estimate,
    local_volatility,
    ols,
    stars_for,
    subgroup_estimate,
    summarize_by_regime,
    twfe_estimate,
    within_transform,
)
from liqlab.simulator import simulate_panel

from .conftest import small_config, zero_noise_config


def random_design(rng, n_markets=6, n_periods=8, k=2) -> DesignMatrix:
    n = n_markets * n_periods
    clusters = np.repeat(np.arange(n_markets), n_periods)
    times = np.tile(np.arange(n_periods), n_markets)
    X = rng.standard_normal((n, k))
    y = rng.standard_normal(n)
    return DesignMatrix(y, X, [f"x{i}" for i in range(k)], clusters, times)


def dummy_ols_oracle(dm: DesignMatrix) -> np.ndarray:
    """Independent oracle: explicit market and time dummies, drop-first."""
    markets = np.unique(dm.clusters)
    times = np.unique(dm.times)
    blocks = [dm.X, np.ones((dm.n, 1))]
    for m in markets[1:]:
        blocks.append((dm.clusters == m).astype(float)[:, None])
    for t in times[1:]:
        blocks.append((dm.times == t).astype(float)[:, None])
    full = np.hstack(blocks)
    beta, *_ = np.linalg.lstsq(full, dm.y, rcond=None)
    return beta[: dm.k]


class TestWithinTransform:
    def test_fixed_point(self):
        rng = np.random.default_rng(0)
        dm = within_transform(random_design(rng))
        again = within_transform(dm)
        assert_allclose(again.y, dm.y, atol=1e-12)
        assert_allclose(again.X, dm.X, atol=1e-12)

    def test_market_constant_annihilated(self):
        rng = np.random.default_rng(1)
        dm = random_design(rng, k=1)
        dm.X[:, 0] = np.repeat(rng.standard_normal(6), 8)  # market-level column
        out = within_transform(dm)
        assert_allclose(out.X[:, 0], 0.0, atol=1e-12)

    def test_balanced_closed_form(self):
        # hand-computed double demeaning on a balanced 3x3 panel
        rng = np.random.default_rng(2)
        dm = random_design(rng, n_markets=3, n_periods=3, k=1)
        x = dm.X[:, 0].reshape(3, 3)
        expected = x - x.mean(axis=1, keepdims=True) - x.mean(axis=0, keepdims=True) + x.mean()
        out = within_transform(dm)
        assert_allclose(out.X[:, 0], expected.ravel(), atol=1e-12)

    def test_unbalanced_converges(self):
        rng = np.random.default_rng(3)
        dm = random_design(rng, n_markets=8, n_periods=10)
        keep = rng.random(dm.n) > 0.2
        sub = DesignMatrix(dm.y[keep], dm.X[keep], dm.names, dm.clusters[keep], dm.times[keep])
        out = within_transform(sub)
        for idx in (out.clusters, out.times):
            ids, inv = np.unique(idx, return_inverse=True)
            means = np.bincount(inv, weights=out.y) / np.bincount(inv)
            assert np.abs(means).max() < 1e-9


class TestOLS:
    def test_exact_slope(self):
        x = np.linspace(-1, 1, 50)
        dm = DesignMatrix(2.0 * x, x[:, None], ["x"], np.zeros(50), np.arange(50))
        beta, resid = ols(dm)
        assert beta[0] == pytest.approx(2.0, abs=1e-12)
        assert_allclose(resid, 0.0, atol=1e-12)

    def test_orthogonal_outcome(self):
        x = np.concatenate([np.ones(25), -np.ones(25)])
        y = np.concatenate([np.ones(25), np.ones(25)]) - 1.0  # zeros
        dm = DesignMatrix(y, x[:, None], ["x"], np.zeros(50), np.arange(50))
        beta, _ = ols(dm)
        assert beta[0] == pytest.approx(0.0, abs=1e-12)

    def test_matches_normal_equations(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((50, 3))
        y = rng.standard_normal(50)
        dm = DesignMatrix(y, X, ["a", "b", "c"], np.zeros(50), np.arange(50))
        beta, _ = ols(dm)
        oracle = np.linalg.solve(X.T @ X, X.T @ y)
        assert_allclose(beta, oracle, atol=1e-8)

    def test_rank_deficiency_names_columns(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal(30)
        X = np.column_stack([x, 2.0 * x])
        dm = DesignMatrix(rng.standard_normal(30), X, ["a", "a_twice"], np.zeros(30), np.arange(30))
        with pytest.raises(EstimationError, match="a_twice"):
            ols(dm)


class TestClusterRobustSE:
    def test_singleton_clusters_match_hc1(self):
        rng = np.random.default_rng(6)
        n, k = 4000, 2
        X = rng.standard_normal((n, k))
        beta_true = np.array([1.0, -0.5])
        y = X @ beta_true + rng.standard_normal(n)
        dm = DesignMatrix(y, X, ["a", "b"], np.arange(n), np.arange(n))
        beta, resid = ols(dm)
        se = cluster_robust_se(dm, resid)
        # HC1 oracle
        bread = np.linalg.inv(X.T @ X)
        meat = (X * resid[:, None]).T @ (X * resid[:, None])
        hc1 = np.sqrt(np.diag(bread @ meat @ bread) * n / (n - k))
        assert_allclose(se, hc1, rtol=0.05)

    def test_within_cluster_correlation_inflates(self):
        # Moulton setting: regressor and errors both correlated within cluster
        rng = np.random.default_rng(7)
        n_clusters, per = 60, 20
        n = n_clusters * per
        clusters = np.repeat(np.arange(n_clusters), per)
        x = np.repeat(rng.standard_normal(n_clusters), per) + 0.1 * rng.standard_normal(n)
        e = np.repeat(rng.standard_normal(n_clusters), per)
        y = 0.5 * x + e
        dm = DesignMatrix(y, x[:, None], ["x"], clusters, np.tile(np.arange(per), n_clusters))
        beta, resid = ols(dm)
        clustered = cluster_robust_se(dm, resid)
        iid = np.sqrt(np.var(resid, ddof=1) * np.diag(np.linalg.inv(dm.X.T @ dm.X)))
        assert clustered[0] > 2.0 * iid[0]

    def test_homogeneous_in_residual_scale(self):
        rng = np.random.default_rng(8)
        dm = random_design(rng)
        _, resid = ols(dm)
        se1 = cluster_robust_se(dm, resid)
        se2 = cluster_robust_se(dm, 2.0 * resid)
        assert_allclose(se2, 2.0 * se1, rtol=1e-12)

    def test_single_cluster_rejected(self):
        rng = np.random.default_rng(9)
        dm = random_design(rng, n_markets=1, n_periods=30)
        _, resid = ols(dm)
        with pytest.raises(EstimationError, match="clusters"):
            cluster_robust_se(dm, resid)


class TestTwfeEquivalence:
    def test_matches_dummy_ols(self):
        rng = np.random.default_rng(10)
        for _ in range(10):
            m = int(rng.integers(3, 21))
            t = int(rng.integers(3, 21))
            k = int(rng.integers(1, 4))
            dm = random_design(rng, n_markets=m, n_periods=t, k=k)
            beta, _ = ols(within_transform(dm))
            assert_allclose(beta, dummy_ols_oracle(dm), atol=1e-8)

    def test_affine_invariance(self):
        rng = np.random.default_rng(11)
        dm = random_design(rng, n_markets=10, n_periods=12)
        r1 = fit(dm)
        scaled = DesignMatrix(3.5 * dm.y, dm.X, dm.names, dm.clusters, dm.times)
        r2 = fit(scaled)
        assert_allclose(r2.coef, 3.5 * r1.coef, rtol=1e-10)
        assert_allclose(r2.se, 3.5 * r1.se, rtol=1e-10)
        assert_allclose(r2.tstat, r1.tstat, rtol=1e-10)


def test_stars_thresholds():
    assert stars_for(1.0) == ""
    assert stars_for(1.7) == "*"
    assert stars_for(2.0) == "**"
    assert stars_for(-3.0) == "***"


def test_local_volatility_shape(default_panel):
    vol = local_volatility(default_panel.frame)
    assert len(vol) == len(default_panel.frame)
    assert (vol >= 0).all()
    first_rows = default_panel.frame["t"].to_numpy() == 0
    assert_allclose(vol[first_rows], 0.0)


class TestDesignedRecovery:
    def test_zero_noise_interactions_exact(self, zero_noise_panel):
        cfg = zero_noise_config()
        eff = cfg.effects
        cases = {
            "quoted_spread": (eff.quoted_spread, eff.quoted_spread_shock),
            "adverse_selection": (eff.adverse_selection, eff.adverse_selection_shock),
            "realized_spread": (eff.realized_spread, eff.realized_spread_shock),
            "price_impact": (eff.price_impact, eff.price_impact_shock),
            "log_depth": (eff.log_depth, eff.log_depth_shock),
            "noarb_gap": (eff.noarb_gap, eff.noarb_gap_shock),
        }
        for outcome, (mains, resp) in cases.items():
            r = interaction_estimate(zero_noise_panel, outcome)
            assert r["mm"] == pytest.approx(mains.mm, abs=1e-6)
            assert r["lip"] == pytest.approx(mains.lip, abs=1e-6)
            assert r["api"] == pytest.approx(mains.api, abs=1e-6)
            assert r["shock"] == pytest.approx(resp.main, abs=1e-6)
            assert r["mm_x_shock"] == pytest.approx(resp.mm, abs=1e-6)
            assert r["lip_x_shock"] == pytest.approx(resp.lip, abs=1e-6)
            assert r["api_x_shock"] == pytest.approx(resp.api, abs=1e-6)

    def test_default_panel_headline_effects(self, default_panel):
        r = twfe_estimate(default_panel, "quoted_spread")
        assert r["mm"] == pytest.approx(-0.734, abs=3 * r.se_of("mm"))
        r = twfe_estimate(default_panel, "log_depth")
        assert r["mm"] == pytest.approx(0.192, abs=3 * r.se_of("mm"))


class TestSubgroups:
    def test_full_sample_between_subgroups(self):
        # multiplicative-style heterogeneity, zero noise: the pooled effect
        # lies between complementary subgroup effects
        panel = simulate_panel(zero_noise_config(heterogeneity_scale=1.0))
        for attribute in ("info_density", "baseline_vol"):
            hi = subgroup_estimate(panel, "quoted_spread", attribute, "high")["mm"]
            lo = subgroup_estimate(panel, "quoted_spread", attribute, "low")["mm"]
            full = twfe_estimate(panel, "quoted_spread")["mm"]
            assert min(hi, lo) - 1e-9 <= full <= max(hi, lo) + 1e-9

    def test_bad_band_rejected(self, default_panel):
        with pytest.raises(EstimationError):
            subgroup_estimate(default_panel, "quoted_spread", "info_density", "middle")

    def test_degenerate_subgroup_rejected(self):
        panel = simulate_panel(small_config(never_treated_share=1.0))
        with pytest.raises(EstimationError, match="no treatment variation"):
            subgroup_estimate(panel, "quoted_spread", "info_density", "high")

    def test_eight_subgroups_defined(self):
        assert len(SUBGROUPS) == 8


class TestRegimeSummary:
    def test_no_treatment_leaves_high_absent(self):
        panel = simulate_panel(small_config(never_treated_share=1.0))
        table = summarize_by_regime(panel)
        assert table.loc["high", "n_rows"] == 0
        assert np.isnan(table.loc["high", "quoted_spread"])
        assert np.isnan(table.loc["pct_change", "quoted_spread"])

    def test_columns(self, default_panel):
        table = summarize_by_regime(default_panel)
        assert list(table.index) == ["low", "high", "pct_change"]
        for col in ("quoted_spread", "effective_spread", "depth", "price_impact", "brier", "noarb_gap", "ece"):
            assert col in table.columns


class TestEventStudy:
    def test_zero_noise_step_function(self):
        # shocks off as well: the only designed variation is the MM level step
        cfg = zero_noise_config(
            channel_prob_lip=0.0,
            channel_prob_api=0.0,
            channel_prob_mm=1.0,
            jump_intensity=0.0,
            base_tilt_scale=0.0,
        )
        panel = simulate_panel(cfg)
        s = event_study(panel, "quoted_spread", k_pre=5, k_post=5)
        for i, k in enumerate(s.k):
            if np.isnan(s.diff[i]):
                continue
            expected = -0.734 if k >= 0 else 0.0
            assert s.diff[i] == pytest.approx(expected, abs=1e-9), f"k={k}"

    def test_normalized_at_minus_one(self, default_panel):
        s = event_study(default_panel, "quoted_spread")
        diff, se = s.at(-1)
        assert diff == 0.0 and se == 0.0

    def test_requires_treated_markets(self):
        panel = simulate_panel(small_config(never_treated_share=1.0))
        with pytest.raises(EstimationError, match="activates"):
            event_study(panel, "quoted_spread")
