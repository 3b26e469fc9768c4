"""Two-way fixed-effects estimation with cluster-robust inference.

Market and time effects are absorbed by alternating demeaning rather than
explicit dummies (a 57,600 x 500 dummy system is avoidable; balanced panels
converge in one sweep). Standard errors use the Liang-Zeger sandwich
clustered by market with the usual small-sample factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .domain import Panel, Regime, regime_mask
from .metrics import ece as compute_ece

#: Trailing window (periods) for the local-volatility control.
VOLATILITY_WINDOW = 10

#: Two-sided normal significance thresholds for one, two, and three stars.
STAR_THRESHOLDS = (1.645, 1.960, 2.576)

CHANNEL_COLUMNS = ("mm", "lip", "api")
DEFAULT_CONTROLS = ("shock", "local_volatility")

class EstimationError(ValueError):
    """Degenerate design: rank deficiency, missing cells, or non-convergence."""


@dataclass
class DesignMatrix:
    """Outcome vector, named regressors, and cluster/time indices."""

    y: np.ndarray
    X: np.ndarray
    names: list[str]
    clusters: np.ndarray
    times: np.ndarray

    def __post_init__(self) -> None:
        self.y = np.asarray(self.y, dtype=float)
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2 or len(self.y) != self.X.shape[0]:
            raise EstimationError("y and X are not conformable")
        if len(self.names) != self.X.shape[1]:
            raise EstimationError("column names do not match X")
        if len(set(self.names)) != len(self.names):
            raise EstimationError("column names must be unique")
        if np.isnan(self.y).any() or np.isnan(self.X).any():
            raise EstimationError("design contains missing values")

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def k(self) -> int:
        return self.X.shape[1]


@dataclass
class RegressionResult:
    names: list[str]
    coef: np.ndarray
    se: np.ndarray
    tstat: np.ndarray
    pvalue: np.ndarray
    stars: list[str]
    n_obs: int
    n_params: int
    n_clusters: int
    residuals: np.ndarray = field(repr=False)

    def __getitem__(self, name: str) -> float:
        return float(self.coef[self.names.index(name)])

    def se_of(self, name: str) -> float:
        return float(self.se[self.names.index(name)])

    def summary(self) -> str:
        lines = [f"{'term':<16}{'coef':>12}{'se':>12}{'t':>10}  sig"]
        for i, name in enumerate(self.names):
            lines.append(
                f"{name:<16}{self.coef[i]:>12.4f}{self.se[i]:>12.4f}{self.tstat[i]:>10.2f}  {self.stars[i]}"
            )
        lines.append(f"N={self.n_obs}, K={self.n_params}, clusters={self.n_clusters}")
        return "\n".join(lines)


def stars_for(t: float) -> str:
    a = abs(t)
    if a >= STAR_THRESHOLDS[2]:
        return "***"
    if a >= STAR_THRESHOLDS[1]:
        return "**"
    if a >= STAR_THRESHOLDS[0]:
        return "*"
    return ""


def _normal_pvalue(t: float) -> float:
    return math.erfc(abs(t) / math.sqrt(2.0))


def _group_demean(values: np.ndarray, index: np.ndarray, n_groups: int) -> tuple[np.ndarray, float]:
    counts = np.bincount(index, minlength=n_groups).astype(float)
    if values.ndim == 1:
        sums = np.bincount(index, weights=values, minlength=n_groups)
        means = sums / counts
        out = values - means[index]
        return out, float(np.max(np.abs(means)))
    out = np.empty_like(values)
    worst = 0.0
    for j in range(values.shape[1]):
        sums = np.bincount(index, weights=values[:, j], minlength=n_groups)
        means = sums / counts
        out[:, j] = values[:, j] - means[index]
        worst = max(worst, float(np.max(np.abs(means))))
    return out, worst


def within_transform(
    dm: DesignMatrix, tol: float = 1e-10, max_iter: int = 10_000
) -> DesignMatrix:
    """Two-way demean y and X by alternating market/time demeaning.

    Iterates until the largest absolute group mean removed in a sweep falls
    below ``tol``; balanced panels converge in one sweep. Constant columns are
    annihilated (become zero).
    """
    market_ids, market_idx = np.unique(dm.clusters, return_inverse=True)
    time_ids, time_idx = np.unique(dm.times, return_inverse=True)
    y = dm.y.copy()
    X = dm.X.copy()
    for _ in range(max_iter):
        y, dy1 = _group_demean(y, market_idx, len(market_ids))
        X, dx1 = _group_demean(X, market_idx, len(market_ids))
        y, dy2 = _group_demean(y, time_idx, len(time_ids))
        X, dx2 = _group_demean(X, time_idx, len(time_ids))
        if max(dy1, dx1, dy2, dx2) < tol:
            return DesignMatrix(y, X, list(dm.names), dm.clusters, dm.times)
    raise EstimationError(f"within transform did not converge in {max_iter} sweeps")


def ols(dm: DesignMatrix):
    """Least squares via SVD; errors name the collinear columns on rank loss."""
    rank = np.linalg.matrix_rank(dm.X)
    if rank < dm.k:
        suspects = []
        for j in range(dm.k):
            keep = [c for c in range(dm.k) if c != j]
            rank_without = np.linalg.matrix_rank(dm.X[:, keep]) if keep else 0
            if rank_without == rank:
                suspects.append(dm.names[j])
        raise EstimationError(f"rank-deficient design; collinear columns: {suspects}")
    beta, *_ = np.linalg.lstsq(dm.X, dm.y, rcond=None)
    residuals = dm.y - dm.X @ beta
    return beta, residuals


def cluster_robust_se(dm: DesignMatrix, residuals: np.ndarray) -> np.ndarray:
    """Liang-Zeger sandwich clustered on ``dm.clusters``.

    (X'X)^-1 [sum_g X_g' e_g e_g' X_g] (X'X)^-1 scaled by
    G/(G-1) * (N-1)/(N-K).
    """
    ids, idx = np.unique(dm.clusters, return_inverse=True)
    G = len(ids)
    if G < 2:
        raise EstimationError("cluster-robust inference requires at least 2 clusters")
    n, k = dm.n, dm.k
    XtX = dm.X.T @ dm.X
    bread = np.linalg.inv(XtX)
    # per-cluster scores X_g' e_g, accumulated without materializing groups
    scores = np.zeros((G, k))
    weighted = dm.X * residuals[:, None]
    for j in range(k):
        scores[:, j] = np.bincount(idx, weights=weighted[:, j], minlength=G)
    meat = scores.T @ scores
    factor = (G / (G - 1.0)) * ((n - 1.0) / (n - k))
    vcov = factor * bread @ meat @ bread
    return np.sqrt(np.diag(vcov))


def fit(dm: DesignMatrix) -> RegressionResult:
    """Demean, solve, and attach cluster-robust inference."""
    demeaned = within_transform(dm)
    beta, residuals = ols(demeaned)
    se = cluster_robust_se(demeaned, residuals)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, beta / se, 0.0)
    return RegressionResult(
        names=list(dm.names),
        coef=beta,
        se=se,
        tstat=t,
        pvalue=np.array([_normal_pvalue(v) for v in t]),
        stars=[stars_for(v) for v in t],
        n_obs=dm.n,
        n_params=dm.k,
        n_clusters=len(np.unique(dm.clusters)),
        residuals=residuals,
    )


# ---------------------------------------------------------------------------
# Panel-level column derivations
# ---------------------------------------------------------------------------


def local_volatility(frame: pd.DataFrame, window: int = VOLATILITY_WINDOW) -> np.ndarray:
    """Trailing standard deviation of observed-probability changes per market."""
    vol = frame.groupby("market_id", sort=False)["observed_prob"].transform(
        lambda s: s.diff().rolling(window, min_periods=2).std(ddof=0)
    )
    return vol.fillna(0.0).to_numpy()


def outcome_series(panel: Panel, name: str) -> np.ndarray:
    """Resolve an outcome name to a row-level vector."""
    f = panel.frame
    if name in ("quoted_spread", "effective_spread", "realized_spread", "adverse_selection", "price_impact"):
        return f[name].to_numpy(dtype=float)
    if name == "log_depth":
        return np.log(f["depth"].to_numpy(dtype=float))
    if name == "noarb_gap":
        return np.abs(f["yes_price"].to_numpy() + f["no_price"].to_numpy() - 1.0)
    if name == "brier":
        y = f["market_id"].map(panel.outcomes).to_numpy(dtype=float)
        return (f["observed_prob"].to_numpy() - y) ** 2
    if name in f.columns:
        return f[name].to_numpy(dtype=float)
    raise KeyError(f"unknown outcome {name!r}")


def _channel_matrix(panel: Panel, interactions: bool) -> tuple[np.ndarray, list[str]]:
    f = panel.frame
    mm = f["mm_active"].to_numpy(dtype=float)
    lip = f["lip_active"].to_numpy(dtype=float)
    api = f["api_intensity"].to_numpy(dtype=float)
    cols = [mm, lip, api]
    names = list(CHANNEL_COLUMNS)
    if interactions:
        shock = f["shock"].to_numpy(dtype=float)
        cols += [mm * shock, lip * shock, api * shock]
        names += ["mm_x_shock", "lip_x_shock", "api_x_shock"]
    return np.column_stack(cols), names


def build_design(
    panel: Panel,
    outcome_name: str,
    controls: tuple[str, ...] = DEFAULT_CONTROLS,
    interactions: bool = False,
    row_mask: np.ndarray | None = None,
    extra: dict[str, np.ndarray] | None = None,
) -> DesignMatrix:
    f = panel.frame
    y = outcome_series(panel, outcome_name)
    X, names = _channel_matrix(panel, interactions)
    blocks = [X]
    if extra:
        for name, col in extra.items():
            blocks.append(np.asarray(col, dtype=float)[:, None])
            names = names + [name]
    for ctrl in controls:
        if ctrl == "shock":
            blocks.append(f["shock"].to_numpy(dtype=float)[:, None])
        elif ctrl == "local_volatility":
            cached = getattr(panel, "_volatility_cache", None)
            if cached is None:
                cached = local_volatility(f)
                panel._volatility_cache = cached
            blocks.append(cached[:, None])
        else:
            blocks.append(outcome_series(panel, ctrl)[:, None])
        names = names + [ctrl]
    X = np.hstack(blocks)
    clusters = f["market_id"].to_numpy()
    times = f["t"].to_numpy()
    if row_mask is not None:
        y, X, clusters, times = y[row_mask], X[row_mask], clusters[row_mask], times[row_mask]
    return DesignMatrix(y, X, names, clusters, times)


def twfe_estimate(
    panel: Panel,
    outcome_name: str,
    channel_columns: tuple[str, ...] = CHANNEL_COLUMNS,
    controls: tuple[str, ...] = DEFAULT_CONTROLS,
    row_mask: np.ndarray | None = None,
) -> RegressionResult:
    """Modular-channel regression with market and time effects absorbed."""
    interactions = any(c.endswith("_x_shock") for c in channel_columns)
    dm = build_design(panel, outcome_name, controls, interactions, row_mask)
    keep = [dm.names.index(c) for c in channel_columns] + [
        dm.names.index(c) for c in dm.names if c not in channel_columns and c in controls
    ]
    names = [dm.names[i] for i in keep]
    return fit(DesignMatrix(dm.y, dm.X[:, keep], names, dm.clusters, dm.times))


def interaction_estimate(panel: Panel, outcome_name: str) -> RegressionResult:
    """Channel mains plus shock and channel x shock interaction terms."""
    dm = build_design(panel, outcome_name, controls=("shock", "local_volatility"), interactions=True)
    return fit(dm)


def subgroup_estimate(
    panel: Panel,
    outcome_name: str,
    attribute: str,
    band: str,
    channel: str = "mm",
) -> RegressionResult:
    """Channel regression on the markets in one median-split attribute band."""
    if band not in ("high", "low"):
        raise EstimationError(f"band must be 'high' or 'low', got {band!r}")
    values = {m.market_id: getattr(m.attributes, attribute) for m in panel.markets}
    cut = float(np.median(list(values.values())))
    keep_ids = {mid for mid, v in values.items() if (v > cut) == (band == "high")}
    if not keep_ids:
        raise EstimationError(f"empty subgroup {attribute}/{band}")
    mask = panel.frame["market_id"].isin(keep_ids).to_numpy()
    treated = panel.frame.loc[mask, "mm_active"]
    if treated.sum() == 0 or treated.sum() == len(treated):
        raise EstimationError(f"degenerate subgroup {attribute}/{band}: no treatment variation")
    return twfe_estimate(panel, outcome_name, row_mask=mask)


SUBGROUPS = (
    ("info_density", "high", "High info density"),
    ("info_density", "low", "Low info density"),
    ("hedgeability", "high", "High hedgeability"),
    ("hedgeability", "low", "Low hedgeability"),
    ("resolution_clarity", "high", "Clear resolution"),
    ("resolution_clarity", "low", "Ambiguous resolution"),
    ("baseline_vol", "high", "High baseline vol"),
    ("baseline_vol", "low", "Low baseline vol"),
)


def summarize_by_regime(panel: Panel, n_bins: int = 10) -> pd.DataFrame:
    """Mean market-quality metrics by liquidity-bundle regime.

    Returns rows ``low``, ``high``, and ``pct_change``; cells for an empty
    regime are reported absent (NaN).
    """
    f = panel.frame
    hi = regime_mask(f)
    y = f["market_id"].map(panel.outcomes).to_numpy(dtype=float)
    metrics = {
        "quoted_spread": f["quoted_spread"].to_numpy(),
        "effective_spread": f["effective_spread"].to_numpy(),
        "depth": f["depth"].to_numpy(),
        "price_impact": f["price_impact"].to_numpy(),
        "brier": (f["observed_prob"].to_numpy() - y) ** 2,
        "noarb_gap": np.abs(f["yes_price"].to_numpy() + f["no_price"].to_numpy() - 1.0),
    }
    rows = {}
    for label, mask in (("low", ~hi), ("high", hi)):
        if mask.sum() == 0:
            rows[label] = {k: float("nan") for k in metrics} | {"ece": float("nan"), "n_rows": 0}
            continue
        cells = {k: float(v[mask].mean()) for k, v in metrics.items()}
        pairs = list(zip(f["observed_prob"].to_numpy()[mask], y[mask].astype(int)))
        cells["ece"] = compute_ece(pairs, n_bins).ece
        cells["n_rows"] = int(mask.sum())
        rows[label] = cells
    pct = {}
    for k in list(metrics) + ["ece"]:
        lo_v, hi_v = rows["low"][k], rows["high"][k]
        pct[k] = 100.0 * (hi_v - lo_v) / lo_v if lo_v and not math.isnan(lo_v) and not math.isnan(hi_v) else float("nan")
    pct["n_rows"] = rows["low"]["n_rows"] + rows["high"]["n_rows"]
    rows["pct_change"] = pct
    return pd.DataFrame(rows).T[list(metrics) + ["ece", "n_rows"]]


@dataclass
class EventStudySeries:
    """Treated-versus-not-yet-treated alignment around channel activation."""

    outcome: str
    k: np.ndarray
    treated_mean: np.ndarray
    control_mean: np.ndarray
    diff: np.ndarray  # normalized to 0 at k = -1
    se: np.ndarray
    n_treated: np.ndarray

    def at(self, k: int) -> tuple[float, float]:
        i = int(np.flatnonzero(self.k == k)[0])
        return float(self.diff[i]), float(self.se[i])


def event_study(
    panel: Panel,
    outcome_name: str,
    channel: str = "mm",
    k_pre: int = 8,
    k_post: int = 12,
) -> EventStudySeries:
    """Align treated markets on their activation date.

    At each relative time k the treated mean is compared with the mean over
    markets whose own activation is strictly later than the corresponding
    calendar time (or never). The reported difference is normalized to zero at
    k = -1; standard errors come from market-level clustering of the
    per-market event-time contributions, combined in quadrature with the
    k = -1 anchor. Relative times with an empty control pool are reported
    missing rather than failing.
    """
    attr = {"mm": "mm_activation", "lip": "lip_activation", "api": "api_adoption"}[channel]
    f = panel.frame
    y = outcome_series(panel, outcome_name)
    T = panel.n_periods
    activation = {m.market_id: getattr(m.schedule, attr) for m in panel.markets}
    treated = [m for m, a in activation.items() if a is not None]
    if not treated:
        raise EstimationError(f"no market ever activates channel {channel!r}")

    groups = f.groupby("market_id", sort=False).indices
    ts = f["t"].to_numpy()
    by_market = {}
    for mid, idx in groups.items():
        order = idx[np.argsort(ts[idx])]
        by_market[int(mid)] = y[order]

    # control pool mean at each calendar time: not-yet-treated at tau
    control_mean_at = np.full(T, np.nan)
    for tau in range(T):
        pool = [by_market[m][tau] for m, a in activation.items() if a is None or a > tau]
        if pool:
            control_mean_at[tau] = float(np.mean(pool))

    ks = np.arange(-k_pre, k_post + 1)
    treated_mean = np.full(len(ks), np.nan)
    control_mean = np.full(len(ks), np.nan)
    raw_diff = np.full(len(ks), np.nan)
    sd = np.full(len(ks), np.nan)
    n_tr = np.zeros(len(ks), dtype=int)
    for i, k in enumerate(ks):
        contrib = []
        ctrl = []
        for mid in treated:
            tau = activation[mid] + int(k)
            if not 0 <= tau < T or math.isnan(control_mean_at[tau]):
                continue
            contrib.append(float(by_market[mid][tau]) - float(control_mean_at[tau]))
            ctrl.append(float(control_mean_at[tau]))
        if not contrib:
            continue
        arr = np.asarray(contrib)
        raw_diff[i] = arr.mean()
        treated_mean[i] = arr.mean() + np.mean(ctrl)
        control_mean[i] = float(np.mean(ctrl))
        sd[i] = arr.std(ddof=1) / math.sqrt(len(arr)) if len(arr) > 1 else np.nan
        n_tr[i] = len(arr)

    anchor = int(np.flatnonzero(ks == -1)[0])
    if math.isnan(raw_diff[anchor]):
        raise EstimationError("no observations at k = -1 to normalize against")
    diff = raw_diff - raw_diff[anchor]
    se = np.sqrt(sd**2 + sd[anchor] ** 2)
    diff[anchor] = 0.0
    se[anchor] = 0.0
    return EventStudySeries(
        outcome=outcome_name,
        k=ks,
        treated_mean=treated_mean,
        control_mean=control_mean,
        diff=diff,
        se=se,
        n_treated=n_tr,
    )
