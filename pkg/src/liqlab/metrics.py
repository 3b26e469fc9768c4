"""Pure market-quality measurement functions.

Execution metrics work in probability units and convert to cents with a fixed
factor of 100; all functions are stateless.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CENTS_PER_PROB = 100.0

#: Default horizon (periods) for realized spread and price impact.
DEFAULT_HORIZON = 5

#: Default number of equal-width calibration bins.
DEFAULT_BINS = 10


@dataclass(frozen=True)
class TradeObs:
    """One signed trade print with the prevailing and future midpoints."""

    exec_price: float
    midpoint: float
    future_midpoint: float
    sign: int
    horizon: int = DEFAULT_HORIZON

    def __post_init__(self) -> None:
        for name in ("exec_price", "midpoint", "future_midpoint"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name}={v} outside (0, 1)")
        if self.sign not in (1, -1):
            raise ValueError(f"sign={self.sign} must be +1 or -1")


def effective_spread(obs: TradeObs) -> float:
    """Twice the signed gap between execution price and midpoint, in cents."""
    return CENTS_PER_PROB * 2.0 * obs.sign * (obs.exec_price - obs.midpoint)


def realized_spread(obs: TradeObs) -> float:
    """Twice the signed gap to the midpoint one horizon later, in cents."""
    return CENTS_PER_PROB * 2.0 * obs.sign * (obs.exec_price - obs.future_midpoint)


def adverse_selection(eff: float, rs: float) -> float:
    """Effective minus realized spread: the informed-flow cost, in cents."""
    return eff - rs


def price_impact(mid_now: float, mid_future: float, sign: int) -> float:
    """Signed short-horizon midpoint return after a trade, in basis points."""
    if not (0.0 < mid_now < 1.0 and 0.0 < mid_future < 1.0):
        raise ValueError("midpoints must lie in (0, 1)")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return 10_000.0 * sign * (mid_future - mid_now) / mid_now


def brier(p: float, y: int) -> float:
    """Squared forecast error against a binary outcome."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    if y not in (0, 1):
        raise ValueError(f"y={y} must be 0 or 1")
    return (p - y) ** 2


@dataclass(frozen=True)
class CalibrationReport:
    """Binned reliability summary with count-weighted calibration error."""

    bin_edges: tuple[float, ...]
    bin_mean_forecast: tuple[float, ...]
    bin_frequency: tuple[float, ...]
    bin_count: tuple[int, ...]
    ece: float
    mean_brier: float

    @property
    def n(self) -> int:
        return sum(self.bin_count)


def ece(forecasts, n_bins: int = DEFAULT_BINS) -> CalibrationReport:
    """Expected calibration error over ``(p, y)`` pairs.

    Equal-width bins on [0, 1]; the error is the count-weighted mean absolute
    gap between each bin's mean forecast and its empirical outcome frequency.
    Empty bins carry zero weight and are reported with NaN summaries.
    """
    if n_bins < 2:
        raise ValueError("n_bins must be at least 2")
    pairs = list(forecasts)
    if not pairs:
        raise ValueError("ece requires at least one forecast")
    p = np.asarray([q for q, _ in pairs], dtype=float)
    y = np.asarray([v for _, v in pairs], dtype=float)
    if p.min() < 0.0 or p.max() > 1.0:
        raise ValueError("forecast probabilities must lie in [0, 1]")

    edges = np.linspace(0.0, 1.0, n_bins + 1)
    # p == 1.0 belongs to the last bin
    idx = np.minimum((p * n_bins).astype(int), n_bins - 1)

    counts = np.bincount(idx, minlength=n_bins)
    sum_p = np.bincount(idx, weights=p, minlength=n_bins)
    sum_y = np.bincount(idx, weights=y, minlength=n_bins)

    nonzero = counts > 0
    mean_p = np.full(n_bins, np.nan)
    freq = np.full(n_bins, np.nan)
    mean_p[nonzero] = sum_p[nonzero] / counts[nonzero]
    freq[nonzero] = sum_y[nonzero] / counts[nonzero]

    weights = counts / counts.sum()
    gaps = np.abs(mean_p[nonzero] - freq[nonzero])
    value = float(np.sum(weights[nonzero] * gaps))

    return CalibrationReport(
        bin_edges=tuple(float(e) for e in edges),
        bin_mean_forecast=tuple(float(v) for v in mean_p),
        bin_frequency=tuple(float(v) for v in freq),
        bin_count=tuple(int(c) for c in counts),
        ece=value,
        mean_brier=float(np.mean((p - y) ** 2)),
    )


def complementary_gap(yes_price: float, no_price: float) -> float:
    """Absolute deviation of YES + NO pricing from one."""
    if not (0.0 < yes_price < 1.0 and 0.0 < no_price < 1.0):
        raise ValueError("prices must lie in (0, 1)")
    return abs(yes_price + no_price - 1.0)


def simplex_gap(family_prices) -> float:
    """Absolute deviation of a mutually exclusive, exhaustive book from one."""
    prices = [float(p) for p in family_prices]
    if len(prices) < 2:
        raise ValueError("simplex_gap requires at least two prices")
    if any(not 0.0 < p < 1.0 for p in prices):
        raise ValueError("prices must lie in (0, 1)")
    return abs(sum(prices) - 1.0)


def semantic_dispersion(matched_prices) -> float:
    """Price range across venues for semantically matched contracts."""
    prices = [float(p) for p in matched_prices]
    if len(prices) < 2:
        raise ValueError("semantic_dispersion requires at least two prices")
    if any(not 0.0 < p < 1.0 for p in prices):
        raise ValueError("prices must lie in (0, 1)")
    return max(prices) - min(prices)
