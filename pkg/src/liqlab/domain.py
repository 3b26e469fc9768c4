"""Core panel schema: market attributes, treatment schedules, panel rows, and
the flat-file wire format shared by the simulator, estimators, and reports.

All records are immutable value types; a constructed :class:`Panel` is safe to
share across threads without synchronization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd

# Price grid: spreads are measured in cents on a sub-cent tick.
TICK_CENTS = 0.1

# Probability support for observed (noise-contaminated) prices.
PROB_FLOOR = 0.01
PROB_CEIL = 0.99

# An automation ramp counts as an active channel once intensity crosses this.
API_ACTIVE_THRESHOLD = 0.5

CATEGORIES = ("Politics", "Macro", "Sports", "Crypto")

ARCHETYPE_NAMES = ("slow_taker", "fast_taker", "hedged_trader", "informed_trader")


class Regime(Enum):
    LOW_BUNDLE = "low"
    HIGH_BUNDLE = "high"


@dataclass(frozen=True)
class MarketAttributes:
    """Static per-market characteristics and belief-process parameters.

    ``mean_reversion`` (pull toward the anchor), ``baseline_vol`` (per-period
    log-odds diffusion scale) and ``anchor_logodds`` parameterize the latent
    belief recursion; the bounded attributes drive observation noise and
    treatment-effect heterogeneity.
    """

    category: str
    info_density: float
    hedgeability: float
    resolution_clarity: float
    baseline_vol: float
    anchor_logodds: float
    mean_reversion: float
    jump_intensity: float

    def __post_init__(self) -> None:
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")
        for name in ("info_density", "hedgeability", "resolution_clarity", "jump_intensity"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.baseline_vol <= 0.0:
            raise ValueError(f"baseline_vol={self.baseline_vol} must be > 0")
        # strict interior so the belief recursion is stable
        if not 0.0 < self.mean_reversion < 1.0:
            raise ValueError(f"mean_reversion={self.mean_reversion} outside (0, 1)")


@dataclass(frozen=True)
class TreatmentSchedule:
    """Activation times of the three institutional-liquidity channels.

    ``None`` means the channel never activates; a never-treated market has all
    three absent. Automation ramps linearly to full intensity over
    ``api_ramp_length`` periods after adoption.
    """

    mm_activation: int | None = None
    lip_activation: int | None = None
    api_adoption: int | None = None
    api_ramp_length: int = 20

    def __post_init__(self) -> None:
        if self.api_ramp_length <= 0:
            raise ValueError("api_ramp_length must be a positive integer")
        for name in ("mm_activation", "lip_activation", "api_adoption"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name}={v} must be a non-negative time index")

    @property
    def never_treated(self) -> bool:
        return self.mm_activation is None and self.lip_activation is None and self.api_adoption is None

    def check_window(self, n_periods: int) -> None:
        for name in ("mm_activation", "lip_activation", "api_adoption"):
            v = getattr(self, name)
            if v is not None and not 0 <= v < n_periods:
                raise ValueError(f"{name}={v} outside [0, {n_periods})")

    def mm_active(self, t: int) -> bool:
        return self.mm_activation is not None and t >= self.mm_activation

    def lip_active(self, t: int) -> bool:
        return self.lip_activation is not None and t >= self.lip_activation

    def api_intensity(self, t: int) -> float:
        if self.api_adoption is None or t < self.api_adoption:
            return 0.0
        return min(1.0, (t - self.api_adoption + 1) / self.api_ramp_length)


@dataclass(frozen=True)
class TraderArchetype:
    """Stylized trader class used for welfare incidence."""

    name: str
    latency_periods: int
    size_multiplier: float
    information_edge: float

    def __post_init__(self) -> None:
        if self.name not in ARCHETYPE_NAMES:
            raise ValueError(f"unknown archetype {self.name!r}")
        if self.latency_periods < 0:
            raise ValueError("latency_periods must be non-negative")
        if self.size_multiplier <= 0:
            raise ValueError("size_multiplier must be positive")
        if not 0.0 <= self.information_edge <= 1.0:
            raise ValueError("information_edge outside [0, 1]")


#: Slow takers react last; informed-like traders are fastest and best informed.
ARCHETYPES = (
    TraderArchetype("slow_taker", latency_periods=3, size_multiplier=1.0, information_edge=0.0),
    TraderArchetype("fast_taker", latency_periods=1, size_multiplier=1.0, information_edge=0.05),
    TraderArchetype("hedged_trader", latency_periods=1, size_multiplier=4.0, information_edge=0.25),
    TraderArchetype("informed_trader", latency_periods=0, size_multiplier=2.0, information_edge=0.8),
)

_LATENCIES = [a.latency_periods for a in ARCHETYPES]
assert _LATENCIES[0] > _LATENCIES[1] >= _LATENCIES[2] >= _LATENCIES[3]


@dataclass(frozen=True)
class MarketSpec:
    """One market: static attributes, treatment schedule, and resolution."""

    market_id: int
    attributes: MarketAttributes
    schedule: TreatmentSchedule
    outcome: int
    family_id: int | None = None

    def __post_init__(self) -> None:
        if self.outcome not in (0, 1):
            raise ValueError(f"outcome={self.outcome} must be 0 or 1")


@dataclass(frozen=True)
class PanelRow:
    """One market x time observation."""

    market_id: int
    t: int
    latent_logodds: float
    true_prob: float
    observed_prob: float
    shock: bool
    mm_active: bool
    lip_active: bool
    api_intensity: float
    professional_share: float
    quoted_spread: float
    effective_spread: float
    realized_spread: float
    adverse_selection: float
    depth: float
    price_impact: float
    yes_price: float
    no_price: float
    family_id: int | None
    archetype_costs: tuple[float, float, float, float]


#: CSV columns, in PanelRow field order (archetype_costs expands to 4 columns).
PANEL_COLUMNS = (
    "market_id",
    "t",
    "latent_logodds",
    "true_prob",
    "observed_prob",
    "shock",
    "mm_active",
    "lip_active",
    "api_intensity",
    "professional_share",
    "quoted_spread",
    "effective_spread",
    "realized_spread",
    "adverse_selection",
    "depth",
    "price_impact",
    "yes_price",
    "no_price",
    "family_id",
    "cost_slow_taker",
    "cost_fast_taker",
    "cost_hedged_trader",
    "cost_informed_trader",
)

_INT_COLUMNS = {"market_id", "t"}
_BOOL_COLUMNS = {"shock", "mm_active", "lip_active"}
_OPTIONAL_INT_COLUMNS = {"family_id"}

MARKETS_COLUMNS = (
    "market_id",
    "category",
    "info_density",
    "hedgeability",
    "resolution_clarity",
    "baseline_vol",
    "anchor_logodds",
    "mean_reversion",
    "jump_intensity",
    "mm_activation",
    "lip_activation",
    "api_adoption",
    "api_ramp_length",
    "family_id",
    "outcome",
)


class Panel:
    """Rectangular collection of panel rows plus per-market specs.

    Rows are stored as a column-major frame in (market, t) order; ``rows()``
    reconstitutes :class:`PanelRow` records on demand.
    """

    def __init__(self, frame: pd.DataFrame, markets: list[MarketSpec], seed: int) -> None:
        self.frame = frame.reset_index(drop=True)
        self.markets = list(markets)
        self.seed = int(seed)
        self.n_markets = len(markets)
        ts = self.frame["t"].to_numpy()
        self.n_periods = int(ts.max()) + 1 if len(ts) else 0

    @classmethod
    def from_rows(cls, rows: list[PanelRow], markets: list[MarketSpec], seed: int) -> "Panel":
        cols: dict[str, list] = {c: [] for c in PANEL_COLUMNS}
        for r in rows:
            for f in fields(PanelRow):
                if f.name == "archetype_costs":
                    for name, v in zip(PANEL_COLUMNS[-4:], r.archetype_costs):
                        cols[name].append(v)
                else:
                    cols[f.name].append(getattr(r, f.name))
        frame = pd.DataFrame(cols, columns=list(PANEL_COLUMNS))
        return cls(frame, markets, seed)

    @property
    def outcomes(self) -> dict[int, int]:
        return {m.market_id: m.outcome for m in self.markets}

    def rows(self):
        for rec in self.frame.itertuples(index=False):
            d = rec._asdict()
            costs = tuple(d.pop(c) for c in PANEL_COLUMNS[-4:])
            fam = d["family_id"]
            d["family_id"] = None if pd.isna(fam) else int(fam)
            yield PanelRow(
                market_id=int(d["market_id"]),
                t=int(d["t"]),
                latent_logodds=float(d["latent_logodds"]),
                true_prob=float(d["true_prob"]),
                observed_prob=float(d["observed_prob"]),
                shock=bool(d["shock"]),
                mm_active=bool(d["mm_active"]),
                lip_active=bool(d["lip_active"]),
                api_intensity=float(d["api_intensity"]),
                professional_share=float(d["professional_share"]),
                quoted_spread=float(d["quoted_spread"]),
                effective_spread=float(d["effective_spread"]),
                realized_spread=float(d["realized_spread"]),
                adverse_selection=float(d["adverse_selection"]),
                depth=float(d["depth"]),
                price_impact=float(d["price_impact"]),
                yes_price=float(d["yes_price"]),
                no_price=float(d["no_price"]),
                family_id=d["family_id"],
                archetype_costs=tuple(float(c) for c in costs),
            )

    def __len__(self) -> int:
        return len(self.frame)


def classify_regime(row: PanelRow, api_threshold: float = API_ACTIVE_THRESHOLD) -> Regime:
    """High bundle iff at least two institutional-liquidity channels are active.

    The automation channel counts as active once its intensity reaches
    ``api_threshold`` (midpoint of the ramp by default).
    """
    n = int(row.mm_active) + int(row.lip_active) + int(row.api_intensity >= api_threshold)
    return Regime.HIGH_BUNDLE if n >= 2 else Regime.LOW_BUNDLE


def regime_mask(frame: pd.DataFrame, api_threshold: float = API_ACTIVE_THRESHOLD) -> np.ndarray:
    """Vectorized :func:`classify_regime`: boolean array, True = high bundle."""
    n = (
        frame["mm_active"].to_numpy().astype(int)
        + frame["lip_active"].to_numpy().astype(int)
        + (frame["api_intensity"].to_numpy() >= api_threshold).astype(int)
    )
    return n >= 2


@dataclass(frozen=True)
class Violation:
    market_id: int | None
    t: int | None
    message: str

    def __str__(self) -> str:
        where = "panel" if self.market_id is None else f"market {self.market_id}, t={self.t}"
        return f"{where}: {self.message}"


# Residual tolerance for identities that are exact up to float rounding.
_IDENTITY_TOL = 1e-9


def validate_panel(panel: Panel) -> list[Violation]:
    """Check rectangularity and every per-row invariant; violations are data."""
    out: list[Violation] = []
    f = panel.frame

    expected = panel.n_markets * panel.n_periods
    keys = list(zip(f["market_id"].to_numpy(), f["t"].to_numpy()))
    if len(f) != expected or len(set(keys)) != len(keys):
        out.append(Violation(None, None, f"non-rectangular: {len(f)} rows, expected {expected}"))

    schedules = {m.market_id: m.schedule for m in panel.markets}

    mid = f["market_id"].to_numpy()
    ts = f["t"].to_numpy()
    checks = [
        (
            np.abs(
                f["adverse_selection"].to_numpy()
                - (f["effective_spread"].to_numpy() - f["realized_spread"].to_numpy())
            )
            > _IDENTITY_TOL,
            "spread identity: adverse_selection != effective_spread - realized_spread",
        ),
        (
            (f["observed_prob"].to_numpy() < PROB_FLOOR - 1e-12)
            | (f["observed_prob"].to_numpy() > PROB_CEIL + 1e-12),
            f"observed_prob outside [{PROB_FLOOR}, {PROB_CEIL}]",
        ),
        (f["quoted_spread"].to_numpy() < TICK_CENTS - 1e-9, "quoted_spread below one tick"),
        (f["effective_spread"].to_numpy() < -1e-9, "effective_spread negative"),
        (f["depth"].to_numpy() <= 0.0, "depth not positive"),
        (
            (f["true_prob"].to_numpy() <= 0.0) | (f["true_prob"].to_numpy() >= 1.0),
            "true_prob outside (0, 1)",
        ),
        (
            (f["api_intensity"].to_numpy() < -1e-12) | (f["api_intensity"].to_numpy() > 1.0 + 1e-12),
            "api_intensity outside [0, 1]",
        ),
        (
            (f["professional_share"].to_numpy() < -1e-12)
            | (f["professional_share"].to_numpy() > 1.0 + 1e-12),
            "professional_share outside [0, 1]",
        ),
        (
            (f["yes_price"].to_numpy() <= 0.0)
            | (f["yes_price"].to_numpy() >= 1.0)
            | (f["no_price"].to_numpy() <= 0.0)
            | (f["no_price"].to_numpy() >= 1.0),
            "yes/no price outside (0, 1)",
        ),
    ]
    for bad, message in checks:
        for i in np.flatnonzero(bad):
            out.append(Violation(int(mid[i]), int(ts[i]), message))

    mm = f["mm_active"].to_numpy().astype(bool)
    lip = f["lip_active"].to_numpy().astype(bool)
    for i in range(len(f)):
        sched = schedules.get(int(mid[i]))
        if sched is None:
            out.append(Violation(int(mid[i]), int(ts[i]), "market missing from spec sidecar"))
            continue
        t = int(ts[i])
        if mm[i] != sched.mm_active(t) or lip[i] != sched.lip_active(t):
            out.append(Violation(int(mid[i]), t, "channel flags inconsistent with treatment schedule"))

    return out


# ---------------------------------------------------------------------------
# Flat-file wire format: UTF-8, LF line endings, reals with 6 decimal digits.
# ---------------------------------------------------------------------------


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def panel_csv_text(panel: Panel) -> str:
    """Render the panel in the canonical delimited format.

    realized_spread is emitted as the difference of the already-rounded
    effective_spread and adverse_selection fields so the spread identity holds
    exactly on the written 6-decimal grid and round-trips byte-for-byte.
    """
    f = panel.frame
    lines = [",".join(PANEL_COLUMNS)]
    cols = {}
    for c in PANEL_COLUMNS:
        cols[c] = f[c].to_numpy()
    n = len(f)
    for i in range(n):
        eff = float(_fmt(cols["effective_spread"][i]))
        adv = float(_fmt(cols["adverse_selection"][i]))
        parts = []
        for c in PANEL_COLUMNS:
            if c in _INT_COLUMNS:
                parts.append(str(int(cols[c][i])))
            elif c in _BOOL_COLUMNS:
                parts.append("1" if cols[c][i] else "0")
            elif c in _OPTIONAL_INT_COLUMNS:
                v = cols[c][i]
                parts.append("" if pd.isna(v) else str(int(v)))
            elif c == "realized_spread":
                parts.append(_fmt(eff - adv))
            else:
                parts.append(_fmt(float(cols[c][i])))
        lines.append(",".join(parts))
    return "\n".join(lines) + "\n"


def markets_csv_text(markets: list[MarketSpec]) -> str:
    lines = [",".join(MARKETS_COLUMNS)]
    for m in markets:
        a, s = m.attributes, m.schedule
        opt = lambda v: "" if v is None else str(int(v))
        parts = [
            str(m.market_id),
            a.category,
            _fmt(a.info_density),
            _fmt(a.hedgeability),
            _fmt(a.resolution_clarity),
            _fmt(a.baseline_vol),
            _fmt(a.anchor_logodds),
            _fmt(a.mean_reversion),
            _fmt(a.jump_intensity),
            opt(s.mm_activation),
            opt(s.lip_activation),
            opt(s.api_adoption),
            str(s.api_ramp_length),
            opt(m.family_id),
            str(m.outcome),
        ]
        lines.append(",".join(parts))
    return "\n".join(lines) + "\n"


def write_panel_csv(panel: Panel, panel_path: Path, markets_path: Path | None = None) -> None:
    panel_path = Path(panel_path)
    panel_path.write_text(panel_csv_text(panel), encoding="utf-8", newline="\n")
    if markets_path is not None:
        Path(markets_path).write_text(markets_csv_text(panel.markets), encoding="utf-8", newline="\n")


def read_markets_csv(path: Path) -> list[MarketSpec]:
    frame = pd.read_csv(path, dtype={"category": str})
    markets = []
    for rec in frame.itertuples(index=False):
        attrs = MarketAttributes(
            category=rec.category,
            info_density=float(rec.info_density),
            hedgeability=float(rec.hedgeability),
            resolution_clarity=float(rec.resolution_clarity),
            baseline_vol=float(rec.baseline_vol),
            anchor_logodds=float(rec.anchor_logodds),
            mean_reversion=float(rec.mean_reversion),
            jump_intensity=float(rec.jump_intensity),
        )
        opt = lambda v: None if pd.isna(v) else int(v)
        sched = TreatmentSchedule(
            mm_activation=opt(rec.mm_activation),
            lip_activation=opt(rec.lip_activation),
            api_adoption=opt(rec.api_adoption),
            api_ramp_length=int(rec.api_ramp_length),
        )
        markets.append(
            MarketSpec(
                market_id=int(rec.market_id),
                attributes=attrs,
                schedule=sched,
                outcome=int(rec.outcome),
                family_id=opt(rec.family_id),
            )
        )
    return markets


def read_panel_csv(panel_path: Path, markets_path: Path, seed: int = 0) -> Panel:
    frame = pd.read_csv(panel_path)
    missing = [c for c in PANEL_COLUMNS if c not in frame.columns]
    if missing:
        raise ValueError(f"panel file missing columns: {missing}")
    frame = frame[list(PANEL_COLUMNS)]
    markets = read_markets_csv(markets_path)
    return Panel(frame, markets, seed)


def logistic(x: float | np.ndarray):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=float))) if isinstance(x, np.ndarray) else 1.0 / (
        1.0 + math.exp(-x)
    )
