"""Simulation configuration: designed treatment effects, noise scales, and the
flat key=value file format.

Every scalar leaf of :class:`SimConfig` is exposed as one configuration key
(nested fields join with underscores, e.g. ``effects_quoted_spread_mm``).
Unknown keys are rejected so a typo cannot silently miscalibrate a run.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, is_dataclass, replace
from pathlib import Path


class ConfigError(ValueError):
    """Invalid configuration key or value."""


@dataclass(frozen=True)
class ChannelEffects:
    """Per-channel linear effect of MM coverage, incentives, and automation."""

    mm: float
    lip: float
    api: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.mm, self.lip, self.api)


@dataclass(frozen=True)
class ShockResponse:
    """Shock-state main effect plus channel x shock interaction effects."""

    main: float
    mm: float = 0.0
    lip: float = 0.0
    api: float = 0.0


@dataclass(frozen=True)
class BandRatios:
    """Subgroup-to-full-sample coefficient ratios for one attribute split."""

    high: float
    low: float


@dataclass(frozen=True)
class HeterogeneityRatios:
    """MM-effect ratios by attribute band for one outcome family.

    ``resolution_clarity.high`` is the clear-resolution band.
    """

    info_density: BandRatios
    hedgeability: BandRatios
    resolution_clarity: BandRatios
    baseline_vol: BandRatios


@dataclass(frozen=True)
class DesignedEffects:
    """The treatment-effect design the simulator plants and estimators recover.

    ``brier_shift`` entries are targets for the realized forecast-error
    coefficients; they are carried by observation-noise variance shifts rather
    than injected linearly, so the squared forecast error stays a genuine
    function of price and resolution.
    """

    quoted_spread: ChannelEffects
    effective_spread: ChannelEffects
    adverse_selection: ChannelEffects
    log_depth: ChannelEffects
    price_impact: ChannelEffects
    noarb_gap: ChannelEffects
    brier_shift: ChannelEffects

    quoted_spread_shock: ShockResponse
    log_depth_shock: ShockResponse
    adverse_selection_shock: ShockResponse
    realized_spread_shock: ShockResponse
    price_impact_shock: ShockResponse
    noarb_gap_shock: ShockResponse

    het_spread: HeterogeneityRatios
    het_impact: HeterogeneityRatios
    het_noarb: HeterogeneityRatios

    def __post_init__(self) -> None:
        for name in ("quoted_spread", "effective_spread", "adverse_selection", "price_impact"):
            eff: ChannelEffects = getattr(self, name)
            if any(v > 0 for v in eff.as_tuple()):
                raise ConfigError(f"{name} channel effects must be <= 0")
        if any(v < 0 for v in self.log_depth.as_tuple()):
            raise ConfigError("log_depth channel effects must be >= 0")

    @property
    def realized_spread(self) -> ChannelEffects:
        """Maker-revenue effects implied by the spread identity."""
        e, a = self.effective_spread, self.adverse_selection
        return ChannelEffects(e.mm - a.mm, e.lip - a.lip, e.api - a.api)

    @property
    def effective_spread_shock(self) -> ShockResponse:
        """Shock response implied by effective = realized + adverse selection."""
        a, r = self.adverse_selection_shock, self.realized_spread_shock
        return ShockResponse(a.main + r.main, a.mm + r.mm, a.lip + r.lip, a.api + r.api)


@dataclass(frozen=True)
class NoiseScales:
    """Residual standard deviations of the generated outcomes."""

    quoted_spread: float = 1.0
    effective_spread: float = 1.1
    adverse_selection: float = 0.05
    log_depth: float = 0.40
    price_impact: float = 0.55
    noarb_gap: float = 0.007
    archetype: float = 0.45

    def scaled(self, factor: float) -> "NoiseScales":
        return NoiseScales(*(getattr(self, f.name) * factor for f in fields(self)))


@dataclass(frozen=True)
class BaseLevels:
    """Grand means of the market base levels (calibrated)."""

    quoted_spread: float = 7.0224
    effective_spread: float = 6.9857
    adverse_selection: float = 2.0
    log_depth: float = 4.9147
    price_impact: float = 13.1138
    noarb_gap: float = 0.0240


@dataclass(frozen=True)
class BaseDispersion:
    """Cross-market standard deviations of the market base levels."""

    quoted_spread: float = 0.8
    effective_spread: float = 0.8
    adverse_selection: float = 0.25
    log_depth: float = 0.20
    price_impact: float = 1.0
    noarb_gap: float = 0.003


@dataclass(frozen=True)
class TimeAmplitudes:
    """Amplitudes of the deterministic seasonal time effects."""

    quoted_spread: float = 0.06
    effective_spread: float = 0.06
    adverse_selection: float = 0.03
    log_depth: float = 0.015
    price_impact: float = 0.08
    noarb_gap: float = 0.0008


@dataclass(frozen=True)
class ArchetypeCostParams:
    """Execution-cost loadings for one trader archetype.

    ``pass_frac`` is the share of the spread-channel improvement the archetype
    actually captures; ``shock_penalty`` is the flat shock-state cost and
    ``shock_channel_penalty`` the additional per-active-channel extraction the
    archetype suffers when information arrives (largest for slow takers,
    nearly offset by the information edge for informed-like flow).
    """

    base: float
    pass_frac: float
    shock_penalty: float
    shock_channel_penalty: float


@dataclass(frozen=True)
class ArchetypeCostDesign:
    slow_taker: ArchetypeCostParams
    fast_taker: ArchetypeCostParams
    hedged_trader: ArchetypeCostParams
    informed_trader: ArchetypeCostParams

    def for_name(self, name: str) -> ArchetypeCostParams:
        return getattr(self, name)


def default_designed_effects() -> DesignedEffects:
    return DesignedEffects(
        quoted_spread=ChannelEffects(-0.734, -0.415, -0.337),
        effective_spread=ChannelEffects(-0.988, -0.567, -0.472),
        adverse_selection=ChannelEffects(-0.296, -0.170, -0.142),
        log_depth=ChannelEffects(0.192, 0.125, 0.117),
        price_impact=ChannelEffects(-0.844, -0.468, -0.369),
        noarb_gap=ChannelEffects(-0.003, -0.001, -0.003),
        brier_shift=ChannelEffects(-0.004, -0.006, -0.012),
        quoted_spread_shock=ShockResponse(0.40),
        log_depth_shock=ShockResponse(-0.06),
        adverse_selection_shock=ShockResponse(0.507, 0.013, 0.008, 0.027),
        realized_spread_shock=ShockResponse(0.514, 0.036, 0.000, 0.026),
        price_impact_shock=ShockResponse(2.168, -0.195, -0.006, 0.001),
        noarb_gap_shock=ShockResponse(0.009, 0.0, 0.0, 0.0),
        het_spread=HeterogeneityRatios(
            info_density=BandRatios(1.21526, 0.73706),
            hedgeability=BandRatios(0.85967, 1.15395),
            resolution_clarity=BandRatios(0.92371, 1.10627),
            baseline_vol=BandRatios(1.26839, 0.78065),
        ),
        het_impact=HeterogeneityRatios(
            info_density=BandRatios(1.20972, 0.71445),
            hedgeability=BandRatios(0.88152, 1.14100),
            resolution_clarity=BandRatios(0.89573, 1.11967),
            baseline_vol=BandRatios(1.28910, 0.73578),
        ),
        het_noarb=HeterogeneityRatios(
            info_density=BandRatios(1.66667, 0.33333),
            hedgeability=BandRatios(1.33333, 0.33333),
            resolution_clarity=BandRatios(1.33333, 0.33333),
            baseline_vol=BandRatios(0.66667, 1.33333),
        ),
    )


def default_archetype_design() -> ArchetypeCostDesign:
    # Calibrated so the 4 x (state x regime) execution-cost cells land on the
    # design targets under the default treatment mixture.
    return ArchetypeCostDesign(
        slow_taker=ArchetypeCostParams(6.9795, 0.2687, 4.1432, 0.3276),
        fast_taker=ArchetypeCostParams(6.9702, 0.6849, 3.9438, 0.3055),
        hedged_trader=ArchetypeCostParams(6.5040, 1.0836, 3.9582, 0.2019),
        informed_trader=ArchetypeCostParams(6.9267, 1.2287, 3.6873, 0.0469),
    )


@dataclass(frozen=True)
class SimConfig:
    """Full description of one synthetic panel run."""

    n_markets: int = 320
    n_periods: int = 180
    panel_rows: int = 57_600
    seed: int = 42

    never_treated_share: float = 0.20
    activation_lo: int = 36
    activation_hi: int = 144
    channel_prob_mm: float = 0.55
    channel_prob_lip: float = 0.55
    channel_prob_api: float = 0.55
    adoption_mid_tilt: float = 0.59
    api_ramp_length: int = 20

    jump_intensity: float = 0.08
    jump_size_scale: float = 0.43

    anchor_sd: float = 0.64
    family_share: float = 0.25
    family_size: int = 4
    mean_reversion_lo: float = 0.074
    mean_reversion_hi: float = 0.140
    baseline_vol_lo: float = 0.04
    baseline_vol_hi: float = 0.10

    # Observation-noise variance: (base + ambiguity ramp) scaled by the square
    # of ece_target_noise, damped multiplicatively by active channels.
    ece_target_noise: float = 1.0
    obs_noise_base: float = 0.0155
    obs_noise_ambiguity: float = 0.0080
    obs_noise_floor: float = 1.0e-4
    brier_exp_mm: float = -0.40
    brier_exp_lip: float = -0.80
    brier_exp_api: float = -3.4

    professional_baseline: float = 0.10
    professional_gain_mm: float = 0.9
    professional_gain_lip: float = 0.6
    professional_gain_api: float = 0.7

    # 1.0 applies the designed attribute-band heterogeneity; 0.0 disables it.
    heterogeneity_scale: float = 1.0
    noise_scale_factor: float = 1.0
    base_tilt_scale: float = 1.0

    effects: DesignedEffects = None  # type: ignore[assignment]
    noise: NoiseScales = None  # type: ignore[assignment]
    base: BaseLevels = None  # type: ignore[assignment]
    base_sd: BaseDispersion = None  # type: ignore[assignment]
    time_amp: TimeAmplitudes = None  # type: ignore[assignment]
    archetype_design: ArchetypeCostDesign = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        defaults = {
            "effects": default_designed_effects,
            "noise": NoiseScales,
            "base": BaseLevels,
            "base_sd": BaseDispersion,
            "time_amp": TimeAmplitudes,
            "archetype_design": default_archetype_design,
        }
        for name, factory in defaults.items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, factory())

    def validate(self) -> None:
        if self.n_markets <= 0 or self.n_periods <= 0:
            raise ConfigError("n_markets and n_periods must be positive")
        if self.n_markets * self.n_periods != self.panel_rows:
            raise ConfigError(
                f"panel_rows={self.panel_rows} inconsistent with "
                f"n_markets*n_periods={self.n_markets * self.n_periods}"
            )
        if not 0.0 <= self.never_treated_share <= 1.0:
            raise ConfigError("never_treated_share outside [0, 1]")
        if not 0 < self.activation_lo <= self.activation_hi < self.n_periods:
            raise ConfigError("activation window must lie inside (0, n_periods)")
        for name in ("channel_prob_mm", "channel_prob_lip", "channel_prob_api"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} outside [0, 1]")
        if not 0.0 <= self.jump_intensity <= 1.0:
            raise ConfigError("jump_intensity outside [0, 1]")
        if self.api_ramp_length <= 0 or self.family_size < 2:
            raise ConfigError("api_ramp_length must be positive; family_size at least 2")
        if not 0.0 < self.mean_reversion_lo <= self.mean_reversion_hi < 1.0:
            raise ConfigError("mean_reversion range must lie inside (0, 1)")
        if not 0.0 < self.baseline_vol_lo <= self.baseline_vol_hi:
            raise ConfigError("baseline_vol range must be positive")

    @property
    def effective_noise(self) -> NoiseScales:
        return self.noise.scaled(self.noise_scale_factor)


# ---------------------------------------------------------------------------
# Flat key=value configuration files
# ---------------------------------------------------------------------------


def flatten_config(cfg: SimConfig) -> dict[str, object]:
    """Map a config to its flat key=value representation."""

    def walk(obj, prefix: str, out: dict[str, object]) -> None:
        for f in fields(obj):
            value = getattr(obj, f.name)
            key = f"{prefix}{f.name}"
            if is_dataclass(value):
                walk(value, key + "_", out)
            else:
                out[key] = value

    out: dict[str, object] = {}
    walk(cfg, "", out)
    return out


def config_keys() -> list[str]:
    """All recognized configuration keys, in declaration order."""
    return list(flatten_config(SimConfig()))


def _rebuild(defaults, flat: dict[str, object], prefix: str):
    kwargs = {}
    for f in fields(defaults):
        value = getattr(defaults, f.name)
        key = f"{prefix}{f.name}"
        if is_dataclass(value):
            kwargs[f.name] = _rebuild(value, flat, key + "_")
        elif key in flat:
            raw = flat[key]
            try:
                kwargs[f.name] = int(raw) if isinstance(value, int) else float(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return replace(defaults, **kwargs) if kwargs else defaults


def config_from_mapping(mapping: dict[str, object], base: SimConfig | None = None) -> SimConfig:
    """Apply overrides to a base config, rejecting unknown keys."""
    base = base if base is not None else SimConfig()
    known = set(flatten_config(base))
    unknown = [k for k in mapping if k not in known]
    if unknown:
        raise ConfigError(f"unknown configuration key: {unknown[0]}")
    cfg = _rebuild(base, dict(mapping), "")
    cfg.validate()
    return cfg


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key}")
        out[key] = value
    return out


def load_config(path: str | Path | None, seed: int | None = None) -> SimConfig:
    """Load a config file (or defaults) with an optional seed override."""
    mapping: dict[str, object] = {}
    if path is not None:
        mapping.update(parse_config_text(Path(path).read_text(encoding="utf-8")))
    if seed is not None:
        mapping["seed"] = seed
    return config_from_mapping(mapping)


def config_file_text(cfg: SimConfig) -> str:
    """Render a config as a parseable key = value document."""
    lines = ["# liqlab simulation configuration (flat key = value schema)"]
    for key, value in flatten_config(cfg).items():
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
