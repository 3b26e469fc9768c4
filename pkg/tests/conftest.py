from __future__ import annotations

from dataclasses import replace

import pytest

from liqlab.config import BaseDispersion, SimConfig, TimeAmplitudes
from liqlab.simulator import simulate_panel


def zero_noise_config(**overrides) -> SimConfig:
    """Default design with all residual noise, base dispersion, seasonal
    variation, and MM-effect heterogeneity switched off."""
    cfg = SimConfig(
        noise_scale_factor=0.0,
        heterogeneity_scale=0.0,
        base_sd=BaseDispersion(0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
        time_amp=TimeAmplitudes(0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
    )
    return replace(cfg, **overrides) if overrides else cfg


def small_config(**overrides) -> SimConfig:
    cfg = SimConfig(
        n_markets=60,
        n_periods=48,
        panel_rows=60 * 48,
        activation_lo=10,
        activation_hi=38,
        api_ramp_length=8,
        family_size=3,
    )
    return replace(cfg, **overrides) if overrides else cfg


@pytest.fixture(scope="session")
def default_panel():
    return simulate_panel(SimConfig())


@pytest.fixture(scope="session")
def zero_noise_panel():
    return simulate_panel(zero_noise_config())
