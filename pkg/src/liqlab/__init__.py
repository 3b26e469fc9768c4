"""Synthetic prediction-market liquidity laboratory.

A deterministic panel generator for prediction-market microstructure, the
market-quality metric stack, two-way fixed-effects estimation with
cluster-robust inference, and welfare pass-through reporting.
"""

from .config import DesignedEffects, SimConfig
from .domain import MarketAttributes, MarketSpec, Panel, PanelRow, Regime, TreatmentSchedule
from .simulator import simulate_panel

__all__ = [
    "DesignedEffects",
    "MarketAttributes",
    "MarketSpec",
    "Panel",
    "PanelRow",
    "Regime",
    "SimConfig",
    "TreatmentSchedule",
    "simulate_panel",
]
