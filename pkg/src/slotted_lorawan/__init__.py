"""Slotted ALOHA over LoRaWAN: airtime, closed-form throughput, clock sync and
a discrete-event channel simulator."""

from .airtime import FrameSpec, RadioConfig, airtime_report, time_on_air, time_on_air_us
from .analytic import (
    OfferedLoad,
    OverheadModel,
    confirmed_lorawan_throughput,
    overhead_factor,
    pure_aloha_throughput,
    slotted_aloha_throughput,
    slotted_lorawan_max_throughput,
    slotted_lorawan_throughput,
)
from .channel import ChannelModel, Outcome, Transmission, detect_collisions
from .clock import GatewayTimestamper, JitterModel, VirtualClock, max_drift_between_syncs, sync_error_stats
from .errors import ConfigInvalid, DegenerateConfig, IllegalTransition, LoRaSimError
from .mac import MacParams, MacState, Mode, SlotGeometry, State, step
from .presets import PRESET_NAMES, preset_table3, run_preset
from .scenario import Scenario
from .simulator import MetricsReport, compute_metrics, run, simulate, sweep

__version__ = "0.1.0"

__all__ = [
    "ChannelModel",
    "ConfigInvalid",
    "DegenerateConfig",
    "FrameSpec",
    "GatewayTimestamper",
    "IllegalTransition",
    "JitterModel",
    "LoRaSimError",
    "MacParams",
    "MacState",
    "MetricsReport",
    "Mode",
    "OfferedLoad",
    "Outcome",
    "OverheadModel",
    "PRESET_NAMES",
    "RadioConfig",
    "Scenario",
    "SlotGeometry",
    "State",
    "Transmission",
    "VirtualClock",
    "airtime_report",
    "compute_metrics",
    "confirmed_lorawan_throughput",
    "detect_collisions",
    "max_drift_between_syncs",
    "overhead_factor",
    "preset_table3",
    "pure_aloha_throughput",
    "run",
    "run_preset",
    "simulate",
    "slotted_aloha_throughput",
    "slotted_lorawan_max_throughput",
    "slotted_lorawan_throughput",
    "step",
    "sweep",
    "sync_error_stats",
    "time_on_air",
    "time_on_air_us",
]
