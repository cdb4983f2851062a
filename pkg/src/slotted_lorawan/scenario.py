"""Scenario configuration: dataclasses, TOML loading and validation.

A scenario file is TOML with the sections below.  Every key has a default;
unknown sections or keys raise :class:`ConfigInvalid`.

.. code-block:: toml

    [scenario]   name, mode, n_nodes, duration_s, seed, traffic, tx_period_s,
                 max_retries, backoff_nslots, backoff_tmax_s
    [radio]      sf, bw_hz, cr, n_preamble, crc_on, low_dr_optimize, payload_bytes
    [ack]        payload_bytes, crc_on
    [timing]     rx1_delay_s, uplink_toa_us, ack_toa_us, ack_guard_us
    [slot]       t_r_us, t_b_us
    [clock]      drift_ppm_min, drift_ppm_max, drift_sign, resync_interval_s,
                 reboot_rate_per_hour, reboot_max_offset_us, initial_sync
    [jitter]     family, shift_us, median_us, sigma, width_us, load_coeff,
                 contention_window_s, rx_window_open_error_us
    [channel]    channel, orthogonal_sf, gateway_half_duplex, occupancy, collision_mode
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .airtime import FrameSpec, RadioConfig, time_on_air_us
from .channel import ChannelModel
from .clock import GatewayTimestamper, JitterModel
from .errors import ConfigInvalid
from .mac import MacParams, Mode, SlotGeometry, validate_slot_geometry

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib


@dataclass(frozen=True)
class ScenarioSection:
    name: str = "scenario"
    mode: str = "slotted"
    n_nodes: int = 24
    duration_s: float = 3524.0
    seed: int = 0
    traffic: str = "poisson"
    tx_period_s: float = 13.0
    max_retries: int = 40
    # upper bound of the random backoff in slots; 30 gives roughly 0.9
    # attempts per second with 24 nodes requesting every 13 s
    backoff_nslots: int = 30
    # pure-ALOHA retry window; 0 means backoff_nslots * slot length
    backoff_tmax_s: float = 0.0


@dataclass(frozen=True)
class RadioSection:
    sf: int = 8
    bw_hz: int = 125_000
    cr: int = 1
    n_preamble: int = 8
    crc_on: bool = False
    low_dr_optimize: str = "auto"
    payload_bytes: int = 200


@dataclass(frozen=True)
class AckSection:
    payload_bytes: int = 8  # the piggybacked timestamp
    crc_on: bool = False


@dataclass(frozen=True)
class TimingSection:
    rx1_delay_s: float = 1.0
    uplink_toa_us: int = 0  # 0: compute from [radio]
    ack_toa_us: int = 0  # 0: compute from [ack] with the uplink radio settings
    ack_guard_us: int = 2000


@dataclass(frozen=True)
class SlotSection:
    t_r_us: int = 0  # 0: exactly the uplink + RX1 + ACK lower bound
    t_b_us: int = 384_576


@dataclass(frozen=True)
class ClockSection:
    drift_ppm_min: float = 20.0
    drift_ppm_max: float = 80.0
    drift_sign: str = "random"  # random | positive
    resync_interval_s: float = 0.0  # 0: apply every received timestamp
    reboot_rate_per_hour: float = 0.0
    reboot_max_offset_us: int = 1_000_000
    initial_sync: bool = True


@dataclass(frozen=True)
class JitterSection:
    family: str = "lognormal"
    shift_us: float = 50.0
    median_us: float = 2868.0
    sigma: float = 0.45
    width_us: float = 0.0
    load_coeff: float = 0.33
    contention_window_s: float = 15.0
    rx_window_open_error_us: int = 20


@dataclass(frozen=True)
class ChannelSection:
    channel: int = 6
    orthogonal_sf: bool = True
    gateway_half_duplex: bool = True
    occupancy: str = "exchange"
    collision_mode: str = "exact"


SECTIONS = {
    "scenario": ScenarioSection,
    "radio": RadioSection,
    "ack": AckSection,
    "timing": TimingSection,
    "slot": SlotSection,
    "clock": ClockSection,
    "jitter": JitterSection,
    "channel": ChannelSection,
}


@dataclass(frozen=True)
class Scenario:
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    radio: RadioSection = field(default_factory=RadioSection)
    ack: AckSection = field(default_factory=AckSection)
    timing: TimingSection = field(default_factory=TimingSection)
    slot: SlotSection = field(default_factory=SlotSection)
    clock: ClockSection = field(default_factory=ClockSection)
    jitter: JitterSection = field(default_factory=JitterSection)
    channel: ChannelSection = field(default_factory=ChannelSection)

    # -- construction --------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Scenario":
        unknown = set(data) - set(SECTIONS)
        if unknown:
            raise ConfigInvalid("unknown-section", ", ".join(sorted(unknown)))
        parts = {}
        for name, klass in SECTIONS.items():
            raw = data.get(name, {})
            if not isinstance(raw, dict):
                raise ConfigInvalid("section-type", f"[{name}] must be a table")
            parts[name] = _build_section(name, klass, raw)
        return cls(**parts).validated()

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        p = Path(path)
        try:
            text = p.read_bytes()
        except OSError as exc:
            raise ConfigInvalid("config-file", f"{p}: {exc.strerror or exc}") from exc
        try:
            data = tomllib.loads(text.decode("utf-8"))
        except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
            raise ConfigInvalid("config-syntax", f"{p}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict[str, dict[str, Any]]:
        return {name: dataclasses.asdict(getattr(self, name)) for name in SECTIONS}

    def with_overrides(self, overrides: dict[str, Any]) -> "Scenario":
        """Copy with dotted-path overrides, e.g. ``{"slot.t_b_us": 50_000}``."""
        data = self.to_dict()
        for path, value in overrides.items():
            section, _, key = path.partition(".")
            if section not in data or key not in data[section]:
                raise ConfigInvalid("unknown-key", path)
            data[section][key] = value
        return Scenario.from_dict(data)

    # -- derived quantities ----------------------------------------------------

    @property
    def mode(self) -> Mode:
        return Mode(self.scenario.mode)

    def radio_config(self, crc_on: bool | None = None) -> RadioConfig:
        r = self.radio
        de = {"auto": None, "on": True, "off": False}[r.low_dr_optimize]
        return RadioConfig(
            sf=r.sf,
            bw_hz=r.bw_hz,
            cr=r.cr,
            n_preamble=r.n_preamble,
            crc_on=r.crc_on if crc_on is None else crc_on,
            low_dr_optimize=de,
        )

    @property
    def uplink_frame(self) -> FrameSpec:
        return FrameSpec(self.radio_config(), self.radio.payload_bytes)

    @property
    def ack_frame(self) -> FrameSpec:
        # downlink reuses the uplink data rate
        return FrameSpec(self.radio_config(crc_on=self.ack.crc_on), self.ack.payload_bytes)

    @property
    def uplink_toa_us(self) -> int:
        return self.timing.uplink_toa_us or time_on_air_us(self.uplink_frame)

    @property
    def ack_toa_us(self) -> int:
        return self.timing.ack_toa_us or time_on_air_us(self.ack_frame)

    @property
    def rx1_delay_us(self) -> int:
        return round(self.timing.rx1_delay_s * 1_000_000)

    @property
    def exchange_us(self) -> int:
        """Uplink + RX1 delay + ACK."""
        return self.uplink_toa_us + self.rx1_delay_us + self.ack_toa_us

    @property
    def geometry(self) -> SlotGeometry:
        t_r = self.slot.t_r_us or self.exchange_us
        return SlotGeometry(t_r_us=t_r, t_b_us=self.slot.t_b_us)

    @property
    def full_packet_us(self) -> int:
        """Channel time charged per attempt under the full-exchange normalization."""
        if self.mode is Mode.SLOTTED:
            return self.geometry.slot_us
        if self.mode is Mode.PURE_CONFIRMED:
            return self.exchange_us
        return self.uplink_toa_us

    @property
    def backoff_tmax_us(self) -> int:
        if self.scenario.backoff_tmax_s > 0:
            return round(self.scenario.backoff_tmax_s * 1_000_000)
        return self.scenario.backoff_nslots * self.geometry.slot_us

    def mac_params(self) -> MacParams:
        mode = self.mode
        return MacParams(
            mode=mode,
            ack_timeout_us=self.rx1_delay_us + self.ack_toa_us + self.timing.ack_guard_us,
            max_retries=self.scenario.max_retries,
            backoff_nslots=self.scenario.backoff_nslots,
            backoff_tmax_us=self.backoff_tmax_us,
            geometry=self.geometry if mode is Mode.SLOTTED else None,
        )

    def channel_model(self) -> ChannelModel:
        c = self.channel
        return ChannelModel(
            orthogonal_sf=c.orthogonal_sf,
            forced_channel=c.channel,
            gateway_half_duplex=c.gateway_half_duplex,
            occupancy=c.occupancy,
            collision_mode=c.collision_mode,
        )

    def timestamper(self) -> GatewayTimestamper:
        j = self.jitter
        return GatewayTimestamper(
            jitter_model=JitterModel(
                family=j.family, shift_us=j.shift_us, median_us=j.median_us, sigma=j.sigma, width_us=j.width_us
            ),
            rx_window_open_error_us=j.rx_window_open_error_us,
            load_coeff=j.load_coeff,
            contention_window_s=j.contention_window_s,
        )

    # -- validation ------------------------------------------------------------

    def validated(self) -> "Scenario":
        s = self.scenario
        try:
            Mode(s.mode)
        except ValueError:
            raise ConfigInvalid("mode", repr(s.mode)) from None
        if s.n_nodes < 0:
            raise ConfigInvalid("n-nodes", repr(s.n_nodes))
        if not s.duration_s > 0:
            raise ConfigInvalid("duration", repr(s.duration_s))
        if s.traffic not in ("poisson", "periodic"):
            raise ConfigInvalid("traffic", repr(s.traffic))
        if not s.tx_period_s > 0:
            raise ConfigInvalid("tx-period", repr(s.tx_period_s))
        if s.backoff_tmax_s < 0:
            raise ConfigInvalid("backoff-tmax", repr(s.backoff_tmax_s))
        if self.radio.low_dr_optimize not in ("auto", "on", "off"):
            raise ConfigInvalid("low-dr-optimize", repr(self.radio.low_dr_optimize))
        self.uplink_frame, self.ack_frame  # radio/frame validation
        if self.timing.rx1_delay_s < 0 or self.timing.ack_guard_us < 0:
            raise ConfigInvalid("timing", repr(self.timing))
        if self.timing.uplink_toa_us < 0 or self.timing.ack_toa_us < 0:
            raise ConfigInvalid("timing", repr(self.timing))
        c = self.clock
        if not 0 <= c.drift_ppm_min <= c.drift_ppm_max:
            raise ConfigInvalid("drift-range", f"[{c.drift_ppm_min}, {c.drift_ppm_max}]")
        if c.drift_sign not in ("random", "positive"):
            raise ConfigInvalid("drift-sign", repr(c.drift_sign))
        if c.resync_interval_s < 0 or c.reboot_rate_per_hour < 0 or c.reboot_max_offset_us < 0:
            raise ConfigInvalid("clock", repr(c))
        self.timestamper()
        self.channel_model()
        self.mac_params()
        if self.mode is Mode.SLOTTED:
            report = validate_slot_geometry(
                self.uplink_toa_us, self.ack_toa_us, self.timing.rx1_delay_s, self.geometry
            )
            if not report.ok:
                raise ConfigInvalid(
                    "slot-geometry",
                    f"t_r={report.t_r_us} us < lower bound {report.lower_bound_us} us",
                )
        return self


def _build_section(name: str, klass, raw: dict[str, Any]):
    fields = {f.name: f for f in dataclasses.fields(klass)}
    unknown = set(raw) - set(fields)
    if unknown:
        raise ConfigInvalid("unknown-key", ", ".join(f"{name}.{k}" for k in sorted(unknown)))
    values = {}
    for key, value in raw.items():
        default = fields[key].default
        values[key] = _coerce(f"{name}.{key}", value, type(default))
    return klass(**values)


def _coerce(path: str, value: Any, kind: type) -> Any:
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigInvalid("key-type", f"{path} must be a boolean")
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigInvalid("key-type", f"{path} must be an integer")
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigInvalid("key-type", f"{path} must be a number")
        return float(value)
    if kind is str:
        if not isinstance(value, str):
            raise ConfigInvalid("key-type", f"{path} must be a string")
        return value
    return value


def dump_toml(scn: Scenario) -> str:
    """Serialize a scenario back to TOML (flat scalar tables only)."""
    lines = []
    for name, section in scn.to_dict().items():
        lines.append(f"[{name}]")
        for key, value in section.items():
            if isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, str):
                text = '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
            else:
                text = repr(value)
            lines.append(f"{key} = {text}")
        lines.append("")
    return "\n".join(lines)
