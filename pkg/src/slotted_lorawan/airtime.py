"""LoRa symbol timing and time-on-air.

All arithmetic is carried out on :class:`fractions.Fraction` so the ceiling
in the payload-symbol count never sees a rounded float.  Public functions
return seconds as ``float``; the ``*_us`` variants return integer
microseconds rounded half-up, which is what the simulator consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ConfigInvalid, DegenerateConfig

SF_RANGE = (6, 12)
CR_RANGE = (1, 4)
STANDARD_BANDWIDTHS = (125_000, 250_000, 500_000)
MAX_PAYLOAD_BYTES = 255

# fixed symbols the transceiver appends to the programmed preamble
PREAMBLE_EXTRA = Fraction(17, 4)


@dataclass(frozen=True)
class RadioConfig:
    """Modulation parameters of one LoRa transmission.

    ``low_dr_optimize=None`` selects the automatic rule (enabled for SF11
    and SF12); pass a bool to override it.
    """

    sf: int
    bw_hz: int = 125_000
    cr: int = 1
    n_preamble: int = 8
    crc_on: bool = True
    low_dr_optimize: bool | None = field(default=None)

    def __post_init__(self):
        if not isinstance(self.sf, int) or not SF_RANGE[0] <= self.sf <= SF_RANGE[1]:
            raise ConfigInvalid("sf-range", f"sf={self.sf!r} not in [6, 12]")
        if self.bw_hz <= 0:
            raise ConfigInvalid("bw-positive", f"bw_hz={self.bw_hz!r}")
        if not isinstance(self.cr, int) or not CR_RANGE[0] <= self.cr <= CR_RANGE[1]:
            raise ConfigInvalid("cr-range", f"cr={self.cr!r} not in [1, 4]")
        if not isinstance(self.n_preamble, int) or self.n_preamble < 1:
            raise ConfigInvalid("preamble-positive", f"n_preamble={self.n_preamble!r}")
        if self.low_dr_optimize is None:
            object.__setattr__(self, "low_dr_optimize", self.sf >= 11)

    @property
    def de(self) -> int:
        return int(bool(self.low_dr_optimize))

    @property
    def crc(self) -> int:
        return int(bool(self.crc_on))

    def replace(self, **changes) -> "RadioConfig":
        fields = dict(
            sf=self.sf,
            bw_hz=self.bw_hz,
            cr=self.cr,
            n_preamble=self.n_preamble,
            crc_on=self.crc_on,
            low_dr_optimize=self.low_dr_optimize,
        )
        fields.update(changes)
        return RadioConfig(**fields)


@dataclass(frozen=True)
class FrameSpec:
    config: RadioConfig
    payload_bytes: int

    def __post_init__(self):
        if not isinstance(self.payload_bytes, int) or self.payload_bytes < 0:
            raise ConfigInvalid("payload-nonnegative", f"payload_bytes={self.payload_bytes!r}")
        if self.payload_bytes > MAX_PAYLOAD_BYTES:
            raise ConfigInvalid("payload-max", f"payload_bytes={self.payload_bytes} > 255")


def symbol_time_exact(config: RadioConfig) -> Fraction:
    return Fraction(2**config.sf, config.bw_hz)


def preamble_time_exact(config: RadioConfig) -> Fraction:
    return symbol_time_exact(config) * (config.n_preamble + PREAMBLE_EXTRA)


def payload_symbols(frame: FrameSpec) -> int:
    """Number of PHY payload symbols, never below the 8-symbol floor."""
    cfg = frame.config
    denom = 4 * (cfg.sf - 2 * cfg.de)
    if denom <= 0:
        raise DegenerateConfig(f"4*(sf - 2*de) = {denom}")
    numer = 28 + 8 * frame.payload_bytes + 16 * cfg.crc - 4 * cfg.sf
    blocks = -((-numer) // denom)  # integer ceil, exact for negative numer too
    return 8 + max(blocks * (cfg.cr + 4), 0)


def time_on_air_exact(frame: FrameSpec) -> Fraction:
    cfg = frame.config
    return preamble_time_exact(cfg) + symbol_time_exact(cfg) * payload_symbols(frame)


def symbol_time(config: RadioConfig) -> float:
    """Symbol duration in seconds, ``2**sf / bw``."""
    return float(symbol_time_exact(config))


def preamble_time(config: RadioConfig) -> float:
    return float(preamble_time_exact(config))


def time_on_air(frame: FrameSpec) -> float:
    """Total frame duration in seconds (preamble plus PHY payload)."""
    return float(time_on_air_exact(frame))


def seconds_to_us(value: Fraction | float | int) -> int:
    """Round a duration in seconds to integer microseconds, half-up."""
    us = Fraction(value) * 1_000_000
    return int((us + Fraction(1, 2)) // 1)


def symbol_time_us(config: RadioConfig) -> int:
    return seconds_to_us(symbol_time_exact(config))


def preamble_time_us(config: RadioConfig) -> int:
    return seconds_to_us(preamble_time_exact(config))


def time_on_air_us(frame: FrameSpec) -> int:
    return seconds_to_us(time_on_air_exact(frame))


def data_rate(config: RadioConfig) -> float:
    """Raw data rate in bit/s, ``SF * BW / 2**SF * 4 / (CR + 4)``."""
    return float(Fraction(config.sf * config.bw_hz, 2**config.sf) * Fraction(4, config.cr + 4))


def equivalent_bit_rate(config: RadioConfig) -> float:
    """Equivalent bit rate in bit/s, ``SF * BW / 2**SF * CR``.

    Kept separate from :func:`data_rate` on purpose: the two expressions
    scale differently with the coding rate and are not interchangeable.
    """
    return float(Fraction(config.sf * config.bw_hz, 2**config.sf) * config.cr)


def airtime_report(frame: FrameSpec) -> dict[str, str]:
    """Fixed-order key/value summary used by the ``airtime`` command."""
    cfg = frame.config
    return {
        "t_sym_us": str(symbol_time_us(cfg)),
        "t_preamble_us": str(preamble_time_us(cfg)),
        "n_phy": str(payload_symbols(frame)),
        "t_on_air_us": str(time_on_air_us(frame)),
        "dr_bps": f"{data_rate(cfg):.3f}",
        "ebr_bps": f"{equivalent_bit_rate(cfg):.3f}",
    }
