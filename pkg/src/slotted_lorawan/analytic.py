"""Closed-form ALOHA throughput curves.

``g`` is always the dimensionless offered load (attempts per payload time).
The confirmed-LoRaWAN curve stretches the pure-ALOHA vulnerability window by
the overhead factor ``k`` = (uplink + RX1 delay + ACK) / uplink.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigInvalid, ZeroPayloadTime

RX1_DELAY_S = 1.0


@dataclass(frozen=True)
class OfferedLoad:
    g: float

    def __post_init__(self):
        if not self.g >= 0:
            raise ConfigInvalid("g-nonnegative", f"g={self.g!r}")

    @classmethod
    def from_rate(cls, rate_per_s: float, packet_time_s: float) -> "OfferedLoad":
        """Offered load from an aggregate attempt rate and a packet time."""
        return cls(rate_per_s * packet_time_s)

    def __float__(self):
        return float(self.g)


@dataclass(frozen=True)
class OverheadModel:
    t_payload_s: float
    t_ack_s: float = 0.0
    rx1_delay_s: float = RX1_DELAY_S

    def __post_init__(self):
        for name in ("t_payload_s", "t_ack_s", "rx1_delay_s"):
            if getattr(self, name) < 0:
                raise ConfigInvalid("overhead-nonnegative", f"{name}={getattr(self, name)!r}")


def overhead_factor(m: OverheadModel) -> float:
    if m.t_payload_s == 0:
        raise ZeroPayloadTime("uplink time on air must be positive")
    return (m.t_payload_s + m.rx1_delay_s + m.t_ack_s) / m.t_payload_s


def _g(g) -> float:
    return float(g.g) if isinstance(g, OfferedLoad) else g


def pure_aloha_throughput(g):
    """``g * exp(-2g)``; accepts scalars, arrays or :class:`OfferedLoad`."""
    g = _g(g)
    return g * np.exp(-2.0 * g) if isinstance(g, np.ndarray) else g * math.exp(-2.0 * g)


def confirmed_lorawan_throughput(g, k: float):
    g = _g(g)
    if k < 1:
        raise ConfigInvalid("overhead-k", f"k={k!r} < 1")
    return g * np.exp(-2.0 * k * g) if isinstance(g, np.ndarray) else g * math.exp(-2.0 * k * g)


def slotted_aloha_throughput(g):
    g = _g(g)
    return g * np.exp(-g) if isinstance(g, np.ndarray) else g * math.exp(-g)


def slotted_lorawan_max_throughput(k: float) -> float:
    """Peak slotted throughput when every slot carries ``k`` payload times."""
    if k < 1:
        raise ConfigInvalid("overhead-k", f"k={k!r} < 1")
    return 1.0 / (math.e * k)


def slotted_lorawan_throughput(g, k: float):
    """Slotted curve expressed in payload-time load.

    A slot lasts ``k`` payload times, so ``g`` payload-normalized attempts
    correspond to ``k*g`` attempts per slot; the result is rescaled back to
    payload time.  Its peak is :func:`slotted_lorawan_max_throughput`.
    """
    g = _g(g)
    if k < 1:
        raise ConfigInvalid("overhead-k", f"k={k!r} < 1")
    return slotted_aloha_throughput(k * g) / k


def argmax_g(model: str, k: float = 1.0) -> float:
    """Offered load at which a model peaks: ``pure``, ``confirmed`` or ``slotted``."""
    if model == "pure":
        return 0.5
    if model == "confirmed":
        if k < 1:
            raise ConfigInvalid("overhead-k", f"k={k!r} < 1")
        return 1.0 / (2.0 * k)
    if model == "slotted":
        return 1.0
    raise ConfigInvalid("unknown-model", repr(model))


def throughput(model: str, g, k: float = 1.0):
    if model == "pure":
        return pure_aloha_throughput(g)
    if model == "confirmed":
        return confirmed_lorawan_throughput(g, k)
    if model == "slotted":
        return slotted_aloha_throughput(g)
    raise ConfigInvalid("unknown-model", repr(model))


CURVE_HEADER = ("g", "s_pure", "s_confirmed", "s_slotted", "s_slotted_lorawan")


def curves(g_min: float, g_max: float, g_steps: int, k: float) -> list[tuple[float, ...]]:
    """Rows of the four theoretical curves over an inclusive linear G grid."""
    if g_steps < 1:
        raise ConfigInvalid("g-steps", f"g_steps={g_steps!r}")
    if g_min < 0 or g_max < g_min:
        raise ConfigInvalid("g-range", f"[{g_min}, {g_max}]")
    grid = np.linspace(g_min, g_max, g_steps) if g_steps > 1 else np.array([g_min])
    return [
        (
            float(g),
            pure_aloha_throughput(float(g)),
            confirmed_lorawan_throughput(float(g), k),
            slotted_aloha_throughput(float(g)),
            slotted_lorawan_throughput(float(g), k),
        )
        for g in grid
    ]
