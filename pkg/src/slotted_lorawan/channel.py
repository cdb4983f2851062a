"""Single-gateway channel: transmissions, overlap rules and collision outcomes."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .errors import ConfigInvalid

GATEWAY = -1
GRID_US = 1000


class Direction(str, Enum):
    UPLINK = "up"
    DOWNLINK = "down"


class Outcome(str, Enum):
    SUCCESS = "success"
    COLLIDED = "collided"
    GATEWAY_BUSY = "gateway-busy"  # uplink arrived while the gateway was transmitting


@dataclass(frozen=True)
class Transmission:
    """One frame on air.  ``hold_until_us`` extends the channel occupancy
    past the end of the frame (used by the exchange-occupancy model);
    ``reply_to`` links an ACK to the uplink whose reserved span it sits in.
    """

    tx_id: int
    start_us: int
    end_us: int
    channel: int
    sf: int
    direction: Direction = Direction.UPLINK
    node_id: int = GATEWAY
    hold_until_us: int | None = None
    reply_to: int | None = None

    def __post_init__(self):
        if self.end_us <= self.start_us:
            raise ConfigInvalid("tx-interval", f"[{self.start_us}, {self.end_us}]")
        if self.hold_until_us is not None and self.hold_until_us < self.end_us:
            raise ConfigInvalid("tx-hold", f"hold {self.hold_until_us} < end {self.end_us}")

    @property
    def occupancy_end_us(self) -> int:
        return self.end_us if self.hold_until_us is None else self.hold_until_us


@dataclass(frozen=True)
class ChannelModel:
    orthogonal_sf: bool = True
    forced_channel: int | None = 6
    gateway_half_duplex: bool = True
    occupancy: str = "airtime"  # or "exchange"
    collision_mode: str = "exact"  # or "grid" (1 ms polling)

    def __post_init__(self):
        if self.occupancy not in ("airtime", "exchange"):
            raise ConfigInvalid("occupancy", repr(self.occupancy))
        if self.collision_mode not in ("exact", "grid"):
            raise ConfigInvalid("collision-mode", repr(self.collision_mode))


def _span(tx: Transmission, model: ChannelModel) -> tuple[int, int]:
    """Half-open occupancy interval, in µs or in 1 ms grid ticks."""
    lo, hi = tx.start_us, tx.occupancy_end_us
    if model.collision_mode == "grid":
        # ticks k with lo <= k*GRID_US < hi
        return -((-lo) // GRID_US), -((-hi) // GRID_US)
    return lo, hi


def overlaps(a: Transmission, b: Transmission, model: ChannelModel) -> bool:
    alo, ahi = _span(a, model)
    blo, bhi = _span(b, model)
    return alo < bhi and blo < ahi


def interferes(a: Transmission, b: Transmission, model: ChannelModel) -> bool:
    if a.channel != b.channel:
        return False
    if a.reply_to == b.tx_id or b.reply_to == a.tx_id:
        return False
    if model.orthogonal_sf and a.sf != b.sf:
        return False
    return overlaps(a, b, model)


def detect_collisions(
    transmissions: Iterable[Transmission], model: ChannelModel = ChannelModel()
) -> dict[int, Outcome]:
    """Mark every transmission that shares channel time with an interferer.

    Sweep over start times; any positive-length overlap on the same channel
    (and same SF when SFs are orthogonal) loses both frames.  No capture.
    """
    txs = sorted(transmissions, key=lambda t: (_span(t, model)[0], t.tx_id))
    out = {t.tx_id: Outcome.SUCCESS for t in txs}
    active: list[Transmission] = []
    for tx in txs:
        lo = _span(tx, model)[0]
        active = [a for a in active if _span(a, model)[1] > lo]
        for other in active:
            if interferes(tx, other, model):
                out[tx.tx_id] = Outcome.COLLIDED
                out[other.tx_id] = Outcome.COLLIDED
        active.append(tx)
    return out


def half_duplex_losses(transmissions: Iterable[Transmission], model: ChannelModel) -> set[int]:
    """Uplinks that overlap any gateway downlink, on any channel or SF."""
    if not model.gateway_half_duplex:
        return set()
    txs = list(transmissions)
    downs = [t for t in txs if t.direction is Direction.DOWNLINK]
    lost = set()
    for up in txs:
        if up.direction is not Direction.UPLINK:
            continue
        for d in downs:
            if up.start_us < d.end_us and d.start_us < up.end_us:
                lost.add(up.tx_id)
                break
    return lost


class Channel:
    """Incremental collision tracker used by the event loop.

    Transmissions must be registered in non-decreasing start order.  By the
    time a frame's occupancy ends, every frame that can overlap it has
    started, so its outcome is final from then on.
    """

    def __init__(self, model: ChannelModel):
        self.model = model
        self._active: list[Transmission] = []
        self._outcome: dict[int, Outcome] = {}
        self.log: list[Transmission] = []

    def _prune(self, now: int) -> None:
        self._active = [t for t in self._active if t.occupancy_end_us > now]

    def gateway_transmitting(self, start_us: int, end_us: int) -> bool:
        return any(
            t.direction is Direction.DOWNLINK and t.start_us < end_us and start_us < t.end_us
            for t in self._active
        )

    def begin(self, tx: Transmission) -> None:
        self._prune(tx.start_us)
        self._outcome[tx.tx_id] = Outcome.SUCCESS
        for other in self._active:
            if interferes(tx, other, self.model):
                self._collide(tx.tx_id)
                self._collide(other.tx_id)
        if self.model.gateway_half_duplex:
            if tx.direction is Direction.UPLINK:
                if self.gateway_transmitting(tx.start_us, tx.end_us):
                    self._busy(tx.tx_id)
            else:
                for other in self._active:
                    if other.direction is Direction.UPLINK and other.end_us > tx.start_us:
                        self._busy(other.tx_id)
        self._active.append(tx)
        self.log.append(tx)

    def _collide(self, tx_id: int) -> None:
        self._outcome[tx_id] = Outcome.COLLIDED

    def _busy(self, tx_id: int) -> None:
        if self._outcome[tx_id] is Outcome.SUCCESS:
            self._outcome[tx_id] = Outcome.GATEWAY_BUSY

    def outcome(self, tx_id: int) -> Outcome:
        return self._outcome[tx_id]

    def outcomes(self) -> dict[int, Outcome]:
        return dict(self._outcome)
