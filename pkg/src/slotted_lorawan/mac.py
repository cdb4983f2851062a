"""Per-node MAC state machines.

One transition function, :func:`step`, drives all three modes.  It is pure
given its inputs and the RNG stream: it returns the next :class:`MacState`
plus a list of actions for the simulator to carry out.  Times handed to and
returned from :func:`step` are on the node's *local* clock.

Edges (``*`` marks slotted-only, ``+`` confirmed/slotted only)::

    Init      --Boot-------------------> Wait        [Sleep]
    Wait      --TxRequested (pure)-----> Send        [StartUplink, IncrementSent]
    Wait      --TxRequested *----------> Wait        [ArmTimer(TxLoraSlotted)]
    Wait      --TimerFired(TxLoraSlotted) *-> Send   [StartUplink, IncrementSent]
    Send      --TxComplete (unconf.)---> Wait        []
    Send      --TxComplete +-----------> WaitForAck  [ArmTimer(TimerAck)]
    WaitForAck--AckReceived +----------> Wait        [Disarm(TimerAck)]
    WaitForAck--TimerFired(TimerAck) +-> Rand        [ArmTimer(TimerBackOff), IncrementLost]
                                     or  Wait        [IncrementLost, Drop] once retries run out
    Rand      --TimerFired(TimerBackOff) +-> Send    [StartUplink, IncrementSent]
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .airtime import FrameSpec, time_on_air_us
from .errors import ConfigInvalid, IllegalTransition


class State(str, Enum):
    INIT = "Init"
    WAIT = "Wait"
    SEND = "Send"
    WAIT_FOR_ACK = "WaitForAck"
    RAND = "Rand"

    def __str__(self):
        return self.value


class Mode(str, Enum):
    PURE_UNCONFIRMED = "pure-unconfirmed"
    PURE_CONFIRMED = "pure-confirmed"
    SLOTTED = "slotted"

    def __str__(self):
        return self.value

    @property
    def confirmed(self) -> bool:
        return self is not Mode.PURE_UNCONFIRMED


TX_LORA_SLOTTED = "TxLoraSlotted"
TIMER_BACKOFF = "TimerBackOff"
TIMER_ACK = "TimerAck"
TIMERS = (TX_LORA_SLOTTED, TIMER_BACKOFF, TIMER_ACK)


# -- events -----------------------------------------------------------------------


@dataclass(frozen=True)
class Boot:
    def __str__(self):
        return "Boot"


@dataclass(frozen=True)
class TxRequested:
    def __str__(self):
        return "TxRequested"


@dataclass(frozen=True)
class TxComplete:
    def __str__(self):
        return "TxComplete"


@dataclass(frozen=True)
class AckReceived:
    def __str__(self):
        return "AckReceived"


@dataclass(frozen=True)
class TimerFired:
    name: str

    def __str__(self):
        return f"TimerFired({self.name})"


# -- actions ----------------------------------------------------------------------


@dataclass(frozen=True)
class StartUplink:
    def __str__(self):
        return "StartUplink"


@dataclass(frozen=True)
class ArmTimer:
    name: str
    deadline_us: int

    def __str__(self):
        return f"ArmTimer({self.name},{self.deadline_us})"


@dataclass(frozen=True)
class Disarm:
    name: str

    def __str__(self):
        return f"Disarm({self.name})"


@dataclass(frozen=True)
class IncrementSent:
    def __str__(self):
        return "IncrementSent"


@dataclass(frozen=True)
class IncrementLost:
    def __str__(self):
        return "IncrementLost"


@dataclass(frozen=True)
class Drop:
    """Retry budget exhausted; the application packet is abandoned."""

    def __str__(self):
        return "Drop"


@dataclass(frozen=True)
class Sleep:
    def __str__(self):
        return "Sleep"


# -- slot geometry ----------------------------------------------------------------


@dataclass(frozen=True)
class SlotGeometry:
    """A slot is ``t_r_us`` of exchange time followed by ``t_b_us`` of tolerance."""

    t_r_us: int
    t_b_us: int

    def __post_init__(self):
        if self.t_r_us <= 0 or self.t_b_us < 0:
            raise ConfigInvalid("slot-geometry", f"t_r={self.t_r_us} t_b={self.t_b_us}")

    @property
    def slot_us(self) -> int:
        return self.t_r_us + self.t_b_us


def next_slot_start(local_time_us: int, geometry: SlotGeometry) -> int:
    """First slot boundary strictly after ``local_time_us``."""
    T = geometry.slot_us
    return (local_time_us // T + 1) * T


def slot_index(local_time_us: int, geometry: SlotGeometry) -> int:
    """Index of the slot boundary nearest to ``local_time_us``."""
    T = geometry.slot_us
    return (local_time_us + T // 2) // T


def slot_lower_bound_us(uplink_toa_us: int, ack_toa_us: int, rx1_delay_us: int) -> int:
    return uplink_toa_us + rx1_delay_us + ack_toa_us


@dataclass(frozen=True)
class SlotReport:
    ok: bool
    t_r_us: int
    lower_bound_us: int

    @property
    def slack_us(self) -> int:
        return self.t_r_us - self.lower_bound_us


def validate_slot_geometry(
    frame: FrameSpec | int, ack: FrameSpec | int, rx1_delay_s: float, geometry: SlotGeometry
) -> SlotReport:
    """Check that uplink, RX1 delay and ACK all fit inside ``t_r``.

    ``frame`` and ``ack`` may be given as frames or as airtimes in µs.
    """
    up = frame if isinstance(frame, int) else time_on_air_us(frame)
    dn = ack if isinstance(ack, int) else time_on_air_us(ack)
    bound = slot_lower_bound_us(up, dn, round(rx1_delay_s * 1_000_000))
    return SlotReport(ok=geometry.t_r_us >= bound, t_r_us=geometry.t_r_us, lower_bound_us=bound)


# -- node configuration -----------------------------------------------------------


@dataclass(frozen=True)
class MacParams:
    """Everything :func:`step` needs besides state, event and time."""

    mode: Mode
    ack_timeout_us: int = 0
    max_retries: int = 40
    backoff_nslots: int = 10
    backoff_tmax_us: int = 0
    geometry: SlotGeometry | None = None

    def __post_init__(self):
        if self.max_retries < 0:
            raise ConfigInvalid("max-retries", repr(self.max_retries))
        if self.backoff_nslots < 1:
            raise ConfigInvalid("backoff-nslots", repr(self.backoff_nslots))
        if self.backoff_tmax_us < 0 or self.ack_timeout_us < 0:
            raise ConfigInvalid("mac-timing", repr(self))
        if self.mode is Mode.SLOTTED and self.geometry is None:
            raise ConfigInvalid("slot-geometry", "slotted mode needs a SlotGeometry")


@dataclass(frozen=True)
class NodeConfig:
    node_id: int
    frame: FrameSpec
    tx_period_s: float
    max_retries: int = 40
    backoff_nslots: int = 10
    mode: Mode = Mode.SLOTTED

    def __post_init__(self):
        if not self.tx_period_s > 0:
            raise ConfigInvalid("tx-period", repr(self.tx_period_s))
        if self.max_retries < 0:
            raise ConfigInvalid("max-retries", repr(self.max_retries))
        if self.backoff_nslots < 1:
            raise ConfigInvalid("backoff-nslots", repr(self.backoff_nslots))


# -- state machine ----------------------------------------------------------------


@dataclass(frozen=True)
class MacState:
    state: State = State.INIT
    timers: tuple[tuple[str, int], ...] = field(default=())
    attempt: int = 0  # uplinks sent for the current application packet

    def armed(self, name: str) -> bool:
        return any(n == name for n, _ in self.timers)

    def deadline(self, name: str) -> int | None:
        for n, d in self.timers:
            if n == name:
                return d
        return None

    def _arm(self, name: str, deadline: int) -> "MacState":
        kept = tuple(t for t in self.timers if t[0] != name)
        return replace(self, timers=tuple(sorted(kept + ((name, deadline),))))

    def _disarm(self, name: str) -> "MacState":
        return replace(self, timers=tuple(t for t in self.timers if t[0] != name))


def _backoff_deadline(now: int, params: MacParams, rng: np.random.Generator) -> int:
    if params.mode is Mode.SLOTTED:
        u = int(rng.integers(0, params.backoff_nslots, endpoint=True))
        return next_slot_start(now, params.geometry) + u * params.geometry.slot_us
    if params.backoff_tmax_us == 0:
        return now
    return now + int(rng.integers(0, params.backoff_tmax_us, endpoint=True))


def step(mac: MacState, event, now_us: int, params: MacParams, rng: np.random.Generator):
    """Advance one node's MAC by one event; returns ``(new_state, actions)``."""
    s = mac.state
    mode = params.mode

    if s is State.INIT and isinstance(event, Boot):
        return replace(mac, state=State.WAIT, timers=()), [Sleep()]

    if s is State.WAIT:
        if isinstance(event, TxRequested) and not mac.timers:
            if mode is Mode.SLOTTED:
                deadline = next_slot_start(now_us, params.geometry)
                return mac._arm(TX_LORA_SLOTTED, deadline), [ArmTimer(TX_LORA_SLOTTED, deadline)]
            return replace(mac, state=State.SEND, attempt=1), [StartUplink(), IncrementSent()]
        if (
            mode is Mode.SLOTTED
            and isinstance(event, TimerFired)
            and event.name == TX_LORA_SLOTTED
            and mac.armed(TX_LORA_SLOTTED)
        ):
            nxt = replace(mac._disarm(TX_LORA_SLOTTED), state=State.SEND, attempt=1)
            return nxt, [StartUplink(), IncrementSent()]

    elif s is State.SEND and isinstance(event, TxComplete):
        if not mode.confirmed:
            return replace(mac, state=State.WAIT, attempt=0), []
        deadline = now_us + params.ack_timeout_us
        nxt = replace(mac._arm(TIMER_ACK, deadline), state=State.WAIT_FOR_ACK)
        return nxt, [ArmTimer(TIMER_ACK, deadline)]

    elif s is State.WAIT_FOR_ACK and mode.confirmed:
        if isinstance(event, AckReceived) and mac.armed(TIMER_ACK):
            return replace(mac._disarm(TIMER_ACK), state=State.WAIT, attempt=0), [Disarm(TIMER_ACK)]
        if isinstance(event, TimerFired) and event.name == TIMER_ACK and mac.armed(TIMER_ACK):
            base = mac._disarm(TIMER_ACK)
            if mac.attempt > params.max_retries:
                return replace(base, state=State.WAIT, attempt=0), [IncrementLost(), Drop()]
            deadline = _backoff_deadline(now_us, params, rng)
            nxt = replace(base._arm(TIMER_BACKOFF, deadline), state=State.RAND)
            return nxt, [ArmTimer(TIMER_BACKOFF, deadline), IncrementLost()]

    elif s is State.RAND and mode.confirmed:
        if isinstance(event, TimerFired) and event.name == TIMER_BACKOFF and mac.armed(TIMER_BACKOFF):
            nxt = replace(mac._disarm(TIMER_BACKOFF), state=State.SEND, attempt=mac.attempt + 1)
            return nxt, [StartUplink(), IncrementSent()]

    raise IllegalTransition(s, event)


def next_request_delay_us(tx_period_s: float, rng: np.random.Generator, traffic: str = "poisson") -> int:
    """Delay until the next application request.

    ``poisson`` draws an exponential gap with mean ``tx_period_s``;
    ``periodic`` returns the period itself.
    """
    if tx_period_s <= 0:
        raise ConfigInvalid("tx-period", repr(tx_period_s))
    if traffic == "periodic":
        return round(tx_period_s * 1_000_000)
    if traffic == "poisson":
        return max(1, round(float(rng.exponential(tx_period_s)) * 1_000_000))
    raise ConfigInvalid("traffic", repr(traffic))


def pure_aloha_schedule(cfg: NodeConfig, now_us: int, rng: np.random.Generator) -> int:
    """True time of the node's next Poisson transmission request."""
    if cfg.mode is Mode.SLOTTED:
        raise ConfigInvalid("mode", "pure_aloha_schedule needs a pure-ALOHA node")
    return now_us + next_request_delay_us(cfg.tx_period_s, rng)


def retry_delay_us(tmax_us: int, rng: np.random.Generator) -> int:
    """Uniform retransmission delay in ``[0, tmax_us]``."""
    if tmax_us <= 0:
        return 0
    return int(rng.integers(0, tmax_us, endpoint=True))


# -- ACK wire format ----------------------------------------------------------------

TIMESTAMP_BYTES = 8
_TS = struct.Struct("<Q")


def encode_ack_payload(gateway_timestamp_us: int, ack_bytes: bytes = b"") -> bytes:
    """ACK payload: ``ack_bytes`` followed by the timestamp as little-endian u64 microseconds."""
    if not 0 <= gateway_timestamp_us < 2**64:
        raise ConfigInvalid("timestamp-range", repr(gateway_timestamp_us))
    return bytes(ack_bytes) + _TS.pack(gateway_timestamp_us)


def decode_ack_payload(payload: bytes) -> tuple[bytes, int]:
    """Inverse of :func:`encode_ack_payload`: ``(ack_bytes, timestamp_us)``."""
    if len(payload) < TIMESTAMP_BYTES:
        raise ConfigInvalid("ack-payload-short", f"{len(payload)} bytes")
    return bytes(payload[:-TIMESTAMP_BYTES]), _TS.unpack(payload[-TIMESTAMP_BYTES:])[0]
