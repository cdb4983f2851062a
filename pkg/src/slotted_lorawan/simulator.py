"""Deterministic discrete-event engine for one gateway and many Class-A nodes.

RNG splitting: node ``i`` draws from
``np.random.SeedSequence(seed, spawn_key=(i, stream))`` with one stream per
purpose (traffic, MAC backoff, clock, gateway jitter), so adding a node
never changes another node's draws.
"""

from __future__ import annotations

import csv
import heapq
import io
import json
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import product
from typing import Any, Iterable, Sequence

import numpy as np

from . import mac as m
from .channel import GATEWAY, Channel, Direction, Outcome, Transmission
from .clock import (
    SyncSample,
    VirtualClock,
    read_clock,
    reboot,
    sample_gateway_timestamp,
    sample_jitter_us,
    sample_rx_open_error_us,
    synchronize,
    true_time_of,
)
from .errors import ConfigInvalid
from .scenario import Scenario

STREAM_TRAFFIC, STREAM_MAC, STREAM_CLOCK, STREAM_JITTER = range(4)

# event kinds
_REQUEST, _TIMER, _TX_END, _ACK_START, _ACK_END, _REBOOT = range(6)

NORMALIZATIONS = ("payload", "full", "per-second")


def node_rng(seed: int, node_id: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(node_id, stream))))


@dataclass
class _Node:
    node_id: int
    clock: VirtualClock
    mac: m.MacState
    rng_traffic: np.random.Generator
    rng_mac: np.random.Generator
    rng_clock: np.random.Generator
    rng_jitter: np.random.Generator
    pending: bool = False
    last_sync_local: int = 0
    uplink: Transmission | None = None
    uplink_end_local: int = 0
    uplink_slot: int | None = None
    awaiting_ack: bool = False
    timer_gen: int = 0


@dataclass
class RunLog:
    """Raw counters and samples collected by :func:`run`."""

    scenario: Scenario
    seed: int
    duration_us: int
    packets_sent: int = 0
    packets_acked: int = 0
    packets_lost: int = 0
    packets_in_flight: int = 0
    requests: int = 0
    requests_coalesced: int = 0
    packets_dropped: int = 0
    collisions: int = 0
    gateway_busy_losses: int = 0
    acks_sent: int = 0
    acks_blocked: int = 0
    acks_collided: int = 0
    slotted_uplinks: int = 0
    slot_errors: int = 0
    reboots: int = 0
    uplinks_per_attempt_max: int = 0
    sync_samples: list[SyncSample] = field(default_factory=list)
    slot_samples: list[SyncSample] = field(default_factory=list)
    transmissions: list[Transmission] = field(default_factory=list)
    outcomes: dict[int, Outcome] = field(default_factory=dict)
    airtime_us_per_node: dict[int, int] = field(default_factory=dict)
    trace: list[tuple] | None = None


@dataclass(frozen=True)
class MetricsReport:
    scenario: str
    seed: int
    mode: str
    n_nodes: int
    duration_s: float
    packets_sent: int
    packets_acked: int
    packets_lost: int
    packets_in_flight: int
    success_rate: float
    normalization: str
    g: float
    s: float
    g_payload: float
    g_full: float
    g_per_second: float
    s_payload: float
    s_full: float
    s_per_second: float
    collisions: int
    gateway_busy_losses: int
    acks_blocked: int
    acks_collided: int
    slotted_uplinks: int
    slot_errors: int
    slot_success_rate: float
    packets_dropped: int
    requests: int
    requests_coalesced: int
    max_duty_cycle: float
    sync_error_samples: tuple[SyncSample, ...] = ()

    @property
    def tx_success_rate(self) -> float:
        return self.success_rate

    def csv_row(self) -> dict[str, Any]:
        return {k: getattr(self, k) for k in CSV_HEADER}


CSV_HEADER = (
    "scenario",
    "seed",
    "mode",
    "n_nodes",
    "duration_s",
    "packets_sent",
    "packets_acked",
    "success_rate",
    "g_payload",
    "g_full",
    "s_payload",
    "s_full",
    "collisions",
    "slot_errors",
)


class _Engine:
    def __init__(self, scn: Scenario, seed: int, trace: bool, keep_transmissions: bool):
        self.scn = scn
        self.seed = seed
        self.mode = scn.mode
        self.params = scn.mac_params()
        self.geometry = scn.geometry if self.mode is m.Mode.SLOTTED else None
        self.model = scn.channel_model()
        self.channel = Channel(self.model)
        self.ts = scn.timestamper()
        self.up_us = scn.uplink_toa_us
        self.ack_us = scn.ack_toa_us
        self.rx1_us = scn.rx1_delay_us
        self.end_us = round(scn.scenario.duration_s * 1_000_000)
        self.resync_us = round(scn.clock.resync_interval_s * 1_000_000)
        self.window_us = round(self.ts.contention_window_s * 1_000_000)
        self.exchange_hold = self.model.occupancy == "exchange" and self.mode.confirmed
        self.heap: list = []
        self.seq = 0
        self.tx_seq = 0
        self.heard: deque[tuple[int, int]] = deque()
        self.keep_tx = keep_transmissions
        self.log = RunLog(scenario=scn, seed=seed, duration_us=self.end_us, trace=[] if trace else None)
        self.nodes = [self._make_node(i) for i in range(scn.scenario.n_nodes)]

    # -- setup ---------------------------------------------------------------------

    def _make_node(self, i: int) -> _Node:
        c = self.scn.clock
        rng_clock = node_rng(self.seed, i, STREAM_CLOCK)
        rng_jitter = node_rng(self.seed, i, STREAM_JITTER)
        drift = float(rng_clock.uniform(c.drift_ppm_min, c.drift_ppm_max))
        if c.drift_sign == "random" and rng_clock.random() < 0.5:
            drift = -drift
        offset = sample_jitter_us(self.ts, rng_jitter) if c.initial_sync else 0
        return _Node(
            node_id=i,
            clock=VirtualClock(drift_ppm=drift, offset_us=offset, last_sync_true_us=0),
            mac=m.MacState(),
            rng_traffic=node_rng(self.seed, i, STREAM_TRAFFIC),
            rng_mac=node_rng(self.seed, i, STREAM_MAC),
            rng_clock=rng_clock,
            rng_jitter=rng_jitter,
            last_sync_local=offset,
        )

    def push(self, t: int, kind: int, *payload) -> None:
        heapq.heappush(self.heap, (t, self.seq, kind, payload))
        self.seq += 1

    # -- main loop -----------------------------------------------------------------

    def run(self) -> RunLog:
        rate = self.scn.clock.reboot_rate_per_hour
        for node in self.nodes:
            self._step(node, m.Boot(), 0)
            period = self.scn.scenario.tx_period_s
            if self.scn.scenario.traffic == "periodic":
                first = int(node.rng_traffic.integers(1, round(period * 1e6), endpoint=True))
            else:
                first = m.next_request_delay_us(period, node.rng_traffic)
            self.push(first, _REQUEST, node.node_id)
            if rate > 0:
                self.push(self._reboot_gap(node, rate), _REBOOT, node.node_id)

        handlers = {
            _REQUEST: self._on_request,
            _TIMER: self._on_timer,
            _TX_END: self._on_tx_end,
            _ACK_START: self._on_ack_start,
            _ACK_END: self._on_ack_end,
            _REBOOT: self._on_reboot,
        }
        while self.heap:
            t, _, kind, payload = heapq.heappop(self.heap)
            if t > self.end_us:
                break
            handlers[kind](t, *payload)
        self._finish()
        return self.log

    def _finish(self) -> None:
        log = self.log
        log.packets_in_flight = log.packets_sent - log.packets_acked - log.packets_lost
        log.outcomes = self.channel.outcomes()
        for tx in self.channel.log:
            if tx.direction is Direction.UPLINK:
                outcome = log.outcomes[tx.tx_id]
                if outcome is Outcome.COLLIDED:
                    log.collisions += 1
                elif outcome is Outcome.GATEWAY_BUSY:
                    log.gateway_busy_losses += 1
        if self.keep_tx:
            log.transmissions = list(self.channel.log)

    # -- helpers ---------------------------------------------------------------------

    def _local(self, node: _Node, t: int) -> int:
        return read_clock(node.clock, t)

    def _step(self, node: _Node, event, t: int) -> None:
        before = node.mac.state
        local = self._local(node, t)
        node.mac, actions = m.step(node.mac, event, local, self.params, node.rng_mac)
        if self.log.trace is not None:
            self.log.trace.append(
                (t, node.node_id, str(before), str(node.mac.state), str(event), ";".join(map(str, actions)))
            )
        for act in actions:
            self._apply(node, act, t, local)
        if node.mac.state is m.State.WAIT and not node.mac.timers and node.pending:
            node.pending = False
            self._step(node, m.TxRequested(), t)

    def _apply(self, node: _Node, act, t: int, local: int) -> None:
        log = self.log
        if isinstance(act, m.StartUplink):
            self._start_uplink(node, t, local)
        elif isinstance(act, m.IncrementSent):
            log.packets_sent += 1
            log.uplinks_per_attempt_max = max(log.uplinks_per_attempt_max, node.mac.attempt)
        elif isinstance(act, m.IncrementLost):
            log.packets_lost += 1
            node.awaiting_ack = False
        elif isinstance(act, m.Drop):
            log.packets_dropped += 1
        elif isinstance(act, m.ArmTimer):
            self._schedule_timer(node, act.name, act.deadline_us, t)

    def _schedule_timer(self, node: _Node, name: str, deadline_local: int, t: int) -> None:
        fire = max(t, true_time_of(node.clock, deadline_local))
        self.push(fire, _TIMER, node.node_id, name, deadline_local, node.timer_gen)

    def _reboot_gap(self, node: _Node, rate_per_hour: float) -> int:
        return max(1, round(float(node.rng_clock.exponential(3600.0 / rate_per_hour)) * 1e6))

    # -- event handlers --------------------------------------------------------------

    def _on_request(self, t: int, node_id: int) -> None:
        node = self.nodes[node_id]
        self.log.requests += 1
        self.push(
            t + m.next_request_delay_us(self.scn.scenario.tx_period_s, node.rng_traffic, self.scn.scenario.traffic),
            _REQUEST,
            node_id,
        )
        if node.mac.state is m.State.WAIT and not node.mac.timers:
            self._step(node, m.TxRequested(), t)
        else:
            if node.pending:
                self.log.requests_coalesced += 1
            node.pending = True

    def _on_timer(self, t: int, node_id: int, name: str, deadline: int, gen: int) -> None:
        node = self.nodes[node_id]
        if gen != node.timer_gen or node.mac.deadline(name) != deadline:
            return  # disarmed or re-armed since
        self._step(node, m.TimerFired(name), t)

    def _start_uplink(self, node: _Node, t: int, local: int) -> None:
        end = t + self.up_us
        hold = end + self.rx1_us + self.ack_us if self.exchange_hold else None
        tx = Transmission(
            tx_id=self.tx_seq,
            start_us=t,
            end_us=end,
            channel=self.scn.channel.channel,
            sf=self.scn.radio.sf,
            direction=Direction.UPLINK,
            node_id=node.node_id,
            hold_until_us=hold,
        )
        self.tx_seq += 1
        self.channel.begin(tx)
        node.uplink = tx
        self.log.airtime_us_per_node[node.node_id] = self.log.airtime_us_per_node.get(node.node_id, 0) + self.up_us
        if self.geometry is not None:
            k = m.slot_index(local, self.geometry)
            deviation = t - k * self.geometry.slot_us
            node.uplink_slot = k
            self.log.slotted_uplinks += 1
            self.log.slot_samples.append(SyncSample(node.node_id, t, deviation))
            if abs(deviation) > self.geometry.t_b_us:
                self.log.slot_errors += 1
        self.push(end, _TX_END, node.node_id, tx.tx_id)

    def _on_tx_end(self, t: int, node_id: int, tx_id: int) -> None:
        node = self.nodes[node_id]
        tx = node.uplink
        node.uplink_end_local = self._local(node, t)
        # final for airtime occupancy; under exchange occupancy a later frame
        # can still hit the reserved span, so the ACK end re-checks it
        received = self.channel.outcome(tx_id) is Outcome.SUCCESS
        if received:
            n_pending = self._note_heard(t, node_id)
        if not self.mode.confirmed:
            if received:
                self.log.packets_acked += 1
            else:
                self.log.packets_lost += 1
            self._step(node, m.TxComplete(), t)
            return
        node.awaiting_ack = True
        self._step(node, m.TxComplete(), t)
        if received:
            gw_ts = sample_gateway_timestamp(self.ts, t, node.rng_jitter, n_pending)
            self.push(t + self.rx1_us, _ACK_START, node_id, tx_id, m.encode_ack_payload(gw_ts))

    def _note_heard(self, t: int, node_id: int) -> int:
        """Record a received uplink; return distinct *other* nodes heard recently."""
        heard = self.heard
        while heard and heard[0][0] <= t - self.window_us:
            heard.popleft()
        n = len({nid for _, nid in heard if nid != node_id})
        heard.append((t, node_id))
        return n

    def _on_ack_start(self, t: int, node_id: int, uplink_id: int, payload: bytes) -> None:
        end = t + self.ack_us
        if self.model.gateway_half_duplex and self.channel.gateway_transmitting(t, end):
            self.log.acks_blocked += 1
            return
        tx = Transmission(
            tx_id=self.tx_seq,
            start_us=t,
            end_us=end,
            channel=self.scn.channel.channel,
            sf=self.scn.radio.sf,
            direction=Direction.DOWNLINK,
            node_id=GATEWAY,
            reply_to=uplink_id,
        )
        self.tx_seq += 1
        self.channel.begin(tx)
        self.log.acks_sent += 1
        self.push(end, _ACK_END, node_id, uplink_id, tx.tx_id, payload)

    def _on_ack_end(self, t: int, node_id: int, uplink_id: int, ack_id: int, payload: bytes) -> None:
        node = self.nodes[node_id]
        # under exchange occupancy the uplink's reserved span ends here too
        if self.channel.outcome(ack_id) is not Outcome.SUCCESS or (
            self.channel.outcome(uplink_id) is not Outcome.SUCCESS
        ):
            self.log.acks_collided += 1
            return
        if not (node.mac.state is m.State.WAIT_FOR_ACK and node.awaiting_ack):
            return  # TimerAck already expired
        _, gw_ts = m.decode_ack_payload(payload)
        ack_local = self._local(node, t) + sample_rx_open_error_us(self.ts, node.rng_jitter)
        ack_local = max(ack_local, node.uplink_end_local)
        if self.resync_us == 0 or ack_local - node.last_sync_local >= self.resync_us:
            node.clock = synchronize(node.clock, node.uplink_end_local, ack_local, gw_ts, t)
            node.last_sync_local = read_clock(node.clock, t)
            self.log.sync_samples.append(SyncSample(node_id, t, node.clock.offset_us))
        self.log.packets_acked += 1
        node.awaiting_ack = False
        self._step(node, m.AckReceived(), t)

    def _on_reboot(self, t: int, node_id: int) -> None:
        node = self.nodes[node_id]
        self.log.reboots += 1
        node.clock = reboot(node.clock, t, node.rng_clock, self.scn.clock.reboot_max_offset_us)
        node.last_sync_local = -(1 << 62)  # next timestamp is always applied
        # armed timers hold local deadlines; re-map them onto the new clock
        node.timer_gen += 1
        for name, deadline in node.mac.timers:
            self._schedule_timer(node, name, deadline, t)
        self.push(t + self._reboot_gap(node, self.scn.clock.reboot_rate_per_hour), _REBOOT, node_id)


def simulate(scn: Scenario, seed: int | None = None, *, trace: bool = False, keep_transmissions: bool = False) -> RunLog:
    """Run one scenario and return the raw log."""
    scn = scn.validated()
    seed = scn.scenario.seed if seed is None else seed
    return _Engine(scn, seed, trace, keep_transmissions).run()


def compute_metrics(log: RunLog, normalization: str = "payload") -> MetricsReport:
    """Aggregate a run log.

    Three offered-load normalizations are computed side by side; the chosen
    one is mirrored into ``g`` and ``s``.  ``payload`` charges each attempt
    its uplink airtime, ``full`` the slot length (slotted) or the whole
    uplink-RX1-ACK exchange (pure confirmed), ``per-second`` charges 1 s.
    """
    if normalization not in NORMALIZATIONS:
        raise ConfigInvalid("normalization", repr(normalization))
    scn = log.scenario
    duration = log.duration_us
    completed = log.packets_acked + log.packets_lost
    success = log.packets_acked / completed if completed else 0.0
    sent = log.packets_sent

    def load(t_us: int) -> float:
        return sent * t_us / duration if duration else 0.0

    g_payload = load(scn.uplink_toa_us)
    g_full = load(scn.full_packet_us)
    g_sec = load(1_000_000)
    gs = {"payload": g_payload, "full": g_full, "per-second": g_sec}
    airtime = log.airtime_us_per_node
    return MetricsReport(
        scenario=scn.scenario.name,
        seed=log.seed,
        mode=str(scn.mode),
        n_nodes=scn.scenario.n_nodes,
        duration_s=duration / 1e6,
        packets_sent=sent,
        packets_acked=log.packets_acked,
        packets_lost=log.packets_lost,
        packets_in_flight=log.packets_in_flight,
        success_rate=success,
        normalization=normalization,
        g=gs[normalization],
        s=gs[normalization] * success,
        g_payload=g_payload,
        g_full=g_full,
        g_per_second=g_sec,
        s_payload=g_payload * success,
        s_full=g_full * success,
        s_per_second=g_sec * success,
        collisions=log.collisions,
        gateway_busy_losses=log.gateway_busy_losses,
        acks_blocked=log.acks_blocked,
        acks_collided=log.acks_collided,
        slotted_uplinks=log.slotted_uplinks,
        slot_errors=log.slot_errors,
        slot_success_rate=1.0 - log.slot_errors / log.slotted_uplinks if log.slotted_uplinks else 1.0,
        packets_dropped=log.packets_dropped,
        requests=log.requests,
        requests_coalesced=log.requests_coalesced,
        max_duty_cycle=max(airtime.values()) / duration if airtime and duration else 0.0,
        sync_error_samples=tuple(log.sync_samples),
    )


def run(scn: Scenario, seed: int | None = None, normalization: str = "payload") -> MetricsReport:
    """Simulate and aggregate in one call."""
    return compute_metrics(simulate(scn, seed), normalization)


# -- output -------------------------------------------------------------------------


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def reports_to_csv(reports: Iterable[MetricsReport]) -> str:
    return rows_to_csv([r.csv_row() for r in reports], CSV_HEADER)


def rows_to_csv(rows: Sequence[dict[str, Any]], header: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(row.get(k, "")) for k in header])
    return buf.getvalue()


def rows_to_json(rows: Sequence[dict[str, Any]], header: Sequence[str]) -> str:
    return json.dumps([{k: row.get(k) for k in header} for row in rows], indent=1) + "\n"


TRACE_HEADER = ("true_time_us", "node_id", "state_from", "state_to", "event", "action")


def trace_to_csv(trace: Iterable[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    w.writerows(trace)
    return buf.getvalue()


# -- sweeps ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    overrides: tuple[tuple[str, Any], ...]
    seed: int


def _run_point(args) -> dict[str, Any]:
    base, point, normalization = args
    row: dict[str, Any] = {k: v for k, v in point.overrides}
    row["seed"] = point.seed
    try:
        scn = base.with_overrides(dict(point.overrides))
        report = run(scn, point.seed, normalization)
    except ConfigInvalid as exc:
        row["error"] = str(exc)
        return row
    row.update(report.csv_row())
    row["report"] = report
    row["error"] = ""
    return row


def sweep(
    base: Scenario,
    grid: dict[str, Sequence[Any]],
    seeds: Sequence[int] = (0,),
    normalization: str = "payload",
    workers: int = 1,
) -> list[dict[str, Any]]:
    """Run the Cartesian product of ``grid`` (dotted keys) times ``seeds``.

    Each row carries the overrides, the CSV fields and the full report under
    ``"report"``.  An invalid point yields a row with ``error`` set instead of
    aborting.  Rows come back in grid order whatever ``workers`` is.
    """
    if not grid:
        raise ConfigInvalid("sweep-grid", "grid is empty")
    keys = list(grid)
    for k in keys:
        if not list(grid[k]):
            raise ConfigInvalid("sweep-grid", f"no values for {k}")
    points = [
        SweepPoint(tuple(zip(keys, combo)), seed) for combo in product(*(grid[k] for k in keys)) for seed in seeds
    ]
    jobs = [(base, p, normalization) for p in points]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_point, jobs))
    return [_run_point(j) for j in jobs]


def period_for_load(g: float, n_nodes: int, packet_time_us: int) -> float:
    """Per-node mean request period (s) that offers load ``g`` in units of ``packet_time_us``."""
    if g <= 0:
        raise ConfigInvalid("g-positive", repr(g))
    return n_nodes * packet_time_us / 1e6 / g


def report_dict(report: MetricsReport) -> dict[str, Any]:
    d = asdict(report)
    d.pop("sync_error_samples")
    return d
