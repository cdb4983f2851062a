"""Drifting node clocks, gateway timestamping and RX1-piggybacked sync.

Times are integer microseconds.  "True" time is the simulator's reference
(and the gateway's clock); "local" time is what a node's RTC reads.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigInvalid, EmptySamples, NegativeElapsed, TimeReversal

DEFAULT_MAX_DRIFT_PPM = 1000.0


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


@dataclass(frozen=True)
class VirtualClock:
    """A node RTC: ``local = true + offset + drift * (true - last_sync)``."""

    drift_ppm: float = 0.0
    offset_us: int = 0
    last_sync_true_us: int = 0
    max_drift_ppm: float = DEFAULT_MAX_DRIFT_PPM

    def __post_init__(self):
        if abs(self.drift_ppm) > self.max_drift_ppm:
            raise ConfigInvalid("drift-bound", f"|{self.drift_ppm}| ppm > {self.max_drift_ppm}")


def read_clock(clock: VirtualClock, true_time_us: int) -> int:
    elapsed = true_time_us - clock.last_sync_true_us
    if elapsed < 0:
        raise TimeReversal(f"true time {true_time_us} precedes last sync {clock.last_sync_true_us}")
    return true_time_us + clock.offset_us + _round_half_up(clock.drift_ppm * 1e-6 * elapsed)


def clock_error_us(clock: VirtualClock, true_time_us: int) -> int:
    """Local minus true time."""
    return read_clock(clock, true_time_us) - true_time_us


def true_time_of(clock: VirtualClock, local_time_us: int) -> int:
    """Earliest true instant at which the clock reads at least ``local_time_us``."""
    rate = 1.0 + clock.drift_ppm * 1e-6
    base = clock.last_sync_true_us
    guess = base + math.ceil((local_time_us - base - clock.offset_us) / rate)
    guess = max(guess, base)
    # the forward map rounds, so settle the last microsecond explicitly
    while guess > base and read_clock(clock, guess - 1) >= local_time_us:
        guess -= 1
    while read_clock(clock, guess) < local_time_us:
        guess += 1
    return guess


def synchronize(
    clock: VirtualClock,
    tx_end_local_us: int,
    ack_rx_local_us: int,
    gateway_timestamp_us: int,
    true_time_us: int,
) -> VirtualClock:
    """Apply one RX1 timestamp.

    The node sets its clock to the gateway's uplink-end timestamp plus the
    locally measured time between its own uplink end and ACK reception.
    ``true_time_us`` is the reference instant of ACK reception, needed only
    to re-anchor the drift term.
    """
    if ack_rx_local_us < tx_end_local_us:
        raise NegativeElapsed(f"ACK at {ack_rx_local_us} before uplink end {tx_end_local_us}")
    new_local = gateway_timestamp_us + (ack_rx_local_us - tx_end_local_us)
    return replace(clock, offset_us=new_local - true_time_us, last_sync_true_us=true_time_us)


def reboot(clock: VirtualClock, true_time_us: int, rng: np.random.Generator, max_offset_us: int) -> VirtualClock:
    """RTC comes back unconfigured: a large random offset until the next sync."""
    offset = int(rng.integers(-max_offset_us, max_offset_us, endpoint=True))
    return replace(clock, offset_us=offset, last_sync_true_us=true_time_us)


def max_drift_between_syncs(drift_ppm: float, sync_interval_s: float) -> float:
    """Worst-case offset in microseconds accumulated over one sync interval.

    ppm times seconds is already microseconds, so no scaling is needed.
    """
    if drift_ppm < 0 or sync_interval_s < 0:
        raise ConfigInvalid("drift-nonnegative", f"{drift_ppm} ppm, {sync_interval_s} s")
    return drift_ppm * sync_interval_s


# -- gateway timestamping ---------------------------------------------------------

JITTER_FAMILIES = ("lognormal", "constant", "uniform", "exponential")


@dataclass(frozen=True)
class JitterModel:
    """Non-negative lag between the true uplink end and the gateway timestamp.

    ``lognormal``: ``shift_us + LogNormal(ln(median_us), sigma)``.
    ``constant``: always ``shift_us``.
    ``uniform``: ``shift_us + U[0, width_us]``.
    ``exponential``: ``shift_us + Exp(mean=median_us)``.

    The defaults give a 3.2 ms mean; under load the scale factor stretches
    the tail. See the calibration notes in the README.
    """

    family: str = "lognormal"
    shift_us: float = 50.0
    median_us: float = 2868.0
    sigma: float = 0.45
    width_us: float = 0.0

    def __post_init__(self):
        if self.family not in JITTER_FAMILIES:
            raise ConfigInvalid("jitter-family", repr(self.family))
        if self.shift_us < 0 or self.median_us < 0 or self.sigma < 0 or self.width_us < 0:
            raise ConfigInvalid("jitter-nonnegative", repr(self))

    def mean_us(self) -> float:
        if self.family == "lognormal":
            return self.shift_us + self.median_us * math.exp(self.sigma**2 / 2)
        if self.family == "uniform":
            return self.shift_us + self.width_us / 2
        if self.family == "exponential":
            return self.shift_us + self.median_us
        return self.shift_us

    def sample(self, rng: np.random.Generator) -> float:
        if self.family == "lognormal":
            if self.median_us == 0:
                return self.shift_us
            return self.shift_us + float(rng.lognormal(math.log(self.median_us), self.sigma))
        if self.family == "uniform":
            return self.shift_us + float(rng.uniform(0.0, self.width_us))
        if self.family == "exponential":
            return self.shift_us + float(rng.exponential(self.median_us)) if self.median_us else self.shift_us
        return self.shift_us


ZERO_JITTER = JitterModel(family="constant", shift_us=0.0)


@dataclass(frozen=True)
class GatewayTimestamper:
    """Gateway-side timestamp error model.

    The jitter scale grows as ``1 + load_coeff * n`` where ``n`` is the number
    of other nodes the gateway has heard from during the trailing
    ``contention_window_s``; this stands in for host-side process contention.
    """

    jitter_model: JitterModel = field(default_factory=JitterModel)
    rx_window_open_error_us: int = 20
    load_coeff: float = 0.33
    contention_window_s: float = 15.0

    def __post_init__(self):
        if self.rx_window_open_error_us < 0 or self.load_coeff < 0 or self.contention_window_s < 0:
            raise ConfigInvalid("timestamper-nonnegative", repr(self))

    def load_scale(self, n_pending: int) -> float:
        return 1.0 + self.load_coeff * n_pending


def sample_jitter_us(ts: GatewayTimestamper, rng: np.random.Generator, n_pending: int = 0) -> int:
    return _round_half_up(ts.jitter_model.sample(rng) * ts.load_scale(n_pending))


def sample_gateway_timestamp(
    ts: GatewayTimestamper, true_time_us: int, rng: np.random.Generator, n_pending: int = 0
) -> int:
    """True uplink-end time plus a non-negative jitter draw."""
    return true_time_us + sample_jitter_us(ts, rng, n_pending)


def sample_rx_open_error_us(ts: GatewayTimestamper, rng: np.random.Generator) -> int:
    h = ts.rx_window_open_error_us
    if h == 0:
        return 0
    return int(rng.integers(-h, h, endpoint=True))


# -- statistics -------------------------------------------------------------------


@dataclass(frozen=True)
class SyncSample:
    node_id: int
    true_time_us: int
    error_us: int


@dataclass(frozen=True)
class SyncStats:
    count: int
    min: float
    max: float
    mean: float
    p25: float
    median: float
    p75: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("count", "min", "max", "mean", "p25", "median", "p75")}


def nearest_rank(sorted_values: Sequence[float], pct: float) -> float:
    n = len(sorted_values)
    rank = max(1, math.ceil(pct / 100.0 * n))
    return sorted_values[min(rank, n) - 1]


def sync_error_stats(samples: Iterable[SyncSample | int | float]) -> SyncStats:
    """Order statistics of absolute sync errors (same unit as the input)."""
    values = sorted(abs(s.error_us) if isinstance(s, SyncSample) else abs(s) for s in samples)
    if not values:
        raise EmptySamples("no sync samples")
    return SyncStats(
        count=len(values),
        min=values[0],
        max=values[-1],
        mean=math.fsum(values) / len(values),
        p25=nearest_rank(values, 25),
        median=nearest_rank(values, 50),
        p75=nearest_rank(values, 75),
    )


SYNC_CSV_HEADER = ("node_id", "true_time_us", "error_us")


def write_sync_csv(fh, samples: Iterable[SyncSample]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SYNC_CSV_HEADER)
    for s in samples:
        w.writerow((s.node_id, s.true_time_us, s.error_us))


def read_sync_csv(fh) -> list[SyncSample]:
    r = csv.DictReader(fh)
    if tuple(r.fieldnames or ()) != SYNC_CSV_HEADER:
        raise ConfigInvalid("sync-csv-header", repr(r.fieldnames))
    return [SyncSample(int(row["node_id"]), int(row["true_time_us"]), int(row["error_us"])) for row in r]
