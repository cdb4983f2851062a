from __future__ import annotations

import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slotted_lorawan.clock import (
    ZERO_JITTER,
    GatewayTimestamper,
    JitterModel,
    SyncSample,
    VirtualClock,
    clock_error_us,
    max_drift_between_syncs,
    read_clock,
    read_sync_csv,
    reboot,
    sample_gateway_timestamp,
    sample_jitter_us,
    sample_rx_open_error_us,
    sync_error_stats,
    synchronize,
    true_time_of,
    write_sync_csv,
)
from slotted_lorawan.errors import ConfigInvalid, EmptySamples, NegativeElapsed, TimeReversal


def test_drift_budget_exact():
    assert max_drift_between_syncs(80, 2400) == 192_000
    assert max_drift_between_syncs(20, 2400) == 48_000


def test_drift_budget_rejects_negative():
    with pytest.raises(ConfigInvalid):
        max_drift_between_syncs(-1, 10)


def test_read_clock_drift():
    c = VirtualClock(drift_ppm=50.0, offset_us=100)
    assert read_clock(c, 1_000_000) == 1_000_000 + 100 + 50
    assert clock_error_us(c, 10_000_000) == 600


def test_time_reversal():
    c = VirtualClock(last_sync_true_us=5_000)
    with pytest.raises(TimeReversal):
        read_clock(c, 4_999)


def test_drift_bound():
    with pytest.raises(ConfigInvalid):
        VirtualClock(drift_ppm=2000.0)


def test_sync_with_zero_jitter_is_exact():
    c = VirtualClock(drift_ppm=80.0, offset_us=-12_345)
    tx_end_true = 100_000_000
    ack_true = tx_end_true + 1_000_000
    tx_local = read_clock(c, tx_end_true)
    ack_local = read_clock(c, ack_true)
    synced = synchronize(c, tx_local, ack_local, tx_end_true, ack_true)
    # residual is the drift over the one-second round trip
    assert clock_error_us(synced, ack_true) == 80
    assert read_clock(synced, ack_true) == ack_true + 80


def test_sync_error_equals_jitter():
    c = VirtualClock()
    synced = synchronize(c, 10_000, 1_010_000, 10_000 + 3_000, 1_010_000)
    assert clock_error_us(synced, 1_010_000) == 3_000


def test_sync_negative_elapsed():
    with pytest.raises(NegativeElapsed):
        synchronize(VirtualClock(), 1000, 999, 0, 1000)


@given(
    drift=st.floats(-100, 100, allow_nan=False),
    offset=st.integers(-10**6, 10**6),
    local=st.integers(0, 10**11),
)
def test_true_time_of_inverts_read_clock(drift, offset, local):
    c = VirtualClock(drift_ppm=drift, offset_us=offset)
    t = true_time_of(c, local)
    assert t >= 0
    if t > 0:
        assert read_clock(c, t - 1) < local or t == 0
    assert read_clock(c, t) >= local or t == 0


@given(drift=st.floats(-1000, 1000, allow_nan=False), a=st.integers(0, 10**11), b=st.integers(0, 10**11))
def test_read_clock_monotone(drift, a, b):
    c = VirtualClock(drift_ppm=drift)
    lo, hi = sorted((a, b))
    assert read_clock(c, lo) <= read_clock(c, hi)


def test_reboot_offset_bounded(rng):
    for _ in range(200):
        c = reboot(VirtualClock(drift_ppm=10), 5_000_000, rng, 1_000_000)
        assert abs(c.offset_us) <= 1_000_000
        assert c.last_sync_true_us == 5_000_000


def test_jitter_nonnegative_and_mean(rng):
    ts = GatewayTimestamper()
    xs = np.array([sample_jitter_us(ts, rng) for _ in range(20_000)])
    assert xs.min() >= 0
    assert xs.mean() == pytest.approx(ts.jitter_model.mean_us(), rel=0.03)


def test_jitter_load_scaling(rng):
    ts = GatewayTimestamper(jitter_model=JitterModel(family="constant", shift_us=1000.0), load_coeff=0.5)
    assert sample_jitter_us(ts, rng, 0) == 1000
    assert sample_jitter_us(ts, rng, 2) == 2000
    assert sample_gateway_timestamp(ts, 10, rng, 0) == 1010


@pytest.mark.parametrize(
    "model,mean",
    [
        (JitterModel(family="uniform", shift_us=10, width_us=100), 60),
        (JitterModel(family="exponential", shift_us=0, median_us=200), 200),
        (ZERO_JITTER, 0),
    ],
)
def test_jitter_families(model, mean, rng):
    xs = [model.sample(rng) for _ in range(20_000)]
    assert min(xs) >= 0
    assert np.mean(xs) == pytest.approx(mean, abs=max(3.0, 0.03 * mean))


def test_jitter_invalid():
    with pytest.raises(ConfigInvalid):
        JitterModel(family="gamma")
    with pytest.raises(ConfigInvalid):
        JitterModel(shift_us=-1)


def test_rx_open_error_range(rng):
    ts = GatewayTimestamper(rx_window_open_error_us=20)
    xs = {sample_rx_open_error_us(ts, rng) for _ in range(5000)}
    assert min(xs) == -20 and max(xs) == 20
    assert sample_rx_open_error_us(GatewayTimestamper(rx_window_open_error_us=0), rng) == 0


def test_stats_nearest_rank():
    st_ = sync_error_stats([-4, 1, 2, 3])
    assert (st_.min, st_.max, st_.mean) == (1, 4, 2.5)
    assert (st_.p25, st_.median, st_.p75) == (1, 2, 3)
    assert st_.count == 4


def test_stats_empty():
    with pytest.raises(EmptySamples):
        sync_error_stats([])


def test_sync_csv_roundtrip():
    samples = [SyncSample(0, 10, -5), SyncSample(3, 20, 7)]
    buf = io.StringIO()
    write_sync_csv(buf, samples)
    buf.seek(0)
    assert read_sync_csv(buf) == samples


def test_sync_csv_bad_header():
    with pytest.raises(ConfigInvalid):
        read_sync_csv(io.StringIO("a,b\n1,2\n"))


def test_lognormal_tail_is_light(rng):
    ts = GatewayTimestamper()
    xs = np.array([sample_jitter_us(ts, rng, 3) for _ in range(10_000)])
    assert math.isfinite(xs.max()) and xs.max() < 45_000
