from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slotted_lorawan import analytic as a
from slotted_lorawan.errors import ZeroPayloadTime


def test_pure_peak():
    assert a.pure_aloha_throughput(0.5) == pytest.approx(0.18394, abs=1e-5)
    assert a.pure_aloha_throughput(0.5) == pytest.approx(1 / (2 * math.e), abs=1e-12)


def test_slotted_peak():
    assert a.slotted_aloha_throughput(1.0) == pytest.approx(1 / math.e, abs=1e-12)


def test_confirmed_peak_at_k_222():
    g = a.argmax_g("confirmed", 2.22)
    assert g == pytest.approx(0.2252, abs=1e-4)
    assert a.confirmed_lorawan_throughput(g, 2.22) == pytest.approx(0.08285, abs=1e-5)


def test_slotted_lorawan_peak():
    assert a.slotted_lorawan_max_throughput(2.22) == pytest.approx(0.1657, abs=1e-4)
    g = np.linspace(0.01, 3, 3000)
    assert a.slotted_lorawan_throughput(g, 2.22).max() == pytest.approx(a.slotted_lorawan_max_throughput(2.22), rel=1e-4)


def test_overhead_factor_from_quoted_airtimes():
    k = a.overhead_factor(a.OverheadModel(1.253, 0.53, 1.0))
    assert k == pytest.approx(2.2211, abs=1e-4)


def test_overhead_factor_sf8_example():
    k = a.overhead_factor(a.OverheadModel(0.55347, 0.0778, 1.0))
    assert k == pytest.approx(2.94735, abs=1e-5)
    assert round(k, 3) == pytest.approx(2.947)
    assert a.slotted_lorawan_max_throughput(2.948) == pytest.approx(0.12479, abs=1e-5)


def test_zero_payload_time():
    with pytest.raises(ZeroPayloadTime):
        a.overhead_factor(a.OverheadModel(0.0))


def test_offered_load_from_rate():
    assert a.OfferedLoad.from_rate(2.0, 0.25).g == pytest.approx(0.5)


def test_curves_shape():
    rows = a.curves(0.0, 3.0, 301, 2.22)
    assert len(rows) == 301
    assert rows[0] == (0.0, 0.0, 0.0, 0.0, 0.0)
    assert rows[-1][0] == pytest.approx(3.0)


@given(g=st.floats(0, 20, allow_nan=False), k=st.floats(1, 10, allow_nan=False))
def test_ordering_and_bounds(g, k):
    pure = a.pure_aloha_throughput(g)
    conf = a.confirmed_lorawan_throughput(g, k)
    slot = a.slotted_aloha_throughput(g)
    assert 0 <= conf <= pure + 1e-15 <= slot + 2e-15
    assert conf <= 1 / (2 * math.e * k) + 1e-12
    assert a.slotted_lorawan_throughput(g, k) <= a.slotted_lorawan_max_throughput(k) + 1e-12


@given(k=st.floats(1, 10, allow_nan=False))
def test_argmax_is_a_maximum(k):
    g = a.argmax_g("confirmed", k)
    s = a.confirmed_lorawan_throughput(g, k)
    for d in (0.9, 1.1):
        assert a.confirmed_lorawan_throughput(g * d, k) <= s


def test_vectorised_matches_scalar():
    g = np.array([0.1, 0.5, 1.0])
    np.testing.assert_allclose(a.pure_aloha_throughput(g), [a.pure_aloha_throughput(x) for x in g])
