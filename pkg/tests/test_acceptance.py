"""Acceptance criteria, one test per criterion at its stated tolerance.

Each test records a PASS/FAIL line that is printed in the pytest summary.
"""

from __future__ import annotations

import csv
import io
import math

import numpy as np
import pytest

from slotted_lorawan import analytic as a
from slotted_lorawan.airtime import FrameSpec, RadioConfig, time_on_air, time_on_air_exact
from slotted_lorawan.channel import Outcome, Transmission, detect_collisions
from slotted_lorawan.cli import main
from slotted_lorawan.clock import max_drift_between_syncs
from slotted_lorawan.presets import PRESET_NAMES, load_preset, sync_run
from slotted_lorawan.scenario import Scenario
from slotted_lorawan.simulator import period_for_load, run

from .conftest import ideal, record
from .oracles import overlap_all_pairs, toa_rational

G_GRID = (0.1, 0.25, 0.5, 0.75, 1.0)
PACKETS = 10_000
N_NODES = 1000
PRESET_SEED = 7


def _poisson_point(base: Scenario, g: float, unit_us: int, seed: int):
    """Tune per-node period so that attempts offer ``g`` in units of ``unit_us``."""
    scn = base.with_overrides(
        {
            "scenario.tx_period_s": period_for_load(g, base.scenario.n_nodes, unit_us),
            "scenario.duration_s": PACKETS * 1.02 * unit_us / 1e6 / g,
        }
    )
    return run(scn, seed)


def test_c1_airtime_exactness():
    ms = time_on_air(FrameSpec(RadioConfig(sf=8, bw_hz=125_000, cr=1, n_preamble=8, crc_on=False), 200)) * 1e3
    ok = abs(ms - 553.47) <= 0.01
    assert record("C1", "airtime SF8/PL200", ok, f"{ms:.5f} ms vs 553.47 +/- 0.01")


def test_c2_airtime_differential():
    rng = np.random.default_rng(20240)
    mismatches = 0
    for _ in range(1000):
        sf = int(rng.integers(6, 13))
        cfg = RadioConfig(
            sf=sf,
            bw_hz=int(rng.choice([125_000, 250_000, 500_000])),
            cr=int(rng.integers(1, 5)),
            n_preamble=int(rng.integers(6, 66)),
            crc_on=bool(rng.integers(0, 2)),
            low_dr_optimize=bool(rng.integers(0, 2)) if sf >= 7 else False,
        )
        f = FrameSpec(cfg, int(rng.integers(0, 256)))
        want = toa_rational(cfg.sf, cfg.bw_hz, cfg.cr, cfg.n_preamble, f.payload_bytes, cfg.crc, cfg.de)
        mismatches += time_on_air_exact(f) != want
    assert record("C2", "airtime vs rational oracle", mismatches == 0, f"{mismatches}/1000 mismatches")


def test_c3_analytic_peaks():
    pure = a.pure_aloha_throughput(0.5)
    slotted = a.slotted_aloha_throughput(1.0)
    g_conf = a.argmax_g("confirmed", 2.22)
    conf = a.confirmed_lorawan_throughput(g_conf, 2.22)
    slotted_lw = a.slotted_lorawan_max_throughput(2.22)
    # exact closed forms at the stated tolerances
    exact = (
        abs(pure - 1 / (2 * math.e)) <= 1e-9
        and abs(slotted - 1 / math.e) <= 1e-9
        and abs(conf - 1 / (2 * math.e * 2.22)) <= 1e-6
        and abs(slotted_lw - 1 / (math.e * 2.22)) <= 1e-6
    )
    # quoted constants, to one unit in their last printed digit
    quoted = (
        abs(pure - 0.18394) <= 1e-5
        and abs(slotted - 0.36788) <= 1e-5
        and abs(conf - 0.08285) <= 1e-5
        and abs(g_conf - 0.2252) <= 1e-4
        and abs(slotted_lw - 0.1657) <= 1e-4
    )
    detail = f"pure {pure:.8f}, slotted {slotted:.8f}, confirmed {conf:.8f} at G={g_conf:.4f}, slotted-k {slotted_lw:.8f}"
    assert record("C3", "closed-form peaks", exact and quoted, detail)


def test_c4_pure_unconfirmed_monte_carlo():
    base = ideal(
        Scenario(),
        **{"scenario.mode": "pure-unconfirmed", "scenario.n_nodes": N_NODES, "scenario.max_retries": 0},
    )
    worst, parts = 0.0, []
    for i, g in enumerate(G_GRID):
        r = _poisson_point(base, g, base.uplink_toa_us, seed=100 + i)
        assert r.packets_sent >= PACKETS
        err = abs(r.s_payload - float(a.pure_aloha_throughput(r.g_payload)))
        worst = max(worst, err)
        parts.append(f"{r.g_payload:.2f}:{r.s_payload:.3f}")
    assert record("C4", "pure unconfirmed vs G e^-2G", worst <= 0.02, f"max |dS| = {worst:.4f} ({', '.join(parts)})")


def test_c5_pure_confirmed_sf12_peak():
    base = load_preset("fig6a_sf12").base.with_overrides({"scenario.n_nodes": 500})
    best = (0.0, 0.0)
    for i, g in enumerate((0.1, 0.15, 0.2, 0.225, 0.25, 0.3, 0.4)):
        r = _poisson_point(base, g, base.uplink_toa_us, seed=200 + i)
        if r.s_payload > best[0]:
            best = (r.s_payload, r.g_payload)
    s_peak, g_peak = best
    ok = abs(s_peak - 0.083) <= 0.015 and 0.18 <= g_peak <= 0.30
    assert record("C5", "pure confirmed SF12 peak", ok, f"S={s_peak:.4f} at G={g_peak:.3f} (want 0.083 +/- 0.015 near 0.22-0.25)")


def test_c6_ideal_slotted_oracle():
    base = ideal(
        Scenario(), **{"scenario.n_nodes": N_NODES, "scenario.max_retries": 0, "slot.t_b_us": 1}
    )
    slot = base.geometry.slot_us
    worst, parts = 0.0, []
    for i, g in enumerate(G_GRID):
        r = _poisson_point(base, g, slot, seed=300 + i)
        assert r.packets_sent >= PACKETS
        err = abs(r.s_full - float(a.slotted_aloha_throughput(r.g_full)))
        worst = max(worst, err)
        parts.append(f"{r.g_full:.2f}:{r.s_full:.3f}")
    assert record("C6", "ideal slotted vs G e^-G", worst <= 0.02, f"max |dS| = {worst:.4f} ({', '.join(parts)})")


def test_c7_drift_arithmetic():
    v = max_drift_between_syncs(80, 2400)
    assert record("C7", "drift budget 80 ppm x 2400 s", v == 192_000, f"{v} us")


def test_c8_sync_calibration():
    base = load_preset("table1_sync").base
    st = sync_run(base, 4, seed=PRESET_SEED, min_samples=10_000)
    mean_ms, max_ms = st.mean / 1e3, st.max / 1e3
    ok = st.count == 10_000 and 3.0 <= mean_ms <= 7.0 and max_ms < 45.0
    assert record("C8", "sync error, 4 nodes", ok, f"n={st.count} mean {mean_ms:.3f} ms, max {max_ms:.3f} ms")


@pytest.fixture(scope="module")
def preset_outputs(tmp_path_factory):
    """Every preset run twice through the CLI with the same seed."""
    out = {}
    d = tmp_path_factory.mktemp("presets")
    for name in PRESET_NAMES:
        blobs = []
        for k in range(2):
            path = d / f"{name}.{k}.csv"
            assert main(["--seed", str(PRESET_SEED), "--out", str(path), "preset", name]) == 0
            blobs.append(path.read_bytes())
        out[name] = blobs
    return out


def _rows(blob: bytes):
    return list(csv.DictReader(io.StringIO(blob.decode())))


def test_c9_tolerance_sweep(preset_outputs):
    rows = _rows(preset_outputs["table4_tb_sweep"][0])
    tb = [int(r["t_b_ms"]) for r in rows]
    errors = [int(r["slot_errors"]) for r in rows]
    rate = {int(r["t_b_ms"]): float(r["slot_success_rate"]) for r in rows}
    monotone = all(x >= y for x, y in zip(errors, errors[1:]))
    ok = (
        tb == [50, 100, 150, 200, 250, 300]
        and monotone
        and all(rate[t] >= 0.97 for t in tb if t >= 100)
        and rate[50] <= 0.90
    )
    detail = f"errors {errors}, slot success {[round(rate[t], 3) for t in tb]}"
    assert record("C9", "slot errors vs T_b", ok, detail)


def test_c10_improvement_floor(preset_outputs):
    rows = _rows(preset_outputs["table3_comparison"][0])
    summary = rows[-1]
    assert summary["seed"] == "mean" and len(rows) == 11
    ratio = float(summary["ratio"])
    ok = math.isfinite(ratio) and ratio >= 2.0
    detail = f"mean ratio {ratio:.3f} (95% CI {float(summary['ratio_ci95_low']):.3f}-{float(summary['ratio_ci95_high']):.3f}, 10 seeds)"
    assert record("C10", "slotted / pure confirmed S", ok, detail)


def test_c11_determinism(preset_outputs):
    same = [name for name, (x, y) in preset_outputs.items() if x == y and x]
    ok = len(same) == len(PRESET_NAMES)
    assert record("C11", "byte-identical preset reruns", ok, f"{len(same)}/{len(PRESET_NAMES)} presets identical")


def test_c12_collision_oracle():
    rng = np.random.default_rng(4242)
    bad = 0
    for _ in range(500):
        n = int(rng.integers(1, 21))
        txs = []
        for i in range(n):
            start = int(rng.integers(0, 20_000))
            txs.append(
                Transmission(i, start, start + int(rng.integers(1, 5_000)), int(rng.integers(0, 2)), int(rng.integers(7, 9)))
            )
        out = detect_collisions(txs)
        got = {t.tx_id for t in txs if out[t.tx_id] is Outcome.COLLIDED}
        bad += got != overlap_all_pairs([(t.start_us, t.end_us, t.channel, t.sf) for t in txs])
    assert record("C12", "collisions vs all-pairs checker", bad == 0, f"{bad}/500 scenarios differ")
