"""Closed-form S(G) against small Monte-Carlo runs of the event simulator."""

# %%
import numpy as np

from slotted_lorawan import analytic as a
from slotted_lorawan.scenario import Scenario
from slotted_lorawan.simulator import period_for_load, run

k = a.overhead_factor(a.OverheadModel(t_payload_s=1.253, t_ack_s=0.530, rx1_delay_s=1.0))
print(f"overhead factor k = {k:.4f}")
for name, g in (("pure", 0.5), ("confirmed", a.argmax_g("confirmed", k)), ("slotted", 1.0)):
    print(f"{name:10s} peak at G={g:.4f}: S={a.throughput(name, g, k):.4f}")

# %%
# Ideal channel: no drift, no timestamp jitter, one attempt per request.
ideal = {
    "scenario.n_nodes": 500,
    "scenario.max_retries": 0,
    "clock.drift_ppm_min": 0.0,
    "clock.drift_ppm_max": 0.0,
    "jitter.family": "constant",
    "jitter.shift_us": 0.0,
    "jitter.rx_window_open_error_us": 0,
    "slot.t_b_us": 1,
}


def sweep_mode(mode, unit_of):
    base = Scenario().with_overrides({**ideal, "scenario.mode": mode})
    unit = unit_of(base)
    rows = []
    for g in (0.25, 0.5, 1.0, 1.5):
        scn = base.with_overrides(
            {"scenario.tx_period_s": period_for_load(g, 500, unit), "scenario.duration_s": 3000 * unit / 1e6 / g}
        )
        rows.append(run(scn, seed=1))
    return rows


print("\npure unconfirmed (payload-time G)")
for r in sweep_mode("pure-unconfirmed", lambda s: s.uplink_toa_us):
    print(f"  G={r.g_payload:.3f}  S_sim={r.s_payload:.3f}  G e^-2G={a.pure_aloha_throughput(r.g_payload):.3f}")

print("\nslotted (slot-time G)")
for r in sweep_mode("slotted", lambda s: s.geometry.slot_us):
    print(f"  G={r.g_full:.3f}  S_sim={r.s_full:.3f}  G e^-G={a.slotted_aloha_throughput(r.g_full):.3f}")

# %%
# The curve table the CLI prints with `slotted-lorawan curves`
np.set_printoptions(suppress=True)
table = np.array(a.curves(0.0, 3.0, 7, k))
print("\n", a.CURVE_HEADER)
print(np.round(table, 4))
