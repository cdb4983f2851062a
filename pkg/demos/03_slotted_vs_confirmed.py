"""24 nodes, one request every 13 s: slotted versus pure confirmed LoRaWAN."""

# %%
from slotted_lorawan.presets import load_preset, preset_table3, summarize_ratios

base = load_preset("table3_comparison").base
print(f"{base.scenario.n_nodes} nodes, period {base.scenario.tx_period_s} s, {base.scenario.duration_s} s per run")

# %%
ratios = []
print(f"{'seed':>4} {'sent S/P':>11} {'succ S/P':>13} {'S slotted':>10} {'S pure':>8} {'ratio':>6}")
for seed in range(5):
    res = preset_table3(seed, base)
    s, p = res.slotted, res.pure
    ratios.append(res.ratio)
    print(
        f"{seed:4d} {s.packets_sent:5d}/{p.packets_sent:<5d} {s.success_rate:6.3f}/{p.success_rate:<6.3f}"
        f" {s.s_payload:10.4f} {p.s_payload:8.4f} {res.ratio:6.2f}"
    )

# %%
summ = summarize_ratios(ratios)
print(f"\nmean ratio {summ.mean:.2f}, 95% CI [{summ.ci95_low:.2f}, {summ.ci95_high:.2f}] over {summ.n} seeds")

# %%
# The confirmed exchange keeps the channel busy through RX1 and the ACK.
# With airtime-only occupancy other nodes may use the RX1 gap; at this load
# that is enough to put the pure protocol ahead.
airtime = base.with_overrides({"channel.occupancy": "airtime"})
res = preset_table3(0, airtime)
print(f"airtime occupancy, seed 0: ratio {res.ratio:.2f}")
