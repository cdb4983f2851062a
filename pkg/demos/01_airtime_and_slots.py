"""Airtime of the uplink and its ACK, and the slot they have to fit in."""

# %%
from slotted_lorawan.airtime import FrameSpec, RadioConfig, airtime_report, time_on_air_us
from slotted_lorawan.clock import max_drift_between_syncs
from slotted_lorawan.mac import SlotGeometry, validate_slot_geometry

radio = RadioConfig(sf=8, bw_hz=125_000, cr=1, n_preamble=8, crc_on=False)
uplink = FrameSpec(radio, 200)
ack = FrameSpec(radio, 8)  # an 8-byte gateway timestamp

for label, frame in (("uplink", uplink), ("ack", ack)):
    print(label, airtime_report(frame))

# %%
# The slot must hold the uplink, the RX1 delay and the ACK.  The rest of the
# slot is a tolerance band that absorbs clock error between syncs.
geom = SlotGeometry(t_r_us=1_615_424, t_b_us=384_576)
rep = validate_slot_geometry(uplink, ack, 1.0, geom)
print(f"lower bound {rep.lower_bound_us} us, t_r {rep.t_r_us} us, slack {rep.slack_us} us")
print(f"slot length {geom.slot_us / 1e6:.3f} s")

# %%
# Worst-case drift between syncs for a few crystal grades
for ppm in (20, 50, 80):
    for minutes in (10, 40):
        drift_ms = max_drift_between_syncs(ppm, minutes * 60) / 1e3
        print(f"{ppm:3d} ppm, resync every {minutes:2d} min -> {drift_ms:6.1f} ms")

# %%
# Higher spreading factors stretch everything
for sf in range(7, 13):
    f = FrameSpec(RadioConfig(sf=sf, cr=4, crc_on=True), 25)
    print(f"SF{sf:<2d} 25 B uplink: {time_on_air_us(f) / 1e3:8.2f} ms")
