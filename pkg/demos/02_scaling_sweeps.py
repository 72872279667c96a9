"""
OPB versus laser power and bit rate
===================================

Laser-power sweep for the four reference configurations, then raw bit rate
sweeps with and without the TIA noise power law.
"""
from dataclasses import replace

import numpy as np

from cohbudget import budget, model
from cohbudget.budget import LinkConfig, SweepSpec
from cohbudget.model import TABLE1_PARAMS

base = LinkConfig("QPSK", 28e9, laser_power_dbm=14.0, modulator_loss_db=14.0)

cases = [
    {"fmt": "16QAM", "baud_hz": 56e9, "modulator_loss_db": 18.2},
    {"fmt": "QPSK", "baud_hz": 56e9},
    {"fmt": "QPSK", "baud_hz": 28e9},
    {"fmt": "QPSK", "baud_hz": 56e9, "n_pol": 1, "modulator_loss_db": 10.0},
]
for ber in (model.HD_FEC_BER, model.SD_FEC_BER):
    spec = SweepSpec.from_range("laser_power_dbm", 0, 20, 2, cases=[{**c, "ber_target": ber} for c in cases])
    res = budget.sweep(spec, base, TABLE1_PARAMS)
    print(f"BER target {ber:g}")
    for k in range(len(cases)):
        rows = res.case_rows(k)
        name = f"{rows[0].n_pol}x{rows[0].format} {rows[0].baud_hz / 1e9:.0f}G"
        print(f"  {name:14s}", " ".join(f"{r.opb_db:5.1f}" if r.feasible else "  -- " for r in rows))

# the 400G case at 16 dBm, SD-FEC
r = budget.compute_opb(LinkConfig("16QAM", 56e9, 16.0, 18.2, ber_target=model.SD_FEC_BER), TABLE1_PARAMS)
print("PM-16QAM 56 GBaud, 16 dBm, SD-FEC:", round(r, 2), "dB")

# Raw bit rate. SNR_Q grows with the baud (fixed-rate converters, DSP decimation).
rates = SweepSpec.from_range("raw_bit_rate", 100e9, 800e9, 50e9, cases=[
    {"fmt": f, "ber_target": b, "modulator_loss_db": 14.0 if f == "QPSK" else 18.2}
    for b in (model.HD_FEC_BER, model.SD_FEC_BER) for f in ("QPSK", "16QAM", "64QAM")
])
res = budget.sweep(rates, base, TABLE1_PARAMS)
print("Gbps      ", " ".join(f"{x / 1e9:5.0f}" for x in rates.values))
for k in range(6):
    rows = res.case_rows(k)
    tag = f"{rows[0].format} {'HD' if rows[0].ber_target < 1e-2 else 'SD'}"
    print(f"{tag:10s}", " ".join(f"{r.opb_db:5.1f}" if r.feasible else "   --" for r in rows))

# where each curve drops through the 29 dB PON class
fine = SweepSpec.from_range("raw_bit_rate", 50e9, 1000e9, 1e9, cases=rates.cases)
for p in (14.0, 16.0):
    res = budget.sweep(fine, LinkConfig("QPSK", 28e9, p, 14.0), TABLE1_PARAMS)
    for k in range(6):
        x = res.max_axis_above(29.0, k)
        rows = res.case_rows(k)
        if x is None:
            msg = "never reaches 29 dB"
        elif x == fine.values[-1]:
            msg = "above 29 dB over the whole grid"
        else:
            msg = f"29 dB up to {x / 1e9:.0f} Gbps"
        print(f"{p} dBm {rows[0].format:6s} BER {rows[0].ber_target:g}:", msg)

# TIA noise growing with bandwidth barely moves the curves at 16 dBm
base16 = LinkConfig("QPSK", 28e9, 16.0, 14.0)
spec = SweepSpec.from_range("raw_bit_rate", 112e9, 448e9, 28e9)
fixed = budget.sweep(spec, base16, TABLE1_PARAMS)
for x in (0.3, 0.5, 0.6):
    law = budget.sweep(spec, replace(base16, tia_policy="power_law", tia_exponent=x), TABLE1_PARAMS)
    d = np.array([a.opb_db - b.opb_db for a, b in zip(law.rows, fixed.rows)])
    print(f"x = {x}: OPB change {d.min():+.2f} .. {d.max():+.2f} dB")
