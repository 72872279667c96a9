"""
One laser for both transmitter and LO
=====================================

A fraction rho of the laser goes to the modulator, the rest is the LO.
"""
from dataclasses import replace

import numpy as np

from cohbudget import split
from cohbudget.budget import LinkConfig
from cohbudget.model import SD_FEC_BER, TABLE1_PARAMS

link = LinkConfig("16QAM", 28e9, laser_power_dbm=16.0, modulator_loss_db=18.2, ber_target=SD_FEC_BER)

for rho in (0.1, 0.3, 0.5, 0.7, 0.75, 0.8, 0.9, 0.99):
    v = split.opb_with_split(split.SplitConfig(16.0, rho), link, TABLE1_PARAMS)
    print(f"rho {rho:4.2f}  OPB {v:6.2f} dB")

best = split.optimize_split(16.0, link, TABLE1_PARAMS)
print(best)

# optimum moves toward the signal path as the laser gets stronger
for p in range(8, 20, 2):
    r = split.optimize_split(float(p), link, TABLE1_PARAMS)
    print(f"P_laser {p:2d} dBm  rho_opt {r.rho_opt:.3f}  OPB {r.opb_opt_db:5.2f} dB")

# noisier TIA wants more LO
for i in (5, 19, 40, 80, 160):
    r = split.optimize_split(16.0, link, replace(TABLE1_PARAMS, irnd=i * 1e-12))
    print(f"i_TIA {i:3d} pA/rtHz  rho_opt {r.rho_opt:.3f}")

# noisier LO wants less of it
for rin in (-160, -150, -145, -140, -135, -130):
    r = split.optimize_split(16.0, link, replace(TABLE1_PARAMS, rin_db_hz=rin))
    print(f"RIN {rin} dB/Hz  rho_opt {r.rho_opt:.3f}")

# Full map; argmax along each row traces the ridge
grid = split.opb_grid(np.linspace(0.05, 0.95, 91), "p_laser_dbm", np.arange(8.0, 18.5, 1.0), link, TABLE1_PARAMS)
print(np.c_[grid.y, grid.argmax_rho(), np.nanmax(grid.opb_db, axis=1)].round(2))

# shot-noise-only receiver: the LO costs nothing, so all power goes to the signal
ideal = replace(TABLE1_PARAMS, irnd=0.0, rin_db_hz=-np.inf)
print(split.optimize_split(16.0, link, ideal))
