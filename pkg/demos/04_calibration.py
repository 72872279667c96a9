"""
Recovering receiver parameters from BER curves
==============================================

The measured curves are not available, so curves are synthesised from known
parameters, perturbed, and fitted back.
"""
import os
import tempfile

import numpy as np

from cohbudget import calibration
from cohbudget.calibration import TiaDataset
from cohbudget.model import TABLE1_PARAMS

curves = calibration.synthetic_curves(noise_sigma=0.05, seed=1)
print(len(curves), "curves,", sum(len(c.points) for c in curves), "points")
c = curves[0]
print(c.fmt.name, c.lo_power_dbm, "dBm LO:")
for p, b in c.points:
    print(f"  {p:7.2f} dBm  {b:.3e}")

fit = calibration.fit_receiver_params(curves)
print(fit.to_json())
print("truth:", TABLE1_PARAMS)

# one LO power cannot separate thermal, RIN and shot noise
try:
    calibration.fit_receiver_params(calibration.synthetic_curves(lo_powers_dbm=(8.0,)))
except calibration.IdentifiabilityError as exc:
    print("refused:", exc)

# spread over many noise draws
errs = []
for seed in range(20):
    r = calibration.fit_receiver_params(calibration.synthetic_curves(noise_sigma=0.05, seed=seed)).params
    errs.append([r.responsivity / 0.07 - 1, r.cmrr_db + 20, r.irnd / 19e-12 - 1, r.snrq_db - 18.4])
errs = np.abs(errs)
print("median |err|  R, CMRR[dB], i_TIA, SNR_Q[dB]:", np.median(errs, axis=0).round(4))

# The same data through CSV, as the CLI reads it
with tempfile.TemporaryDirectory() as d:
    path = os.path.join(d, "curves.csv")
    calibration.write_ber_curves_csv(curves, path)
    print(open(path).read().splitlines()[:3])
    again = calibration.fit_receiver_params(calibration.read_ber_curves_csv(path))
    print(again.params)

# TIA noise density vs. bandwidth, log-log straight line
bw = np.array([10, 16, 22, 30, 40, 56, 70]) * 1e9
rng = np.random.default_rng(0)
irnd = 19e-12 * (bw / 22e9) ** 0.45 * np.exp(0.05 * rng.standard_normal(bw.size))
i0, x = calibration.fit_tia_power_law(TiaDataset(tuple(zip(bw, irnd))))
print(f"i0(22 GHz) = {i0 * 1e12:.2f} pA/rtHz, x = {x:.3f}")
