"""
Receiver sensitivity and optical power budget
=============================================

Walks through one unamplified coherent link: noise terms, required SNR,
sensitivity and the resulting power budget.
"""
import numpy as np

from cohbudget import budget, model
from cohbudget.budget import LinkConfig
from cohbudget.model import QAM16, QAM64, QPSK, TABLE1_PARAMS

params = TABLE1_PARAMS
print(params)

# noise at 14 dBm LO, 28 GBaud -> B_eq = 16.8 GHz
p_lo = model.dbm_to_w(14.0)
terms = model.noise_terms(params, p_lo, model.beq_from_baud(28e9))
print("thermal / P_LO  :", terms.var_thermal / p_lo)
print("RIN * P_LO * CMRR:", terms.var_rin * p_lo * model.db_to_lin(params.cmrr_db))
print("shot            :", terms.var_shot)
print("n0_equiv [W]    :", terms.n0_equiv)

# thermal noise dominates; the LO beats it down until RIN takes over
for p in (0.0, 8.0, 14.0, 20.0, 26.0):
    t = model.noise_terms(params, model.dbm_to_w(p), 16.8e9)
    print(f"P_LO {p:5.1f} dBm  n0 {t.n0_equiv:.3e} W")

# required SNR at the two FEC thresholds
for fmt in (QPSK, QAM16, QAM64):
    hd = model.lin_to_db(model.required_snr(fmt, model.HD_FEC_BER))
    sd = model.lin_to_db(model.required_snr(fmt, model.SD_FEC_BER))
    print(f"{fmt.name:6s} HD {hd:5.2f} dB   SD {sd:5.2f} dB   SNR_Q {params.snrq_db} dB")

# 64QAM at HD-FEC needs more SNR than the implementation floor allows
print(model.sensitivity(QAM64, model.HD_FEC_BER, terms, params.snrq_linear))

# The two 28 GBaud reference links
qpsk = LinkConfig(QPSK, 28e9, laser_power_dbm=14.0, modulator_loss_db=14.0)
qam16 = LinkConfig(QAM16, 28e9, laser_power_dbm=14.0, modulator_loss_db=18.2)
for link in (qpsk, qam16):
    b = budget.link_budget(link, params)
    print(f"{link.fmt.name:6s} Tx {b.tx_power_dbm:6.2f} dBm  S {b.sensitivity_dbm:7.2f} dBm  OPB {b.opb_db:5.2f} dB")

# Modulator loss vs. drive: more swing, less loss, saturating for QPSK
m = np.array([0.5, 0.75, 0.9, 1.2, 1.5, 1.8, 2.0])
for fmt in (QPSK, QAM16):
    loss = [budget.modulator_loss(fmt, x) for x in m]
    opb = [budget.compute_opb(LinkConfig(fmt, 28e9, 14.0, L), params) for L in loss]
    print(fmt.name, np.round(loss, 2), np.round(opb, 2))

# same curve from the analytic sinusoidal-transfer model
analytic = budget.ModulatorLossModel(mode="analytic", intrinsic_loss_db=11.0)
print([round(budget.modulator_loss(QAM16, x, analytic), 2) for x in m])
