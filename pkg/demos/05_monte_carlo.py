"""
Checking the closed-form BER against simulation
===============================================
"""
from cohbudget import model, montecarlo
from cohbudget.model import QAM16, QAM64, QPSK

r = montecarlo.simulate_ber(QPSK, 2.0, 2_000_000, seed=0)
print(r, "formula:", model.ber(QPSK, 2.0))

# pure noise: every bit is a coin flip
print(montecarlo.simulate_ber(QPSK, 0.0, 200_000, seed=0).ber_estimate)

for fmt in (QPSK, QAM16, QAM64):
    grid = montecarlo.snr_db_for_ber(fmt, [1e-2, 4e-3, 1e-3])
    rows = montecarlo.validate_formulas(fmt, grid, 1_000_000, seed=0)
    for row in rows:
        print(f"{row.format:6s} {row.snr_db:6.2f} dB  formula {row.ber_formula:.3e}  "
              f"MC {row.ber_mc:.3e}  rel {row.rel_error:+.3f}  ok={row.within_tol}")

# Far from threshold the nearest-neighbour approximation drifts
rows = montecarlo.validate_formulas(QAM64, [10.0, 12.0], 1_000_000, seed=3)
print(montecarlo.report_csv(rows))
