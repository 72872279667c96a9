"""
Acceptance criteria, one test each.

Every test prints ``criterion N: PASS|FAIL ...`` with the measured numbers;
the lines are repeated in the pytest terminal summary. Run the file directly
for the lines alone: ``python3 tests/test_acceptance.py``.
"""
import math
import sys
import time
from dataclasses import replace

import numpy as np
import pytest

from cohbudget import budget, calibration, model, montecarlo, split
from cohbudget.budget import LinkConfig, SweepSpec
from cohbudget.model import QAM16, QAM64, QPSK, TABLE1_PARAMS, Infeasible

import oracles
from conftest import ACCEPTANCE_LINES

ANCHOR_TOL_DB = 2.5


def report(n, ok, detail, elapsed=None, budget_s=None):
    timing = ""
    if elapsed is not None:
        timing = f" [{elapsed:.2f} s / {budget_s:g} s]"
        ok = ok and elapsed < budget_s
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}{timing}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def link(fmt, baud, p_laser, loss, ber, **kw):
    return LinkConfig(fmt=fmt, baud_hz=baud, laser_power_dbm=p_laser, modulator_loss_db=loss, ber_target=ber, **kw)


def opb(cfg, params=TABLE1_PARAMS):
    v = budget.compute_opb(cfg, params)
    return None if isinstance(v, Infeasible) else v


def _anchor_point(n, cfg, target):
    with Timer() as t:
        got = opb(cfg)
    ok = got is not None and abs(got - target) <= ANCHOR_TOL_DB
    return report(n, ok, f"OPB {got:.2f} dB vs {target} +- {ANCHOR_TOL_DB} dB", t.elapsed, 1.0)


def test_c1_qpsk_28gbaud():
    assert _anchor_point(1, link(QPSK, 28e9, 14.0, 14.0, model.HD_FEC_BER), 37.13)


def test_c2_16qam_28gbaud():
    assert _anchor_point(2, link(QAM16, 28e9, 14.0, 18.2, model.HD_FEC_BER), 24.81)


def test_c3_16qam_56gbaud_sd():
    assert _anchor_point(3, link(QAM16, 56e9, 16.0, 18.2, model.SD_FEC_BER, snrq_policy="scaled_with_baud"), 27.0)


def _rate_sweep(fmt, p_laser, ber, loss, start=100e9, stop=800e9, step=1e9):
    spec = SweepSpec.from_range("raw_bit_rate", start, stop, step)
    base = link(fmt, 28e9, p_laser, loss, ber, snrq_policy="scaled_with_baud")
    return budget.sweep(spec, base, TABLE1_PARAMS)


def test_c4_16qam_crossings():
    with Timer() as t:
        x14 = _rate_sweep(QAM16, 14.0, model.SD_FEC_BER, 18.2, start=50e9).max_axis_above(29.0)
        x16 = _rate_sweep(QAM16, 16.0, model.SD_FEC_BER, 18.2, start=50e9).max_axis_above(29.0)
        peak14 = max(r.opb_db for r in _rate_sweep(QAM16, 14.0, model.SD_FEC_BER, 18.2, start=50e9).rows
                     if r.feasible)

    def ok(x, target):
        return x is not None and abs(x - target) <= 0.2 * target

    def fmt(x):
        return "none" if x is None else f"{x / 1e9:.0f} Gbps"

    passed = ok(x14, 190e9) and ok(x16, 260e9)
    detail = (f"29 dB crossing at 14 dBm {fmt(x14)} (target 190 +- 20%, peak OPB {peak14:.2f} dB); "
              f"at 16 dBm {fmt(x16)} (target 260 +- 20%)")
    assert report(4, passed, detail, t.elapsed, 1.0)


def test_c5_high_rate_floors():
    with Timer() as t:
        q = _rate_sweep(QPSK, 14.0, model.HD_FEC_BER, 14.0, stop=800e9)
        s = _rate_sweep(QAM64, 14.0, model.SD_FEC_BER, 18.2, stop=400e9)
    q_min = min((r.opb_db if r.feasible else -math.inf) for r in q.rows)
    s_vals = [(r.opb_db if r.feasible else -math.inf) for r in s.rows]
    s_min = min(s_vals)
    n_inf = sum(1 for r in s.rows if not r.feasible)
    first_ok = next((r.axis_value for r in s.rows if r.feasible and r.opb_db >= 14 - ANCHOR_TOL_DB), None)
    ok_q = q_min >= 29 - ANCHOR_TOL_DB
    ok_s = s_min >= 14 - ANCHOR_TOL_DB
    detail = (f"PM-QPSK HD min OPB {q_min:.2f} dB over 100-800 Gbps (floor 26.5): {'ok' if ok_q else 'short'}; "
              f"PM-64QAM SD min OPB {s_min:.2f} dB over 100-400 Gbps (floor 11.5, {n_inf} infeasible rows, "
              f"floor first met at {first_ok / 1e9 if first_ok else float('nan'):.0f} Gbps): "
              f"{'ok' if ok_s else 'short'}")
    assert report(5, ok_q and ok_s, detail, t.elapsed, 1.0)


def test_c6_split_optimizer():
    sd = link(QAM16, 28e9, 16.0, 18.2, model.SD_FEC_BER)
    with Timer() as t:
        res = split.optimize_split(16.0, sd, TABLE1_PARAMS)
        rho = np.linspace(0.05, 0.95, 91)
        ga = split.opb_grid(rho, "p_laser_dbm", np.arange(8.0, 18.01, 0.5), sd, TABLE1_PARAMS)
        gc = split.opb_grid(rho, "rin_db_hz", np.arange(-160.0, -129.9, 2.0), sd, TABLE1_PARAMS)
    ridge_a, ridge_c = ga.argmax_rho(), gc.argmax_rho()
    ok_rho = 0.65 <= res.rho_opt <= 0.85
    ok_opb = abs(res.opb_opt_db - 28.0) <= ANCHOR_TOL_DB
    ok_a = bool(np.all(np.diff(ridge_a) >= 0))
    ok_c = bool(np.all(np.diff(ridge_c) >= 0))
    detail = (f"rho_opt {res.rho_opt:.4f} in [0.65, 0.85], OPB_opt {res.opb_opt_db:.2f} vs 28 +- 2.5 dB; "
              f"argmax-rho vs laser power {ridge_a[0]:.2f}->{ridge_a[-1]:.2f} non-decreasing={ok_a}; "
              f"vs RIN {ridge_c[0]:.2f}->{ridge_c[-1]:.2f} non-decreasing={ok_c}")
    assert report(6, ok_rho and ok_opb and ok_a and ok_c, detail, t.elapsed, 1.0)


def test_c7_sensitivity_vs_bisection():
    rng = np.random.default_rng(20240607)
    n = 1000
    with Timer() as t:
        fmts = rng.choice([QPSK, QAM16, QAM64], size=n)
        target = 10 ** rng.uniform(-5, math.log10(2e-2), n)
        r = rng.uniform(0.02, 0.5, n)
        itia = rng.uniform(1e-12, 100e-12, n)
        cmrr = rng.uniform(-40, -5, n)
        rin = rng.uniform(-160, -130, n)
        snrq = rng.uniform(12, 35, n)
        plo = 10 ** (rng.uniform(-5, 20, n) / 10) * 1e-3
        beq = 0.6 * rng.uniform(5e9, 120e9, n)

        lib = np.full(n, np.nan)
        for i in range(n):
            prm = model.NoiseParams(r[i], cmrr[i], itia[i], snrq[i], rin[i])
            v = model.sensitivity(fmts[i], target[i], model.noise_terms(prm, plo[i], beq[i]), prm.snrq_linear)
            lib[i] = np.nan if isinstance(v, Infeasible) else v

        a = np.array([float(f.ber_coeff_a) for f in fmts])
        b = np.array([float(f.ber_coeff_b) for f in fmts])
        n0 = np.array([oracles.n0_equiv(r[i], itia[i], cmrr[i], rin[i], plo[i], beq[i]) for i in range(n)],
                      dtype=float)
        sq = 10 ** (snrq / 10)
        floor_ber = np.array([oracles.ber(a[i], b[i], sq[i]) for i in range(n)])
        infeasible = floor_ber >= target
        ref = oracles.sensitivity_w_vec(a, b, target, n0, sq)
    feas = ~infeasible
    same_class = bool(np.array_equal(np.isnan(lib), infeasible))
    err_db = np.abs(10 * np.log10(lib[feas] / ref[feas]))
    worst = float(err_db.max())
    detail = (f"{feas.sum()} feasible + {infeasible.sum()} infeasible draws, feasibility agrees={same_class}, "
              f"max |dS| {worst:.2e} dB (limit 1e-6)")
    assert report(7, same_class and worst <= 1e-6, detail, t.elapsed, 10.0)


def _errs(fit, true):
    return (abs(fit.responsivity / true.responsivity - 1), abs(fit.cmrr_db - true.cmrr_db),
            abs(fit.irnd / true.irnd - 1), abs(fit.snrq_db - true.snrq_db))


def test_c8_calibration_round_trip():
    with Timer() as t:
        clean = _errs(calibration.fit_receiver_params(calibration.synthetic_curves()).params, TABLE1_PARAMS)
        noisy = []
        conv = True
        for seed in range(50):
            res = calibration.fit_receiver_params(calibration.synthetic_curves(noise_sigma=0.05, seed=seed))
            conv &= res.converged
            noisy.append(_errs(res.params, TABLE1_PARAMS))
    p95 = np.percentile(np.array(noisy), 95, axis=0)
    ok_clean = clean[0] <= 0.01 and clean[2] <= 0.01 and clean[1] <= 0.1 and clean[3] <= 0.1
    ok_noisy = conv and p95[0] <= 0.05 and p95[2] <= 0.05 and p95[1] <= 0.5 and p95[3] <= 0.5
    detail = (f"noise-free R {clean[0]:.1e}, CMRR {clean[1]:.1e} dB, i_TIA {clean[2]:.1e}, SNR_Q {clean[3]:.1e} dB; "
              f"5% noise p95 over 50 seeds R {p95[0]:.2%}, CMRR {p95[1]:.3f} dB, i_TIA {p95[2]:.2%}, "
              f"SNR_Q {p95[3]:.3f} dB")
    assert report(8, ok_clean and ok_noisy, detail, t.elapsed, 60.0)


def test_c9_mc_vs_formula():
    rows = []
    with Timer() as t:
        for fmt in (QPSK, QAM16, QAM64):
            grid = montecarlo.snr_db_for_ber(fmt, [1e-2, 4e-3, 1e-3])
            rows += montecarlo.validate_formulas(fmt, grid, 10_000_000, seed=0)
    worst = max(abs(r.rel_error) for r in rows)
    detail = f"{sum(r.within_tol for r in rows)}/{len(rows)} points within 10% + 3 CI, max |rel err| {worst:.2%}"
    assert report(9, montecarlo.report_passes(rows) and len(rows) == 9, detail, t.elapsed, 120.0)


def test_c10_64qam_infeasible():
    with Timer() as t:
        cfg = link(QAM64, 28e9, 14.0, 18.2, model.HD_FEC_BER, snrq_policy="fixed")
        got = budget.compute_opb(cfg, replace(TABLE1_PARAMS, snrq_db=18.4))
        req_db = 10 * math.log10(oracles.required_snr(7 / 24, 42, 4e-3))
    ok = isinstance(got, Infeasible) and req_db > 18.4
    detail = f"returned {type(got).__name__}; oracle required SNR {req_db:.2f} dB > SNR_Q 18.4 dB"
    assert report(10, ok, detail, t.elapsed, 1.0)


def test_c11_tia_power_law_invariance():
    with Timer() as t:
        deltas = []
        for x in (0.0, 0.5):
            for rate in np.arange(112e9, 448e9 + 1, 1e9):
                base = link(QPSK, rate / 4, 16.0, 14.0, model.HD_FEC_BER)
                pl = replace(base, tia_policy="power_law", tia_exponent=x)
                deltas.append(abs(opb(pl) - opb(base)))
    worst = max(deltas)
    assert report(11, worst <= 1.0, f"max |dOPB| {worst:.3f} dB over 112-448 Gbps (limit 1 dB)", t.elapsed, 1.0)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
