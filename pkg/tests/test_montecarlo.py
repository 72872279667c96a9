import csv
import io
import math

import numpy as np
import pytest

from cohbudget import model
from cohbudget.model import QAM16, QAM64, QPSK
from cohbudget.montecarlo import (
    McResult,
    report_csv,
    report_passes,
    simulate_ber,
    snr_db_for_ber,
    validate_formulas,
)

import oracles

ERFC1_HALF = 0.07864960352514257  # 0.5 * erfc(1), mpmath


class TestSimulate:
    def test_reproducible(self):
        a = simulate_ber(QAM16, 20.0, 300_000, seed=7)
        b = simulate_ber(QAM16, 20.0, 300_000, seed=7)
        assert a == b
        assert simulate_ber(QAM16, 20.0, 300_000, seed=8) != a

    def test_chunking_independent_of_threads(self, monkeypatch):
        monkeypatch.setenv("COHBUDGET_THREADS", "1")
        a = simulate_ber(QPSK, 3.0, 250_000, seed=1, chunk_symbols=50_000)
        monkeypatch.setenv("COHBUDGET_THREADS", "4")
        b = simulate_ber(QPSK, 3.0, 250_000, seed=1, chunk_symbols=50_000)
        assert a == b

    def test_pure_noise(self):
        r = simulate_ber(QPSK, 0.0, 1_000_000, seed=0)
        assert abs(r.ber_estimate - 0.5) <= r.ci95_halfwidth

    def test_16qam_30db_error_free(self):
        r = simulate_ber(QAM16, 10**3, 1_000_000, seed=0)
        assert r.n_errors == 0 and r.ber_estimate == 0.0
        assert model.ber(QAM16, 10**3) < 1e-40

    def test_qpsk_snr2(self):
        r = simulate_ber(QPSK, 2.0, 10_000_000, seed=0)
        assert model.ber(QPSK, 2.0) == pytest.approx(ERFC1_HALF, rel=1e-14)
        assert abs(r.ber_estimate - ERFC1_HALF) <= 3 * r.ci95_halfwidth

    def test_result_fields(self):
        r = simulate_ber(QAM64, 50.0, 12345, seed=3)
        assert r.n_bits == 12345 * 6
        assert r.ber_estimate == r.n_errors / r.n_bits
        p = r.ber_estimate
        assert r.ci95_halfwidth == pytest.approx(1.96 * math.sqrt(p * (1 - p) / r.n_bits))

    @pytest.mark.parametrize("fmt,levels,snr_db", [(QAM16, 4, 10.0), (QAM64, 8, 12.0), (QAM64, 8, 18.0)])
    def test_matches_exact_gray_ber(self, fmt, levels, snr_db):
        # the exact Gray-QAM BER includes the non-nearest-neighbour terms the closed form drops
        snr = 10 ** (snr_db / 10)
        r = simulate_ber(fmt, snr, 2_000_000, seed=5)
        assert abs(r.ber_estimate - oracles.exact_gray_qam_ber(levels, snr)) <= 3 * r.ci95_halfwidth

    @pytest.mark.parametrize("kw", [{"n_symbols": 0, "snr": 1.0}, {"n_symbols": 10, "snr": -1.0},
                                    {"n_symbols": 10, "snr": math.nan}])
    def test_bad_inputs(self, kw):
        with pytest.raises(ValueError):
            simulate_ber(QPSK, seed=0, **kw)

    def test_seed_independence(self):
        runs = [simulate_ber(QAM16, 10**1.3, 200_000, seed=s) for s in range(20)]
        pooled = sum(r.n_errors for r in runs) / sum(r.n_bits for r in runs)
        inside = sum(abs(r.ber_estimate - pooled) <= r.ci95_halfwidth for r in runs)
        assert inside >= 19

    def test_monotone_in_snr(self):
        vals = [simulate_ber(QAM16, 10 ** (db / 10), 400_000, seed=2).ber_estimate for db in range(6, 17, 2)]
        assert all(b <= a for a, b in zip(vals, vals[1:]))


class TestValidate:
    def test_qpsk_6_to_10_db(self):
        rows = validate_formulas(QPSK, [6, 7, 8, 9, 10], 10_000_000, seed=0)
        assert report_passes(rows)
        assert [r.snr_db for r in rows] == [6, 7, 8, 9, 10]

    def test_64qam_overestimate_small(self):
        snr_db = snr_db_for_ber(QAM64, [2e-2])
        (row,) = validate_formulas(QAM64, snr_db, 2_000_000, seed=0)
        assert row.within_tol
        assert -0.10 <= (row.ber_formula - row.ber_mc) / row.ber_mc <= 0.10

    def test_empty(self):
        assert validate_formulas(QPSK, [], 1000) == []
        assert report_passes([])

    def test_out_of_regime_flagged(self):
        rows = validate_formulas(QPSK, [20.0], 1000, seed=0)
        assert not rows[0].in_regime
        assert not report_passes(rows)

    def test_per_point_seed(self):
        rows = validate_formulas(QAM16, [12.0, 12.0], 200_000, seed=4)
        r0 = simulate_ber(QAM16, 10**1.2, 200_000, seed=4 ^ 0)
        r1 = simulate_ber(QAM16, 10**1.2, 200_000, seed=4 ^ 1)
        assert rows[0].ber_mc == r0.ber_estimate and rows[1].ber_mc == r1.ber_estimate

    def test_snr_grid_hits_target(self):
        for fmt in (QPSK, QAM16, QAM64):
            (db,) = snr_db_for_ber(fmt, [4e-3])
            assert model.ber(fmt, 10 ** (db / 10)) == pytest.approx(4e-3, rel=1e-9)

    def test_csv(self):
        rows = validate_formulas(QAM16, snr_db_for_ber(QAM16, [1e-2, 1e-3]), 100_000, seed=0)
        text = report_csv(rows)
        assert text.splitlines()[0] == "format,snr_db,ber_formula,ber_mc,n_bits,rel_error,within_tol"
        parsed = list(csv.DictReader(io.StringIO(text)))
        assert [p["format"] for p in parsed] == ["16QAM", "16QAM"]
        assert int(parsed[0]["n_bits"]) == 400_000
        assert parsed[0]["within_tol"] in ("true", "false")
