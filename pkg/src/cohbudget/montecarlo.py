"""
Symbol-level Monte-Carlo check of the closed-form BER approximations.

Square QAM, Gray-coded per quadrature, minimum-distance decisions, AWGN with
SNR defined as mean symbol energy over total complex noise variance.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import model
from ._parallel import ordered_map
from .model import ModulationFormat

CHUNK_SYMBOLS = 1 << 20
#: Formula BER range where both the estimate and the approximation are trusted.
MEASURABLE_BER = (1e-4, 5e-2)
REPORT_CSV_HEADER = ("format", "snr_db", "ber_formula", "ber_mc", "n_bits", "rel_error", "within_tol")


@dataclass(frozen=True)
class McResult:
    ber_estimate: float
    n_bits: int
    n_errors: int
    ci95_halfwidth: float


def _chunk_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _gray(idx):
    return idx ^ (idx >> 1)


_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


def _chunk_errors(fmt: ModulationFormat, snr: float, n: int, seed: int, index: int) -> int:
    rng = _chunk_rng(seed, index)
    m = fmt.levels_per_quadrature
    es = 2.0 * (m * m - 1) / 3.0
    tx = rng.integers(0, m, size=(2, n))
    if snr == 0:
        rx = rng.integers(0, m, size=(2, n))
    else:
        sigma = math.sqrt(es / (2.0 * snr))
        y = (2 * tx - (m - 1)) + sigma * rng.standard_normal((2, n))
        rx = np.clip(np.rint((y + (m - 1)) / 2.0), 0, m - 1).astype(np.int64)
    return int(_POPCOUNT[_gray(tx) ^ _gray(rx)].sum())


def simulate_ber(
    fmt: ModulationFormat,
    snr: float,
    n_symbols: int,
    seed: int = 0,
    chunk_symbols: int = CHUNK_SYMBOLS,
) -> McResult:
    """
    Estimate the BER of ``fmt`` at linear Es/N0 ``snr``.

    Symbols are simulated in fixed-size chunks, each with its own PRNG stream
    spawned from ``seed``, so results do not depend on thread count.
    """
    fmt = model.get_format(fmt)
    if n_symbols < 1:
        raise ValueError("n_symbols must be >= 1")
    if not snr >= 0:
        raise ValueError("snr must be >= 0")
    sizes = [chunk_symbols] * (n_symbols // chunk_symbols)
    if n_symbols % chunk_symbols:
        sizes.append(n_symbols % chunk_symbols)
    errs = ordered_map(lambda job: _chunk_errors(fmt, snr, job[1], seed, job[0]), list(enumerate(sizes)))
    n_errors = int(sum(errs))
    n_bits = n_symbols * fmt.bits_per_symbol_per_pol
    p = n_errors / n_bits
    return McResult(p, n_bits, n_errors, 1.96 * math.sqrt(p * (1.0 - p) / n_bits))


@dataclass(frozen=True)
class ValidationRow:
    format: str
    snr_db: float
    ber_formula: float
    ber_mc: float
    n_bits: int
    rel_error: float
    within_tol: bool
    in_regime: bool


def validate_formulas(
    fmt: ModulationFormat,
    snr_list_db,
    n_symbols: int,
    seed: int = 0,
    rel_tol: float = 0.10,
) -> list[ValidationRow]:
    """
    Compare closed-form and simulated BER at each SNR.

    A row passes when ``|rel_error| <= rel_tol + 3 * ci95 / ber_formula``.
    Rows whose formula BER falls outside :data:`MEASURABLE_BER` are reported
    with ``in_regime=False``. Point ``i`` uses seed ``seed ^ i``.
    """
    fmt = model.get_format(fmt)
    rows = []
    for i, snr_db in enumerate(snr_list_db):
        snr = model.db_to_lin(snr_db)
        p_formula = model.ber(fmt, snr)
        res = simulate_ber(fmt, snr, n_symbols, seed ^ i)
        rel = (res.ber_estimate - p_formula) / p_formula
        tol = rel_tol + 3.0 * res.ci95_halfwidth / p_formula
        in_regime = MEASURABLE_BER[0] <= p_formula <= MEASURABLE_BER[1]
        rows.append(ValidationRow(fmt.name, float(snr_db), float(p_formula), res.ber_estimate,
                                  res.n_bits, float(rel), bool(abs(rel) <= tol), bool(in_regime)))
    return rows


def report_passes(rows) -> bool:
    return all(r.within_tol and r.in_regime for r in rows)


def snr_db_for_ber(fmt, ber_values) -> list[float]:
    """SNR grid [dB] at which the closed form gives each BER in ``ber_values``."""
    fmt = model.get_format(fmt)
    return [model.lin_to_db(model.required_snr(fmt, b)) for b in ber_values]


def report_csv(rows, fh=None) -> str | None:
    out = io.StringIO() if fh is None else fh
    w = csv.writer(out, lineterminator="\n")
    w.writerow(REPORT_CSV_HEADER)
    for r in rows:
        w.writerow([r.format, format(r.snr_db, ".12g"), format(r.ber_formula, ".12g"),
                    format(r.ber_mc, ".12g"), r.n_bits, format(r.rel_error, ".12g"),
                    "true" if r.within_tol else "false"])
    return out.getvalue() if fh is None else None
