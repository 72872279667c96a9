"""
Parameter extraction from measurements.

``fit_receiver_params`` fits responsivity, CMRR, TIA noise density and the
implementation-penalty SNR to a family of BER-vs-signal-power curves taken at
several LO powers. ``fit_tia_power_law`` fits ``i(B) = i0 * (B / B0)**x`` to a
table of published TIA noise densities.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize, special

from . import model
from .model import ModulationFormat, NoiseParams

PARAM_NAMES = ("r_a_per_w", "cmrr_db", "itia_pa_sqrthz", "snrq_db")

DEFAULT_INIT = {"r_a_per_w": 0.05, "cmrr_db": -15.0, "itia_pa_sqrthz": 15.0, "snrq_db": 20.0}
DEFAULT_BOUNDS = {
    "r_a_per_w": (0.005, 0.5),
    "cmrr_db": (-40.0, 0.0),
    "itia_pa_sqrthz": (1.0, 100.0),
    "snrq_db": (10.0, 40.0),
}
#: Points measured below this multiple of the model floor get ``FLOOR_WEIGHT``.
FLOOR_MARGIN = 10.0
FLOOR_WEIGHT = 0.25

BER_CURVES_CSV_HEADER = ("format", "baud_hz", "lo_power_dbm", "signal_power_dbm", "ber")
TIA_CSV_HEADER = ("bandwidth_hz", "irnd_pa_sqrthz")


class IdentifiabilityError(ValueError):
    """The data cannot separate the thermal, RIN and shot contributions."""


@dataclass(frozen=True)
class BerCurve:
    fmt: ModulationFormat
    baud_hz: float
    lo_power_dbm: float
    points: tuple  # ((signal_power_dbm, ber), ...)

    def __post_init__(self):
        object.__setattr__(self, "fmt", model.get_format(self.fmt))
        pts = tuple((float(p), float(b)) for p, b in self.points)
        if len(pts) < 4:
            raise ValueError("a BER curve needs at least 4 points")
        if any(not 0 < b < 1 for _, b in pts):
            raise ValueError("BER values must lie in (0, 1)")
        if any(q <= p for (p, _), (q, _) in zip(pts, pts[1:])):
            raise ValueError("signal powers must be strictly increasing")
        if not self.baud_hz > 0:
            raise ValueError("baud_hz must be positive")
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True)
class FitResult:
    params: NoiseParams
    residual: float
    bounds_hit: dict
    converged: bool = True
    nfev: int = 0
    message: str = ""

    def to_json_dict(self) -> dict:
        p = self.params
        return {
            "r_a_per_w": p.responsivity,
            "cmrr_db": p.cmrr_db,
            "itia_pa_sqrthz": p.irnd * 1e12,
            "snrq_db": p.snrq_db,
            "residual_rms": self.residual,
            "bounds_hit": dict(self.bounds_hit),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=False)


def _log10_ber(fmt: ModulationFormat, snr):
    # log10(a * erfc(sqrt(snr/b))) without underflow; erfc(z) = 2 * Phi(-z*sqrt(2))
    z = np.sqrt(np.asarray(snr, dtype=float) / float(fmt.ber_coeff_b))
    return (math.log(float(fmt.ber_coeff_a)) + math.log(2.0) + special.log_ndtr(-z * math.sqrt(2.0))) / math.log(10.0)


def _params_from_vector(x, rin_db_hz: float) -> NoiseParams:
    r, cmrr, itia, snrq = (float(v) for v in x)
    return NoiseParams(responsivity=r, cmrr_db=cmrr, irnd=itia * 1e-12, snrq_db=snrq, rin_db_hz=rin_db_hz)


class _Problem:
    """Flattened measurement arrays, grouped per curve for vectorised evaluation."""

    def __init__(self, curves: Sequence[BerCurve], rin_db_hz: float):
        self.curves = list(curves)
        self.rin_db_hz = rin_db_hz
        self.ps_w = [np.array([model.dbm_to_w(p) for p, _ in c.points]) for c in self.curves]
        self.log_meas = np.concatenate([np.log10([b for _, b in c.points]) for c in self.curves])
        self.meas = 10.0 ** self.log_meas

    def log_model(self, x) -> np.ndarray:
        prm = _params_from_vector(x, self.rin_db_hz)
        out = []
        for c, ps in zip(self.curves, self.ps_w):
            terms = model.noise_terms(prm, model.dbm_to_w(c.lo_power_dbm), model.beq_from_baud(c.baud_hz))
            out.append(_log10_ber(c.fmt, model.snr_rx(ps, terms, prm.snrq_linear)))
        return np.concatenate(out)

    def weights(self, x) -> np.ndarray:
        prm = _params_from_vector(x, self.rin_db_hz)
        floors = np.concatenate([
            np.full(len(c.points), model.ber_floor(c.fmt, prm.snrq_linear)) for c in self.curves
        ])
        return np.where(self.meas < FLOOR_MARGIN * floors, FLOOR_WEIGHT, 1.0)

    def residuals(self, x, w) -> np.ndarray:
        return np.sqrt(w) * (self.log_model(x) - self.log_meas)


def check_identifiable(curves: Sequence[BerCurve]) -> None:
    """
    Raise :class:`IdentifiabilityError` unless the curves can pin down all parameters.

    The noise floor ``A/P_LO + C*P_LO + s`` has three unknowns, so at least
    three distinct LO powers are needed.
    """
    if len(curves) < 2:
        raise IdentifiabilityError("need at least 2 BER curves")
    n_lo = len({round(c.lo_power_dbm, 9) for c in curves})
    if n_lo < 3:
        raise IdentifiabilityError(
            f"curves span {n_lo} distinct LO power(s); thermal, RIN and shot terms need at least 3"
        )


def fit_receiver_params(
    curves: Sequence[BerCurve],
    rin_db_hz: float = -145.0,
    init: dict | None = None,
    bounds: dict | None = None,
    max_nfev: int = 2000,
    max_rounds: int = 5,
) -> FitResult:
    """
    Least-squares fit of (R, CMRR, i_TIA, SNR_Q) in log10(BER) space.

    All curves are fitted simultaneously with the LO RIN held at
    ``rin_db_hz``. Points within ``FLOOR_MARGIN`` of the model BER floor are
    down-weighted; the weights are frozen per solve and recomputed from the
    new estimate until they stop changing.

    On iteration-cap exhaustion the best estimate is returned with
    ``converged=False``.
    """
    check_identifiable(curves)
    init = {**DEFAULT_INIT, **(init or {})}
    bounds = {**DEFAULT_BOUNDS, **(bounds or {})}
    lo = np.array([bounds[k][0] for k in PARAM_NAMES], dtype=float)
    hi = np.array([bounds[k][1] for k in PARAM_NAMES], dtype=float)
    x = np.clip(np.array([init[k] for k in PARAM_NAMES], dtype=float), lo, hi)

    prob = _Problem(curves, rin_db_hz)
    w = prob.weights(x)
    converged, nfev, message = True, 0, ""
    for _ in range(max_rounds):
        sol = optimize.least_squares(
            prob.residuals, x, args=(w,), bounds=(lo, hi), method="trf",
            x_scale=hi - lo, xtol=1e-12, ftol=1e-12, gtol=1e-12, max_nfev=max_nfev,
        )
        x = sol.x
        nfev += sol.nfev
        converged = sol.status > 0
        message = sol.message
        w_new = prob.weights(x)
        if not converged or np.array_equal(w_new, w):
            break
        w = w_new

    span = hi - lo
    hit = {k: bool(x[i] - lo[i] <= 1e-6 * span[i] or hi[i] - x[i] <= 1e-6 * span[i])
           for i, k in enumerate(PARAM_NAMES)}
    resid = prob.log_model(x) - prob.log_meas
    return FitResult(
        params=_params_from_vector(x, rin_db_hz),
        residual=float(np.sqrt(np.mean(resid**2))),
        bounds_hit=hit,
        converged=converged,
        nfev=nfev,
        message=message,
    )


def fit_objective(curves: Sequence[BerCurve], params: NoiseParams, weight_params: NoiseParams | None = None) -> float:
    """Weighted sum of squared log10 residuals for ``params``."""
    prob = _Problem(curves, params.rin_db_hz)
    x = np.array([params.responsivity, params.cmrr_db, params.irnd * 1e12, params.snrq_db])
    wp = weight_params or params
    w = prob.weights(np.array([wp.responsivity, wp.cmrr_db, wp.irnd * 1e12, wp.snrq_db]))
    return float(np.sum(prob.residuals(x, w) ** 2))


def synthetic_curves(
    params: NoiseParams = model.TABLE1_PARAMS,
    formats: Iterable = (model.QPSK, model.QAM16),
    lo_powers_dbm: Sequence[float] = (0.0, 4.0, 8.0, 12.0, 16.0),
    n_points: int = 8,
    baud_hz: float = 28e9,
    ber_range: tuple = (3e-2, 1e-5),
    noise_sigma: float = 0.0,
    seed: int | None = None,
) -> list[BerCurve]:
    """
    BER curves generated by the model itself.

    Signal powers are the sensitivities at ``n_points`` BER levels spaced
    geometrically over ``ber_range`` (the low end is raised to three times
    the BER floor when the floor is in the way). With ``noise_sigma > 0``
    each BER is multiplied by ``exp(noise_sigma * z)``, ``z ~ N(0, 1)``.
    """
    rng = np.random.default_rng(seed)
    curves = []
    for fmt in formats:
        fmt = model.get_format(fmt)
        floor = model.ber_floor(fmt, params.snrq_linear)
        bers = np.geomspace(ber_range[0], max(ber_range[1], 3.0 * floor), n_points)
        for lo in lo_powers_dbm:
            terms = model.noise_terms(params, model.dbm_to_w(lo), model.beq_from_baud(baud_hz))
            pts = []
            for b in bers:
                ps = model.sensitivity(fmt, float(b), terms, params.snrq_linear)
                meas = float(b)
                if noise_sigma > 0:
                    meas = min(meas * math.exp(noise_sigma * rng.standard_normal()), 0.5)
                pts.append((model.w_to_dbm(ps), meas))
            curves.append(BerCurve(fmt, baud_hz, lo, tuple(pts)))
    return curves


def read_ber_curves_csv(path) -> list[BerCurve]:
    """Group rows of ``format,baud_hz,lo_power_dbm,signal_power_dbm,ber`` into curves."""
    groups: dict = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != BER_CURVES_CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(BER_CURVES_CSV_HEADER)}")
        for row in reader:
            key = (row["format"], float(row["baud_hz"]), float(row["lo_power_dbm"]))
            groups.setdefault(key, []).append((float(row["signal_power_dbm"]), float(row["ber"])))
    return [BerCurve(f, baud, lo, tuple(sorted(pts))) for (f, baud, lo), pts in groups.items()]


def write_ber_curves_csv(curves: Sequence[BerCurve], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BER_CURVES_CSV_HEADER)
        for c in curves:
            for p, b in c.points:
                w.writerow([c.fmt.name, format(c.baud_hz, ".12g"), format(c.lo_power_dbm, ".12g"),
                            format(p, ".12g"), format(b, ".12g")])


# ---------------------------------------------------------------------------
# TIA noise versus bandwidth


@dataclass(frozen=True)
class TiaDataset:
    points: tuple = field(default_factory=tuple)  # ((bandwidth_hz, irnd A/sqrt(Hz)), ...)

    def __post_init__(self):
        pts = tuple((float(b), float(i)) for b, i in self.points)
        if len(pts) < 3:
            raise ValueError("TIA dataset needs at least 3 points")
        if any(b <= 0 or i <= 0 for b, i in pts):
            raise ValueError("TIA bandwidths and noise densities must be positive")
        object.__setattr__(self, "points", pts)


def fit_tia_power_law(data: TiaDataset, b0: float = 22e9) -> tuple[float, float]:
    """
    Fit ``log10 i = log10 i0 + x * log10(B / b0)`` by ordinary least squares.

    Returns ``(i0, x)`` with ``i0`` in the units of the data. Outliers must
    be removed by the caller.
    """
    b, i = np.array(data.points).T
    lb = np.log10(b / b0)
    if np.ptp(lb) == 0:
        raise ValueError("all TIA bandwidths are equal; exponent undefined")
    x, c = np.polyfit(lb, np.log10(i), 1)
    return float(10.0**c), float(x)


def read_tia_csv(path) -> TiaDataset:
    """Read ``bandwidth_hz,irnd_pa_sqrthz`` rows; densities are returned in A/sqrt(Hz)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TIA_CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(TIA_CSV_HEADER)}")
        pts = [(float(r["bandwidth_hz"]), float(r["irnd_pa_sqrthz"]) * 1e-12) for r in reader]
    return TiaDataset(tuple(pts))
