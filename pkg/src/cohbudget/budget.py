"""
Optical power budget of an unamplified coherent link.

The budget is the modulator output power minus the receiver sensitivity.
By default one laser technology feeds both the modulator and the LO, so the
laser power sets both.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import model
from ._parallel import ordered_map
from .model import Infeasible, ModulationFormat, NoiseParams

SNRQ_POLICIES = ("fixed", "scaled_with_baud")
TIA_POLICIES = ("fixed", "power_law")

#: Reference baud rate at which the implementation-penalty SNR was fitted.
SNRQ_REF_BAUD_HZ = 28e9
#: Bandwidth of the characterised receiver TIA.
TIA_REF_BANDWIDTH_HZ = 22e9

SWEEP_AXES = ("laser_power_dbm", "raw_bit_rate", "baud_hz")
SWEEP_CSV_HEADER = (
    "axis",
    "axis_value",
    "format",
    "n_pol",
    "baud_hz",
    "raw_bit_rate_bps",
    "tx_power_dbm",
    "sensitivity_dbm",
    "opb_db",
    "feasible",
)


@dataclass(frozen=True)
class LinkConfig:
    """One evaluation scenario.

    ``modulator_loss_db`` is the total loss under modulation (intrinsic plus
    modulation-dependent). ``ber_target`` is the pre-FEC threshold, see
    :data:`cohbudget.model.HD_FEC_BER` and :data:`cohbudget.model.SD_FEC_BER`.
    """

    fmt: ModulationFormat
    baud_hz: float
    laser_power_dbm: float
    modulator_loss_db: float
    ber_target: float = model.HD_FEC_BER
    n_pol: int = 2
    snrq_policy: str = "scaled_with_baud"
    snrq_ref_baud_hz: float = SNRQ_REF_BAUD_HZ
    tia_policy: str = "fixed"
    tia_exponent: float = 0.5
    tia_ref_bandwidth_hz: float = TIA_REF_BANDWIDTH_HZ

    def __post_init__(self):
        object.__setattr__(self, "fmt", model.get_format(self.fmt))
        if self.n_pol not in (1, 2):
            raise ValueError(f"n_pol must be 1 or 2, got {self.n_pol}")
        if not (self.baud_hz > 0 and math.isfinite(self.baud_hz)):
            raise ValueError(f"baud_hz must be positive, got {self.baud_hz}")
        if not self.modulator_loss_db >= 0:
            raise ValueError(f"modulator_loss_db must be >= 0, got {self.modulator_loss_db}")
        if not math.isfinite(self.laser_power_dbm):
            raise ValueError("laser_power_dbm must be finite")
        a = float(self.fmt.ber_coeff_a)
        if not 0 < self.ber_target < a:
            raise ValueError(f"ber_target must lie in (0, {a:g}) for {self.fmt.name}, got {self.ber_target}")
        if self.snrq_policy not in SNRQ_POLICIES:
            raise ValueError(f"snrq_policy must be one of {SNRQ_POLICIES}, got {self.snrq_policy!r}")
        if self.tia_policy not in TIA_POLICIES:
            raise ValueError(f"tia_policy must be one of {TIA_POLICIES}, got {self.tia_policy!r}")
        if not (self.snrq_ref_baud_hz > 0 and self.tia_ref_bandwidth_hz > 0):
            raise ValueError("reference baud rate and TIA bandwidth must be positive")

    @property
    def raw_bit_rate(self) -> float:
        """Gross line rate [b/s]."""
        return self.baud_hz * self.fmt.bits_per_symbol_per_pol * self.n_pol

    @property
    def b_eq(self) -> float:
        return model.beq_from_baud(self.baud_hz)


# ---------------------------------------------------------------------------
# modulator loss

# (m_index, total loss dB). QPSK saturates above m = 2; 64QAM reuses 16QAM.
_QPSK_LOSS = (
    (0.5, 22.37), (0.75, 19.14), (0.9, 17.78), (1.2, 15.87), (1.5, 14.72),
    (1.8, 14.14), (2.0, 14.03), (2.4, 14.01), (2.7, 14.00), (3.0, 13.99),
)
_QAM16_LOSS = (
    (0.5, 26.07), (0.75, 22.80), (0.9, 21.42), (1.2, 19.45), (1.5, 18.20),
    (1.8, 17.48), (2.0, 17.23),
)
#: Loss used for single-polarization QPSK.
SINGLE_POL_QPSK_LOSS_DB = 10.0


def default_modulator_loss(fmt, n_pol: int = 2) -> float:
    """Loss at the preferred drive level: 14 dB PM-QPSK, 10 dB single-pol QPSK, 18.2 dB QAM."""
    fmt = model.get_format(fmt)
    if fmt.name == "QPSK":
        return SINGLE_POL_QPSK_LOSS_DB if n_pol == 1 else 14.0
    return 18.2


@dataclass(frozen=True)
class ModulatorLossModel:
    """
    Total modulator loss versus modulation index ``V_pp / V_pi``.

    ``mode="table"`` interpolates linearly through per-format anchor points.
    ``mode="analytic"`` uses an ideal nested Mach-Zehnder IQ modulator biased at
    null, driven by evenly spaced levels per quadrature, plus ``intrinsic_loss_db``.
    """

    mode: str = "table"
    table: dict = field(
        default_factory=lambda: {"QPSK": _QPSK_LOSS, "16QAM": _QAM16_LOSS, "64QAM": _QAM16_LOSS}
    )
    intrinsic_loss_db: float = 11.0

    def __post_init__(self):
        if self.mode not in ("table", "analytic"):
            raise ValueError(f"mode must be 'table' or 'analytic', got {self.mode!r}")
        for name, points in self.table.items():
            m = [p[0] for p in points]
            if len(m) < 2 or any(b <= a for a, b in zip(m, m[1:])):
                raise ValueError(f"{name}: table m_index values must be strictly increasing (>= 2 points)")


def _analytic_modulation_loss_db(fmt: ModulationFormat, m_index: float) -> float:
    levels = np.linspace(-1.0, 1.0, fmt.levels_per_quadrature)
    # field per arm sin(pi*V/(2*V_pi)) with V = level * m * V_pi / 2; IQ combining halves power
    mean_power = np.mean(np.sin(np.pi * m_index * levels / 4.0) ** 2) / 2.0
    return -10.0 * math.log10(mean_power)


def modulator_loss(fmt, m_index: float, loss_model: ModulatorLossModel | None = None) -> float:
    """Total modulator loss [dB] at modulation index ``m_index``."""
    fmt = model.get_format(fmt)
    loss_model = loss_model or ModulatorLossModel()
    if not m_index > 0:
        raise ValueError(f"m_index must be positive, got {m_index}")
    if loss_model.mode == "analytic":
        if m_index > 2.0:
            raise ValueError("analytic modulator model is only monotone for m_index <= 2")
        return loss_model.intrinsic_loss_db + _analytic_modulation_loss_db(fmt, m_index)
    try:
        points = loss_model.table[fmt.name]
    except KeyError:
        raise ValueError(f"no modulator loss table for {fmt.name}") from None
    m, loss = zip(*points)
    if not m[0] <= m_index <= m[-1]:
        raise ValueError(f"m_index {m_index} outside table range [{m[0]}, {m[-1]}] for {fmt.name}")
    return float(np.interp(m_index, m, loss))


# ---------------------------------------------------------------------------
# scaling laws


def tx_power(laser_power_dbm: float, modulator_loss_db: float) -> float:
    """Average modulator output power [dBm]."""
    return laser_power_dbm - modulator_loss_db


def tia_irnd_at(b_eq: float, i0: float, b0: float, x: float) -> float:
    """TIA noise density at bandwidth ``b_eq`` from the power law ``i0 * (b_eq/b0)**x``."""
    if not (b_eq > 0 and b0 > 0):
        raise ValueError("bandwidths must be positive")
    return i0 * (b_eq / b0) ** x


def snrq_at(baud_hz: float, snrq0_db: float, d0: float, policy: str) -> float:
    """Implementation-penalty SNR [dB] at ``baud_hz``.

    With ``scaled_with_baud`` the quantization noise variance falls as 1/baud,
    as happens with fixed-rate converters followed by downsampling.
    """
    if not (baud_hz > 0 and d0 > 0):
        raise ValueError("baud rates must be positive")
    if policy == "fixed":
        return snrq0_db
    if policy == "scaled_with_baud":
        return snrq0_db + 10.0 * math.log10(baud_hz / d0)
    raise ValueError(f"unknown SNR_Q policy {policy!r}")


def effective_params(link: LinkConfig, params: NoiseParams) -> NoiseParams:
    """Noise parameters after applying the link's baud-rate policies."""
    irnd = params.irnd
    if link.tia_policy == "power_law":
        irnd = tia_irnd_at(link.b_eq, params.irnd, link.tia_ref_bandwidth_hz, link.tia_exponent)
    snrq = snrq_at(link.baud_hz, params.snrq_db, link.snrq_ref_baud_hz, link.snrq_policy)
    return replace(params, irnd=irnd, snrq_db=snrq)


# ---------------------------------------------------------------------------
# budget


@dataclass(frozen=True)
class LinkBudget:
    tx_power_dbm: float
    lo_power_dbm: float
    sensitivity_dbm: float | Infeasible
    opb_db: float | Infeasible

    @property
    def feasible(self) -> bool:
        return not isinstance(self.opb_db, Infeasible)


def link_budget(
    link: LinkConfig,
    params: NoiseParams,
    mod_input_dbm: float | None = None,
    lo_power_dbm: float | None = None,
) -> LinkBudget:
    """
    Transmit power, sensitivity and OPB for ``link``.

    The modulator input and LO powers default to the laser power; pass them
    explicitly to decouple the two paths (shared-laser transceivers).
    """
    mod_in = link.laser_power_dbm if mod_input_dbm is None else mod_input_dbm
    lo = link.laser_power_dbm if lo_power_dbm is None else lo_power_dbm
    eff = effective_params(link, params)
    terms = model.noise_terms(eff, model.dbm_to_w(lo), link.b_eq)
    sens_w = model.sensitivity(link.fmt, link.ber_target, terms, eff.snrq_linear)
    ptx = tx_power(mod_in, link.modulator_loss_db)
    if isinstance(sens_w, Infeasible):
        return LinkBudget(ptx, lo, sens_w, sens_w)
    sens = model.w_to_dbm(sens_w)
    return LinkBudget(ptx, lo, sens, ptx - sens)


def compute_opb(link: LinkConfig, params: NoiseParams) -> float | Infeasible:
    """Optical power budget [dB] of ``link``, or :class:`Infeasible`."""
    return link_budget(link, params).opb_db


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepSpec:
    """
    Sweep axis and the cases evaluated at each grid point.

    Each case is a mapping of :class:`LinkConfig` field overrides applied to
    the base link (e.g. ``{"fmt": "16QAM", "ber_target": 2e-2,
    "modulator_loss_db": 18.2}``). No cases means the base link alone.
    For the ``raw_bit_rate`` axis the baud rate is derived per case.
    """

    axis: str
    values: Sequence[float]
    cases: Sequence[dict] = ()

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ValueError(f"axis must be one of {SWEEP_AXES}, got {self.axis!r}")
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError("sweep grid is empty")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("sweep grid must be strictly increasing")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "cases", tuple(dict(c) for c in self.cases))

    @classmethod
    def from_range(cls, axis, start, stop, step, cases=()):
        """Grid ``start, start+step, ...`` up to and including ``stop``."""
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return cls(axis, [start + i * step for i in range(n)], cases)


@dataclass(frozen=True)
class SweepRow:
    axis: str
    axis_value: float
    case: int
    format: str
    n_pol: int
    ber_target: float
    baud_hz: float
    raw_bit_rate_bps: float
    tx_power_dbm: float
    sensitivity_dbm: float | None
    opb_db: float | None

    @property
    def feasible(self) -> bool:
        return self.opb_db is not None


def _fmt_num(x: float) -> str:
    return format(x, ".12g")


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: tuple

    def case_rows(self, case: int = 0) -> list[SweepRow]:
        return [r for r in self.rows if r.case == case]

    def to_csv(self, fh=None) -> str | None:
        """Write rows as CSV to ``fh``; return the text when ``fh`` is None."""
        out = io.StringIO() if fh is None else fh
        w = csv.writer(out, lineterminator="\n")
        w.writerow(SWEEP_CSV_HEADER)
        for r in self.rows:
            w.writerow([
                r.axis,
                _fmt_num(r.axis_value),
                r.format,
                r.n_pol,
                _fmt_num(r.baud_hz),
                _fmt_num(r.raw_bit_rate_bps),
                _fmt_num(r.tx_power_dbm),
                "" if r.sensitivity_dbm is None else _fmt_num(r.sensitivity_dbm),
                "" if r.opb_db is None else _fmt_num(r.opb_db),
                "true" if r.feasible else "false",
            ])
        return out.getvalue() if fh is None else None

    def max_axis_above(self, level_db: float, case: int = 0) -> float | None:
        """
        Largest axis value at which OPB still reaches ``level_db``.

        Linear interpolation between the last row at or above the level and
        the next feasible row below it. None if the level is never reached.
        """
        rows = self.case_rows(case)
        last = None
        for i, r in enumerate(rows):
            if r.feasible and r.opb_db >= level_db:
                last = i
        if last is None:
            return None
        hi = rows[last]
        if last + 1 == len(rows) or not rows[last + 1].feasible:
            return hi.axis_value
        lo = rows[last + 1]
        t = (hi.opb_db - level_db) / (hi.opb_db - lo.opb_db)
        return hi.axis_value + t * (lo.axis_value - hi.axis_value)


def _case_link(base: LinkConfig, overrides: dict) -> LinkConfig:
    overrides = dict(overrides)
    if "format" in overrides:
        overrides["fmt"] = overrides.pop("format")
    return replace(base, **overrides)


def _point_link(link: LinkConfig, axis: str, value: float) -> LinkConfig:
    if axis == "laser_power_dbm":
        return replace(link, laser_power_dbm=value)
    if axis == "baud_hz":
        return replace(link, baud_hz=value)
    return replace(link, baud_hz=value / (link.fmt.bits_per_symbol_per_pol * link.n_pol))


def sweep(spec: SweepSpec, base: LinkConfig, params: NoiseParams) -> SweepResult:
    """Evaluate the budget on every (case, grid value) pair, case-major, ascending axis."""
    case_links = [_case_link(base, c) for c in spec.cases] or [base]
    jobs = [(ci, link, v) for ci, link in enumerate(case_links) for v in spec.values]

    def run(job):
        ci, link, v = job
        pl = _point_link(link, spec.axis, v)
        b = link_budget(pl, params)
        return SweepRow(
            axis=spec.axis,
            axis_value=v,
            case=ci,
            format=pl.fmt.name,
            n_pol=pl.n_pol,
            ber_target=pl.ber_target,
            baud_hz=pl.baud_hz,
            raw_bit_rate_bps=pl.raw_bit_rate,
            tx_power_dbm=b.tx_power_dbm,
            sensitivity_dbm=None if isinstance(b.sensitivity_dbm, Infeasible) else b.sensitivity_dbm,
            opb_db=None if isinstance(b.opb_db, Infeasible) else b.opb_db,
        )

    return SweepResult(spec, tuple(ordered_map(run, jobs)))
