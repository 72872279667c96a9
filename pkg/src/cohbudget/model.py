"""
Receiver noise model, BER formulas and sensitivity of unamplified coherent receivers.

Public interfaces speak dB, dBm and Hz. Internally everything is linear SI:
watts, A/sqrt(Hz), 1/Hz.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from scipy import special

#: Electron charge, C (CODATA 2018, exact).
ELECTRON_CHARGE = 1.602176634e-19

#: Pre-FEC BER thresholds.
HD_FEC_BER = 4e-3
SD_FEC_BER = 2e-2


def db_to_lin(x_db: float) -> float:
    """Power ratio from dB. ``-inf`` maps to 0 and ``+inf`` to ``inf``."""
    return 10.0 ** (x_db / 10.0)


def lin_to_db(x: float) -> float:
    if x == 0:
        return -math.inf
    return 10.0 * math.log10(x)


def dbm_to_w(p_dbm: float) -> float:
    return 1e-3 * 10.0 ** (p_dbm / 10.0)


def w_to_dbm(p_w: float) -> float:
    if p_w == 0:
        return -math.inf
    return 10.0 * math.log10(p_w / 1e-3)


@dataclass(frozen=True)
class Infeasible:
    """Marker result: the target BER cannot be reached at any signal power."""

    reason: str = "BER floor above target"


@dataclass(frozen=True)
class NoiseParams:
    """
    Receiver and laser noise constants.

    Parameters
    ----------
    responsivity : float
        Equivalent coherent-receiver responsivity [A/W], including the
        passive hybrid/PBS losses ahead of the photodiodes.
    cmrr_db : float
        Common-mode rejection ratio of the balanced detector [dB]. Enters the
        LO RIN term as the power ratio ``10**(cmrr_db/10)``; ``-inf`` disables it.
    irnd : float
        TIA input-referred noise current density [A/sqrt(Hz)].
    snrq_db : float
        Power-independent implementation-penalty SNR [dB]; ``inf`` means none.
    rin_db_hz : float
        LO relative intensity noise [dB/Hz]; ``-inf`` disables the term.
    """

    responsivity: float
    cmrr_db: float
    irnd: float
    snrq_db: float
    rin_db_hz: float

    def __post_init__(self):
        if not self.responsivity > 0 or not math.isfinite(self.responsivity):
            raise ValueError(f"responsivity must be positive, got {self.responsivity}")
        if not self.irnd >= 0 or not math.isfinite(self.irnd):
            raise ValueError(f"irnd must be >= 0, got {self.irnd}")
        for name in ("cmrr_db", "rin_db_hz"):
            v = getattr(self, name)
            if math.isnan(v) or v == math.inf:
                raise ValueError(f"{name} must be finite or -inf, got {v}")
        if math.isnan(self.snrq_db) or self.snrq_db == -math.inf:
            raise ValueError(f"snrq_db must be finite or +inf, got {self.snrq_db}")

    @property
    def snrq_linear(self) -> float:
        return db_to_lin(self.snrq_db)


#: Fitted receiver parameters at 28 GBaud, with the datasheet LO RIN.
TABLE1_PARAMS = NoiseParams(
    responsivity=0.07,
    cmrr_db=-20.0,
    irnd=19e-12,
    snrq_db=18.4,
    rin_db_hz=-145.0,
)


@dataclass(frozen=True)
class ModulationFormat:
    """
    Square-QAM format with BER approximation ``a * erfc(sqrt(snr / b))``.

    ``snr`` is the mean symbol energy over the total complex noise variance.
    """

    name: str
    bits_per_symbol_per_pol: int
    ber_coeff_a: Fraction
    ber_coeff_b: Fraction

    def __post_init__(self):
        if not 0 < self.ber_coeff_a <= Fraction(1, 2):
            raise ValueError("ber_coeff_a must lie in (0, 1/2]")
        if not self.ber_coeff_b > 0:
            raise ValueError("ber_coeff_b must be positive")

    @property
    def levels_per_quadrature(self) -> int:
        return 2 ** (self.bits_per_symbol_per_pol // 2)


QPSK = ModulationFormat("QPSK", 2, Fraction(1, 2), Fraction(2))
QAM16 = ModulationFormat("16QAM", 4, Fraction(3, 8), Fraction(10))
QAM64 = ModulationFormat("64QAM", 6, Fraction(7, 24), Fraction(42))

FORMATS = {f.name: f for f in (QPSK, QAM16, QAM64)}


def get_format(name: str | ModulationFormat) -> ModulationFormat:
    """Look up a format by name; accepts ``PM-`` prefixes and any case."""
    if isinstance(name, ModulationFormat):
        return name
    key = name.upper().removeprefix("PM-").removeprefix("DP-")
    if key == "4QAM":
        key = "QPSK"
    try:
        return FORMATS[key]
    except KeyError:
        raise ValueError(f"unknown modulation format {name!r}; expected one of {sorted(FORMATS)}") from None


@dataclass(frozen=True)
class NoiseTerms:
    """Noise variances entering the SNR denominator.

    ``n0_equiv`` is the noise-equivalent power [W] excluding the
    implementation-penalty term.
    """

    var_thermal: float
    var_shot: float
    var_rin: float
    n0_equiv: float


def erfc_inv(y: float) -> float:
    """Inverse complementary error function on the open interval (0, 2)."""
    if not 0.0 < y < 2.0:
        raise ValueError(f"erfc_inv domain is (0, 2), got {y}")
    x = float(special.erfcinv(y))
    # one Newton step on log(erfc) keeps relative accuracy in the deep tail
    fx = float(special.erfc(x))
    if fx > 0 and x != 0:
        dlog = -2.0 / math.sqrt(math.pi) * math.exp(-x * x) / fx
        x -= (math.log(fx) - math.log(y)) / dlog
    return x


def beq_from_baud(baud_hz: float) -> float:
    """Equivalent receiver noise bandwidth, including the adaptive equalizer."""
    return 0.6 * baud_hz


def noise_terms(params: NoiseParams, p_lo: float, b_eq: float) -> NoiseTerms:
    """Thermal, shot and LO-RIN noise for LO power ``p_lo`` [W] in bandwidth ``b_eq`` [Hz]."""
    if not p_lo > 0:
        raise ValueError(f"LO power must be positive, got {p_lo} W")
    if not b_eq > 0:
        raise ValueError(f"noise bandwidth must be positive, got {b_eq} Hz")
    r = params.responsivity
    var_thermal = params.irnd**2 * b_eq / (8.0 * r**2)
    var_shot = ELECTRON_CHARGE * b_eq / (2.0 * r)
    var_rin = db_to_lin(params.rin_db_hz) * b_eq / 2.0
    n0 = var_thermal / p_lo + p_lo * var_rin * db_to_lin(params.cmrr_db) + var_shot
    return NoiseTerms(var_thermal, var_shot, var_rin, n0)


def snr_rx(p_s, terms: NoiseTerms, snr_q_linear: float):
    """Electrical SNR for received signal power ``p_s`` [W]."""
    return p_s / (terms.n0_equiv + p_s / snr_q_linear)


def ber(fmt: ModulationFormat, snr):
    """Pre-FEC bit error ratio at linear SNR ``snr``."""
    return float(fmt.ber_coeff_a) * special.erfc((snr / float(fmt.ber_coeff_b)) ** 0.5)


def required_snr(fmt: ModulationFormat, ber_target: float) -> float:
    """Linear SNR at which ``ber(fmt, snr) == ber_target``."""
    a = float(fmt.ber_coeff_a)
    if not 0 < ber_target < a:
        raise ValueError(f"{fmt.name} BER target must lie in (0, {a:g}), got {ber_target}")
    return float(fmt.ber_coeff_b) * erfc_inv(ber_target / a) ** 2


def sensitivity(
    fmt: ModulationFormat,
    ber_target: float,
    terms: NoiseTerms,
    snr_q_linear: float,
) -> float | Infeasible:
    """
    Minimum received signal power [W] reaching ``ber_target``.

    Returns :class:`Infeasible` when the required SNR is at or above the
    implementation floor ``snr_q_linear``.
    """
    s = required_snr(fmt, ber_target)
    if s >= snr_q_linear:
        return Infeasible(
            f"{fmt.name} needs {lin_to_db(s):.2f} dB SNR, floor is {lin_to_db(snr_q_linear):.2f} dB"
        )
    return s * terms.n0_equiv / (1.0 - s / snr_q_linear)


def ber_floor(fmt: ModulationFormat, snr_q_linear: float) -> float:
    """Lowest BER reachable as the signal power grows without bound."""
    if not snr_q_linear > 0:
        raise ValueError("snr_q_linear must be positive")
    return float(ber(fmt, snr_q_linear))
