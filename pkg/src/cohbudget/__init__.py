"""Performance limits and power budget of unamplified coherent optical receivers."""
from .budget import (
    LinkConfig,
    ModulatorLossModel,
    SweepSpec,
    compute_opb,
    link_budget,
    modulator_loss,
    snrq_at,
    sweep,
    tia_irnd_at,
    tx_power,
)
from .calibration import BerCurve, FitResult, TiaDataset, fit_receiver_params, fit_tia_power_law
from .model import (
    HD_FEC_BER,
    QAM16,
    QAM64,
    QPSK,
    SD_FEC_BER,
    TABLE1_PARAMS,
    Infeasible,
    ModulationFormat,
    NoiseParams,
    NoiseTerms,
    ber,
    ber_floor,
    beq_from_baud,
    erfc_inv,
    noise_terms,
    required_snr,
    sensitivity,
    snr_rx,
)
from .montecarlo import simulate_ber, validate_formulas
from .split import SplitConfig, opb_grid, opb_with_split, optimize_split

__version__ = "0.1.0"
