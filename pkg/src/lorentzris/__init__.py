"""Sum-rate optimization for wideband RIS-assisted uplink MIMO-OFDM with
Lorentzian (resonant) metamaterial elements."""

from .lorentzian import (
    FrequencyGrid,
    LorentzianParams,
    ParamBounds,
    RISProfile,
    evaluate_response,
    project_params,
    quality_factor,
)
from .channel import (
    FrequencyChannelSet,
    Geometry,
    TapChannelSet,
    effective_channel,
    sample_taps,
    taps_to_frequency,
)
from .rate import RateResult, sum_rate, wmmse_objective
from .wmmse import AuxiliaryVars, QuadraticForm, build_quadratic, update_S, update_U
from .lm_solver import LMProblem, lm_fit
from .pdd import PDDOptions, PDDState, al_value, pg_step, run_pdd
from .bcd import BCDConfig, init_params, run_bcd
from .baseline import FlatConfig, baseline_flat_rate, flat_to_lorentzian, optimize_flat

__version__ = "0.1.0"
