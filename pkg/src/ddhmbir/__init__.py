"""Streaming digital-holography reconstruction through evolving turbulence."""
from .config import RunConfig, load_config
from .dynamic import DdhConfig, ReconState, ddh_step, run_static, run_stream
from .em import EmConfig, MrfPrior, e_step, em_iteration, m_step_phi, m_step_r
from .errors import (ConfigError, DdhError, DegenerateFitError, DegenerateInputError,
                     DimensionError, FormatError, IoError)
from .forward import PropagationOperator, normalize, synthesize_measurement
from .grid import ApertureMask, make_rng
from .metrics import aggregate_runs, peak_strehl
from .simulation import SimConfig, simulate
from .turbulence import TurbulenceConfig, flow_velocity, generate_screen, screen_at_time

__version__ = "0.1.0"

__all__ = [
    "ApertureMask", "ConfigError", "DdhConfig", "DdhError", "DegenerateFitError",
    "DegenerateInputError", "DimensionError", "EmConfig", "FormatError", "IoError", "MrfPrior",
    "PropagationOperator", "ReconState", "RunConfig", "SimConfig", "TurbulenceConfig",
    "aggregate_runs", "ddh_step", "e_step", "em_iteration", "flow_velocity", "generate_screen",
    "load_config", "m_step_phi", "m_step_r", "make_rng", "normalize", "peak_strehl",
    "run_static", "run_stream", "screen_at_time", "simulate", "synthesize_measurement",
]
