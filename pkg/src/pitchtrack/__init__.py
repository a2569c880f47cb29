"""
Pitch-plane sounding-rocket simulator with an adaptive inner/outer trajectory-tracking controller.
"""

__version__ = "0.1.0"

from .aero import AeroTables, aero_coefficients, default_aero_tables, load_aero_csv
from .config import ConfigError, SimConfig, load_config
from .dynamics import ControlCommand, FlightModel, NumericalDivergence, RigidBodyState
from .environment import WindModel, gravity, sample_atmosphere
from .harness import Dispersion, FlightLog, RunMetrics, compute_metrics, run_flight, run_monte_carlo
from .inner import AdaptiveState, InnerGains, SingularityError, inner_step
from .mission import integrate_profile, sample_reference, scenario_I, scenario_II
from .outer import OuterGains, extract_pitch_reference, lqr_design, outer_step
from .vehicle import MassState, VehicleModel, mass_properties

__all__ = [
    "AdaptiveState", "AeroTables", "ConfigError", "ControlCommand", "Dispersion", "FlightLog",
    "FlightModel", "InnerGains", "MassState", "NumericalDivergence", "OuterGains", "RigidBodyState",
    "RunMetrics", "SimConfig", "SingularityError", "VehicleModel", "WindModel", "aero_coefficients",
    "compute_metrics", "default_aero_tables", "extract_pitch_reference", "gravity", "inner_step",
    "integrate_profile", "load_aero_csv", "load_config", "lqr_design", "mass_properties",
    "outer_step", "run_flight", "run_monte_carlo", "sample_atmosphere", "sample_reference",
    "scenario_I", "scenario_II",
]
