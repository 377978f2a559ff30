"""Adaptive state observation of uncertain LTV systems with exosystem
disturbances: truth simulation, GPEBO regression generation, interlaced
LS+DREM parameter estimation and certainty-equivalent state reconstruction.
"""

from . import estimator, gpebo, linalg, observer, ode, scenario_io, sim, truth, verify
from .ode import IntegrationConfig
from .sim import run_closed_loop, run_report
from .truth import Scenario, make_example_scenario

__all__ = [
    "estimator", "gpebo", "linalg", "observer", "ode", "scenario_io", "sim",
    "truth", "verify",
    "IntegrationConfig", "Scenario", "make_example_scenario",
    "run_closed_loop", "run_report",
]

__version__ = "0.1.0"
