"""
DN-SARSA(lambda): a neural-dynamic SARSA(lambda) learner that sequences
elementary behaviors, a simulated color-search ring world to run it in, and
a tabular SARSA(lambda) reference for checking its updates.
"""

from .errors import (AlignmentError, ConfigurationError, SimulationDivergence,
                     WeightFileError, WTAViolation)
from .experiment import (ExperimentConfig, RunLog, Simulation, export_metrics,
                         load_config, run_batch, run_experiment)
from .oracle import EventStream, TabularSarsa, compare, replay, sarsa_update
from .weights import load_weights, save_weights

__version__ = "0.1.0"
