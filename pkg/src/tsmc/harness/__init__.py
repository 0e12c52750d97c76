"""Experiment configuration, sweeps and the command-line entry point."""
from .config import ExperimentConfig, load_config
from .experiments import (BerPoint, emit_csv, run_ber, run_mismatch, run_quantizer,
                          run_reaction, run_taps)

__all__ = ["ExperimentConfig", "load_config", "BerPoint", "emit_csv", "run_ber",
           "run_mismatch", "run_quantizer", "run_reaction", "run_taps"]
