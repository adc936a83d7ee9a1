#!/usr/bin/env python3
"""
Configuration for apflow
Solver constants, tolerances, output formats and logging settings
"""

import logging
import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

load_dotenv()

# Solver constants
SOLVER_DEFAULTS = {
    "jump_floor": 1e-12,  # faces with smaller jumps contribute nothing to λ (relative for ϱ and P')
    "curvature_series_cutoff": 1e-3,  # |[ϱ]|/ϱ below which P''(ϱ*) comes from its power series
    "max_steps": 1_000_000,
    "dense_cap": 4096,  # largest cell count for dense oracle matrices
    "imag_tolerance": 1e-13,  # relative to ‖b‖∞
    "square_tolerance": 1e-12,  # relative mismatch allowed between L_1/N_1 and L_2/N_2
    "min_cells": 4,
    "projector_max_epsilon": 1e-4,
}

# Acceptance tolerances used by the validation suite
TOLERANCES = {
    "identity_residual": 1e-9,
    "spectral_vs_dense": 1e-12,
    "mass_conservation": 1e-12,
    "energy_slack": 1e-10,
    "duality": 1e-12,
    "scheme_residual": 1e-9,
}

# Output files and formats
OUTPUT_CONFIG = {
    "default_dir": "output",
    "energies_file": "energies.csv",
    "energies_columns": ["t", "dt", "lambda", "ke", "pe", "total", "min_rho", "div_u_l1"],
    "fields_pattern": "fields_{step:06d}.csv",
    "summary_file": "summary.yaml",
    "eoc_columns": ["n", "h", "err_l2", "eoc"],
    "eoc_rho_file": "eoc_rho.csv",
    "eoc_u_file": "eoc_u.csv",
    "line_terminator": "\n",
}

# Process exit codes of the command line front end
EXIT_CODES = {
    "success": 0,
    "config_error": 2,
    "runtime_failure": 3,
}

# Monitoring and Logging
LOGGING_CONFIG = {
    "log_level": os.getenv("APFLOW_LOG_LEVEL", "INFO"),
    "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
    "log_steps": False,  # per-step DEBUG records
}


def get_output_dir(configured: Optional[str] = None) -> Path:
    """Resolve the output directory: APFLOW_OUT, then config value, then default."""
    env_dir = os.getenv("APFLOW_OUT", "").strip()
    if env_dir:
        return Path(env_dir)
    if configured:
        return Path(configured)
    return Path(OUTPUT_CONFIG["default_dir"])


def get_default_workers() -> int:
    try:
        return max(1, int(os.getenv("APFLOW_WORKERS", "1")))
    except ValueError:
        return 1


def configure_logging(level: Optional[str] = None) -> None:
    """Apply LOGGING_CONFIG to the root logger (CLI use only)."""
    level_name = (level or LOGGING_CONFIG["log_level"]).upper()
    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format=LOGGING_CONFIG["format"],
    )
