"""Manufactured problems, error metrics and study drivers."""

from .experiments import Experiment, constant_sanity, example1, example2, example2_phases, make_experiment
from .studies import (
    CSV_COLUMNS,
    StudyResult,
    StudyRow,
    relative_l2_error,
    run_h_study,
    run_oracle_study,
    run_pollution_study,
    run_single,
)

__all__ = [
    "CSV_COLUMNS",
    "Experiment",
    "StudyResult",
    "StudyRow",
    "constant_sanity",
    "example1",
    "example2",
    "example2_phases",
    "make_experiment",
    "relative_l2_error",
    "run_h_study",
    "run_oracle_study",
    "run_pollution_study",
    "run_single",
]
