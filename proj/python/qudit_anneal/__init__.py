"""Spectral simulator for adiabatic optimization with qubits and four-level qudits."""

from ._core import (
    AnnealSchedule,
    ConfigError,
    ConsistencyError,
    Error,
    IsingProblem,
    NumericalError,
    SchedulePoint,
    SingleQuditParams,
    classical_ground,
    filter_degenerate,
    gap_at,
    generate_instance,
    lowest_eigenvalues,
    min_gap_sweep,
    qudit_to_effective_matrix,
    run_comparison,
    schedule_violation,
    squid,
    tunneling_matrix,
    tunneling_to_qudit,
)

__version__ = "0.1.0"

__all__ = [
    "AnnealSchedule",
    "ConfigError",
    "ConsistencyError",
    "Error",
    "IsingProblem",
    "NumericalError",
    "SchedulePoint",
    "SingleQuditParams",
    "classical_ground",
    "filter_degenerate",
    "gap_at",
    "generate_instance",
    "lowest_eigenvalues",
    "min_gap_sweep",
    "qudit_to_effective_matrix",
    "run_comparison",
    "schedule_violation",
    "squid",
    "tunneling_matrix",
    "tunneling_to_qudit",
]
