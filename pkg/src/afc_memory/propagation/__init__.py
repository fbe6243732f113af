"""Pulse propagation through the comb and storage efficiency."""

from .filter import GridMismatchError, NyquistViolationError, propagate, transfer_function
from .memory import (
    PassivityError,
    WindowOverlapError,
    afc_efficiency_analytic,
    delay_line_comparison,
    echo_efficiency,
    efficiency_db,
    mode_efficiencies,
    multimode_capacity,
    optimal_finesse,
)
from .models import MemoryResult, PulseTrain, TransferFunction

__all__ = [
    "GridMismatchError",
    "MemoryResult",
    "NyquistViolationError",
    "PassivityError",
    "PulseTrain",
    "TransferFunction",
    "WindowOverlapError",
    "afc_efficiency_analytic",
    "delay_line_comparison",
    "echo_efficiency",
    "efficiency_db",
    "mode_efficiencies",
    "multimode_capacity",
    "optimal_finesse",
    "propagate",
    "transfer_function",
]
