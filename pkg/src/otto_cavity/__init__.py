"""Quantum-field Otto engine in a cavity with two vibrating walls.

Builds the nonlinear photon-phonon Hamiltonian, locates the dressed
resonances from avoided level crossings and integrates the driven
dressed-picture master equation through Otto cycles.
"""
__version__ = "0.1.0"

from .cycle import CycleReport, EngineRun, PlateauSettings, efficiency, run_engine
from .dressed import n_thermal
from .drive import DriveSchedule
from .model import BathParams, ModelParams
from .operators import TruncationSpec

__all__ = [
    "BathParams",
    "CycleReport",
    "DriveSchedule",
    "EngineRun",
    "ModelParams",
    "PlateauSettings",
    "TruncationSpec",
    "efficiency",
    "n_thermal",
    "run_engine",
]
