"""Secrecy capacity of the amplitude-constrained scalar Gaussian wiretap channel."""

from wiretap.model import ChannelPair, SymmetricInput, OutputMixture
from wiretap.optimizer import AscentParams
from wiretap.support_update import UpdatePolicy
from wiretap.kkt import KktReport, validate
from wiretap.solver import SolverConfig, SolveReport, solve, sweep

__all__ = [
    "AscentParams",
    "ChannelPair",
    "KktReport",
    "OutputMixture",
    "SolveReport",
    "SolverConfig",
    "SymmetricInput",
    "UpdatePolicy",
    "solve",
    "sweep",
    "validate",
]

__version__ = "0.1.0"
