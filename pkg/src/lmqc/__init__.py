"""Simulation of single- and two-phonon interference between superconducting qubits."""
from .errors import ConvergenceError, GridError, LMQCError, ParameterError, UnknownScenarioError

__all__ = ["ConvergenceError", "GridError", "LMQCError", "ParameterError", "UnknownScenarioError"]
