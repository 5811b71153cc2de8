"""
Minimal dense tensor algebra with reverse-mode differentiation.
"""

from numcore.errors import (
    CheckpointError,
    ConfigError,
    ContractError,
    DataFileNotFoundError,
    DataFormatError,
    DimensionError,
    NumericError,
    R2MError,
    VocabularyError,
)
from numcore.tensor import Graph, Parameter, ParameterSet, Tensor, current_graph, no_grad
from numcore.optim import Adam, AdamState, adam_step
from numcore.gradcheck import GradCheckReport, grad_check

__all__ = [
    "Adam",
    "AdamState",
    "CheckpointError",
    "ConfigError",
    "ContractError",
    "DataFileNotFoundError",
    "DataFormatError",
    "DimensionError",
    "GradCheckReport",
    "Graph",
    "NumericError",
    "Parameter",
    "ParameterSet",
    "R2MError",
    "Tensor",
    "VocabularyError",
    "adam_step",
    "current_graph",
    "grad_check",
    "no_grad",
]
