"""
Parameter initializers shared by the model blocks.
"""

from typing import Tuple

import numpy as np

from numcore.tensor import Parameter, ParameterSet


def normal(params: ParameterSet, name: str, shape: Tuple[int, ...],
           rng: np.random.Generator, scale: float) -> Parameter:
    return params.add(name, rng.normal(0.0, scale, size=shape))


def zeros(params: ParameterSet, name: str, shape: Tuple[int, ...]) -> Parameter:
    return params.add(name, np.zeros(shape))


def ones(params: ParameterSet, name: str, shape: Tuple[int, ...]) -> Parameter:
    return params.add(name, np.ones(shape))
