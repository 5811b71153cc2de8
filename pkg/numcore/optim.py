"""
Adam optimizer with bias correction.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Sequence

import numpy as np

from numcore.errors import ContractError, DimensionError
from numcore.tensor import Parameter

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    """First/second moment buffers keyed by parameter name, plus the step count."""

    first: Dict[str, np.ndarray] = field(default_factory=dict)
    second: Dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adam_step(params: Sequence[Parameter], grads: Mapping[str, np.ndarray], state: AdamState,
              lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
    """Apply one bias-corrected Adam update to ``params`` in place."""
    if lr <= 0:
        raise ContractError(f"learning rate must be positive, got {lr}")
    for param in params:
        grad = grads.get(param.name)
        if grad is None:
            raise ContractError(f"missing gradient for parameter {param.name}")
        if grad.shape != param.shape:
            raise DimensionError(f"adam_step {param.name}", param.shape, grad.shape)

    state.t += 1
    correction1 = 1.0 - beta1 ** state.t
    correction2 = 1.0 - beta2 ** state.t
    for param in params:
        grad = grads[param.name]
        first = state.first.setdefault(param.name, np.zeros_like(param.data))
        second = state.second.setdefault(param.name, np.zeros_like(param.data))
        first *= beta1
        first += (1.0 - beta1) * grad
        second *= beta2
        second += (1.0 - beta2) * grad ** 2
        param.data -= lr * (first / correction1) / (np.sqrt(second / correction2) + eps)


class Adam:
    """Stateful wrapper that reads gradients from ``Parameter.grad``."""

    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
                 frozen: Optional[Iterable[str]] = None):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.frozen = tuple(frozen or ())
        self.state = AdamState()

    def _is_frozen(self, name: str) -> bool:
        return any(name.startswith(prefix) for prefix in self.frozen)

    def step(self, params: Iterable[Parameter]) -> int:
        """Update every non-frozen parameter that received a gradient."""
        active = [p for p in params if p.grad is not None and not self._is_frozen(p.name)]
        if not active:
            logger.debug("Adam step skipped: no gradients")
            return 0
        adam_step(active, {p.name: p.grad for p in active}, self.state,
                  self.lr, self.beta1, self.beta2, self.eps)
        return len(active)
