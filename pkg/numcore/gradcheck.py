"""
Central-difference verification of analytic gradients.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from numcore.tensor import Graph, Parameter, Tensor, no_grad

logger = logging.getLogger(__name__)

DEFAULT_EPS = 1e-5
DEFAULT_TOLERANCE = 1e-4


@dataclass
class GradCheckReport:
    """Max relative error per parameter name."""

    errors: Dict[str, float] = field(default_factory=dict)
    usable: bool = True
    reason: str = ""

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    def worst(self) -> Optional[Tuple[str, float]]:
        if not self.errors:
            return None
        name = max(self.errors, key=self.errors.get)
        return name, self.errors[name]

    def passed(self, tolerance: float = DEFAULT_TOLERANCE) -> bool:
        return self.usable and self.max_error < tolerance

    def merge(self, other: "GradCheckReport", prefix: str = "") -> None:
        for name, error in other.errors.items():
            self.errors[f"{prefix}{name}"] = error
        if not other.usable:
            self.usable = False
            self.reason = other.reason


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    """|a - n| / max(1e-8, |a| + |n|), elementwise."""
    return np.abs(analytic - numeric) / np.maximum(1e-8, np.abs(analytic) + np.abs(numeric))


def _evaluate(closure: Callable[[], Tensor]) -> float:
    with no_grad():
        return closure().item()


def numeric_gradient(closure: Callable[[], Tensor], param: Parameter, eps: float = DEFAULT_EPS,
                     entries: Optional[Sequence[int]] = None) -> np.ndarray:
    """Central differences of ``closure`` with respect to ``param``.

    Only the flat indices in ``entries`` are perturbed (all of them by default); the
    other entries of the result stay zero.
    """
    grad = np.zeros_like(param.data)
    flat = param.data.reshape(-1)
    out = grad.reshape(-1)
    for index in range(flat.size) if entries is None else entries:
        original = flat[index]
        flat[index] = original + eps
        plus = _evaluate(closure)
        flat[index] = original - eps
        minus = _evaluate(closure)
        flat[index] = original
        out[index] = (plus - minus) / (2.0 * eps)
    return grad


def grad_check(closure: Callable[[], Tensor], params: Sequence[Parameter],
               eps: float = DEFAULT_EPS, max_entries: Optional[int] = None,
               seed: int = 0) -> GradCheckReport:
    """Compare backward() gradients of a scalar closure against central differences.

    The closure must rebuild the loss from the current parameter values and be
    deterministic; a closure that returns different values for identical
    parameters is reported as unusable. With ``max_entries``, larger tensors are
    checked on that many entries drawn with ``seed``.
    """
    for param in params:
        param.grad = None
    with Graph() as graph:
        loss = closure()
    base = loss.item()
    graph.backward(loss)

    if _evaluate(closure) != base:
        logger.warning("Gradient check closure is not deterministic")
        return GradCheckReport(usable=False, reason="closure is not deterministic")

    rng = np.random.default_rng(seed)
    report = GradCheckReport()
    for param in params:
        analytic = param.grad if param.grad is not None else np.zeros_like(param.data)
        entries = None
        if max_entries is not None and param.data.size > max_entries:
            entries = np.sort(rng.choice(param.data.size, size=max_entries, replace=False))
        numeric = numeric_gradient(closure, param, eps, entries)
        errors = relative_error(analytic, numeric).reshape(-1)
        report.errors[param.name] = float(errors.max() if entries is None else errors[entries].max())
    worst = report.worst()
    if worst is not None:
        logger.info(f"Gradient check over {len(params)} parameters: worst {worst[0]} = {worst[1]:.3e}")
    return report
