import numpy as np
import pytest

from numcore.errors import ContractError
from numcore.optim import Adam, AdamState, adam_step
from numcore.tensor import Parameter


def test_first_adam_step_moves_by_learning_rate():
    param = Parameter([[1.0, -1.0]], "w")
    adam_step([param], {"w": np.array([[1.0, -1.0]])}, AdamState(), lr=1e-3)
    step = 1e-3 / (1.0 + 1e-8)
    np.testing.assert_allclose(param.data, [[1.0 - step, -1.0 + step]], rtol=0, atol=1e-12)


def test_adam_matches_reference_recurrence(rng):
    param = Parameter(rng.normal(size=(2, 3)), "w")
    expected = param.data.copy()
    m = np.zeros_like(expected)
    v = np.zeros_like(expected)
    state = AdamState()
    for t in range(1, 6):
        grad = rng.normal(size=(2, 3))
        m = 0.9 * m + 0.1 * grad
        v = 0.999 * v + 0.001 * grad ** 2
        expected -= 0.01 * (m / (1 - 0.9 ** t)) / (np.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
        adam_step([param], {"w": grad}, state, lr=0.01)
    assert state.t == 5
    np.testing.assert_allclose(param.data, expected, rtol=1e-12)


@pytest.mark.parametrize("lr", [0.0, -1e-3])
def test_non_positive_learning_rate_is_rejected(lr):
    with pytest.raises(ContractError):
        adam_step([Parameter([[1.0]], "w")], {"w": np.ones((1, 1))}, AdamState(), lr=lr)


def test_missing_gradient_is_rejected():
    with pytest.raises(ContractError):
        adam_step([Parameter([[1.0]], "w")], {}, AdamState(), lr=1e-3)


def test_optimizer_skips_frozen_and_gradient_free_parameters():
    frozen = Parameter([[1.0]], "encoder.W")
    idle = Parameter([[1.0]], "head.bias")
    active = Parameter([[1.0]], "head.W_d")
    frozen.grad = np.ones((1, 1))
    active.grad = np.ones((1, 1))
    updated = Adam(lr=0.1, frozen=["encoder."]).step([frozen, idle, active])
    assert updated == 1
    assert frozen.data[0, 0] == 1.0
    assert idle.data[0, 0] == 1.0
    assert active.data[0, 0] < 1.0


def test_optimizer_without_gradients_is_a_no_op():
    optimizer = Adam(lr=0.1)
    assert optimizer.step([Parameter([[1.0]], "w")]) == 0
    assert optimizer.state.t == 0
