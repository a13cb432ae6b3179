''' The result type shared by all losses plus input checks '''

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import LossError
from ..tensor import TensorMap


@dataclass(frozen=True)
class LossValue:
    '''
        A scalar loss with optional analytic gradients.

        Gradients are keyed by the name of the input they belong to
        and have the same dims as that input.
    '''
    value: float
    grads: Optional[dict[str, TensorMap]] = None
    components: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise LossError(f"Loss value is not finite: {self.value}")

    def grad(self, name: str) -> TensorMap:
        ''' The gradient with respect to one input '''
        if self.grads is None or name not in self.grads:
            raise LossError(f"No gradient for input {name}")
        return self.grads[name]


def check_same_dims(**tensors: TensorMap):
    ''' Raise LossError unless all given tensors have identical dims '''
    dims = {name: tensor.dims for (name, tensor) in tensors.items()}
    if len(set(dims.values())) > 1:
        described = ", ".join(f"{name}={list(d)}" for (name, d) in dims.items())
        raise LossError(f"Loss inputs have mismatching dims: {described}")


def binary(tensor: TensorMap) -> np.ndarray:
    ''' A 0/1 map as a boolean array '''
    return tensor.array > 0.5
