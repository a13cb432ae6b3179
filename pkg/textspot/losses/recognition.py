''' Cross-entropy of the recognition decoder '''

from typing import Sequence

import numpy as np

from scipy.special import log_softmax

from ..errors import LossError
from ..tensor import TensorMap
from .base import LossValue


def rec_loss(logits: TensorMap, target: Sequence[int]) -> LossValue:
    '''
        Mean cross-entropy over the target positions.

        target is a symbol id sequence that ends with EOS; logits rows past the
        end of the target get a zero gradient.
    '''
    if logits.rank != 2:
        raise LossError(f"Logits need dims [T,V], got {list(logits.dims)}")

    (steps, vocab_size) = logits.dims
    target = np.asarray(target, dtype=np.int64)
    if len(target) == 0:
        raise LossError("Target must at least contain EOS")
    if len(target) > steps:
        raise LossError(f"Target has {len(target)} symbols but there are only "
                        f"{steps} logit rows")
    if np.any(target < 0) or np.any(target >= vocab_size):
        raise LossError(f"Target ids must be within [0, {vocab_size}), got {target.tolist()}")

    rows = np.arange(len(target))
    log_probs = log_softmax(logits.array[:len(target)].astype(np.float64), axis=1)
    value = -float(np.mean(log_probs[rows, target]))

    grad = np.zeros((steps, vocab_size))
    grad[:len(target)] = np.exp(log_probs)
    grad[rows, target] -= 1.0
    grad /= len(target)

    return LossValue(value, {"logits": TensorMap(grad)})
