''' Dice loss and online hard example mining '''

import numpy as np

from ..tensor import TensorMap
from .base import LossValue, binary, check_same_dims

DICE_SMOOTHING = 1e-6


def dice_loss(p: TensorMap, g: TensorMap, valid: TensorMap) -> LossValue:
    '''
        1 − (2Σ p·g + ε) / (Σ p² + Σ g² + ε) over the valid pixels.

        The gradient is returned under the name "p".
    '''
    check_same_dims(p=p, g=g, valid=valid)

    mask = binary(valid)
    if not mask.any():
        return LossValue(0.0, {"p": TensorMap.zeros(p.dims)})

    probs = np.where(mask, p.array.astype(np.float64), 0.0)
    truth = np.where(mask, g.array.astype(np.float64), 0.0)

    numerator = 2.0 * np.sum(probs * truth) + DICE_SMOOTHING
    denominator = np.sum(probs * probs) + np.sum(truth * truth) + DICE_SMOOTHING
    value = 1.0 - numerator / denominator

    grad = -2.0 * (truth * denominator - numerator * probs) / (denominator * denominator)
    grad = np.where(mask, grad, 0.0)

    return LossValue(float(value), {"p": TensorMap(grad)})


def ohem_mask(p_tex: TensorMap, g_tex: TensorMap, ignore: TensorMap, ratio: float) -> TensorMap:
    '''
        All non-ignored positives plus the ratio × |positives| hardest negatives.

        Hardness is the predicted text probability; equal scores are taken in
        ascending flat index order. Without positives every negative is kept.
    '''
    check_same_dims(p_tex=p_tex, g_tex=g_tex, ignore=ignore)

    ignored = binary(ignore).reshape(-1)
    truth = binary(g_tex).reshape(-1)
    positives = truth & ~ignored
    negatives = ~truth & ~ignored

    selected = positives.copy()
    num_positives = int(positives.sum())

    if num_positives == 0:
        selected |= negatives
    else:
        candidates = np.flatnonzero(negatives)
        quota = min(int(np.floor(ratio * num_positives)), len(candidates))
        scores = p_tex.array.reshape(-1)[candidates]
        # Stable sort keeps the lowest index first among equal scores
        hardest = candidates[np.argsort(-scores, kind='stable')[:quota]]
        selected[hardest] = True

    return TensorMap(selected.reshape(p_tex.dims))
