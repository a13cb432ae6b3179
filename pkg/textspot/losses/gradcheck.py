'''
Checks analytic loss gradients against central finite differences.

Coordinates whose perturbation moves a ReLU or norm argument across (or
close to) zero are excluded and counted separately.
'''

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..config import LossConfig
from ..labelgen import InstanceLabelMap, LabelSet
from ..recognition.charset import Charset
from ..tensor import TensorMap
from .base import LossValue
from .dice import dice_loss
from .detection import det_loss
from .embedding import agg_loss, dis_loss, agg_kink_args, dis_kink_args
from .recognition import rec_loss

Inputs = dict[str, TensorMap]
LossOp = Callable[[Inputs], LossValue]
KinkArgs = Callable[[Inputs], np.ndarray]

DEFAULT_EPSILON = 1e-3
DEFAULT_SAMPLES = 200
DEFAULT_TOLERANCE = 1e-3

# Floor of the relative error denominator
GRAD_FLOOR = 1e-4


@dataclass(frozen=True)
class GradCheckResult:
    ''' Outcome of one finite-difference check '''
    max_rel_error: float
    checked: int
    excluded: int

    def passed(self, tolerance: float = DEFAULT_TOLERANCE) -> bool:
        ''' Did every checked coordinate agree within the tolerance? '''
        return self.checked > 0 and self.max_rel_error < tolerance


@dataclass(frozen=True)
class GradCheckCase:
    ''' A loss together with the inputs it is checked at '''
    name: str
    loss_op: LossOp
    inputs: Inputs
    kink_args: Optional[KinkArgs] = None

    def run(self, epsilon: float = DEFAULT_EPSILON, samples: int = DEFAULT_SAMPLES,
            seed: int = 0) -> GradCheckResult:
        ''' Shorthand for finite_diff_check on this case '''
        return finite_diff_check(self.loss_op, self.inputs, epsilon=epsilon,
                                 samples=samples, seed=seed, kink_args=self.kink_args)


def _with_value(inputs: Inputs, name: str, index: int, value: np.float32) -> Inputs:
    array = inputs[name].array.copy()
    array.reshape(-1)[index] = value
    return inputs | {name: TensorMap(array)}


def _near_kink(base: np.ndarray, plus: np.ndarray, minus: np.ndarray, epsilon: float) -> bool:
    changed = (plus != base) | (minus != base)
    if not changed.any():
        return False

    (base, plus, minus) = (base[changed], plus[changed], minus[changed])
    if np.any(np.sign(plus) != np.sign(minus)) or np.any(np.sign(base) != np.sign(plus)):
        return True
    closest = min(np.abs(base).min(), np.abs(plus).min(), np.abs(minus).min())
    return bool(closest < 2.0 * epsilon)


def finite_diff_check(loss_op: LossOp, inputs: Inputs, epsilon: float = DEFAULT_EPSILON,
                      samples: int = DEFAULT_SAMPLES, seed: int = 0,
                      kink_args: Optional[KinkArgs] = None) -> GradCheckResult:
    '''
        Compare every gradient the loss returns against central differences.

        At most `samples` random coordinates are checked per input (all of them
        for smaller inputs). The step is taken on the float32 values, and the
        difference quotient divides by the step that was actually applied.
        The relative error is |fd − an| / max(|fd|, |an|, 1e-4).
    '''
    rng = np.random.default_rng(seed)
    base = loss_op(inputs)
    if not base.grads:
        return GradCheckResult(0.0, 0, 0)

    base_kinks = kink_args(inputs) if kink_args else None
    max_error = 0.0
    checked = 0
    excluded = 0

    for (name, grad) in base.grads.items():
        values = inputs[name].array.reshape(-1)
        analytic = grad.array.reshape(-1).astype(np.float64)

        if values.size <= samples:
            coords = np.arange(values.size)
        else:
            coords = np.sort(rng.choice(values.size, size=samples, replace=False))

        for index in coords:
            x_plus = np.float32(values[index] + np.float32(epsilon))
            x_minus = np.float32(values[index] - np.float32(epsilon))
            plus = _with_value(inputs, name, index, x_plus)
            minus = _with_value(inputs, name, index, x_minus)

            if base_kinks is not None and _near_kink(base_kinks, kink_args(plus),
                                                     kink_args(minus), epsilon):
                excluded += 1
                continue

            step = float(x_plus) - float(x_minus)
            numeric = (loss_op(plus).value - loss_op(minus).value) / step
            error = abs(numeric - analytic[index]) / max(abs(numeric), abs(analytic[index]),
                                                         GRAD_FLOOR)
            max_error = max(max_error, error)
            checked += 1

    return GradCheckResult(max_error, checked, excluded)


def two_instance_labels(height: int = 16, width: int = 16) -> LabelSet:
    ''' Two horizontal text lines with their kernels and a small ignore patch '''
    instances = np.zeros((height, width), dtype=np.int32)
    kernels = np.zeros((height, width), dtype=np.int32)
    ignore = np.zeros((height, width), dtype=bool)

    instances[2:7, 2:14] = 1
    kernels[3:6, 4:12] = 1
    instances[9:14, 2:14] = 2
    kernels[10:13, 4:12] = 2
    ignore[14:, :4] = True

    return LabelSet(
        g_tex=TensorMap((instances > 0)[None]),
        g_ker=TensorMap((kernels > 0)[None]),
        instances=InstanceLabelMap(instances),
        kernel_instances=InstanceLabelMap(kernels),
        ignore_mask=TensorMap(ignore[None]),
    )


def dice_case(seed: int, size: int = 8) -> GradCheckCase:
    ''' Dice loss on random probabilities and a random valid mask '''
    rng = np.random.default_rng(seed)
    inputs = {
        "p": TensorMap(rng.uniform(0.05, 0.95, size=(1, size, size))),
        "g": TensorMap(rng.random((1, size, size)) < 0.4),
        "valid": TensorMap(rng.random((1, size, size)) < 0.9),
    }
    return GradCheckCase("dice", lambda x: dice_loss(x["p"], x["g"], x["valid"]), inputs)


def agg_case(seed: int, cfg: LossConfig = LossConfig(), emb_dim: int = 4) -> GradCheckCase:
    ''' Aggregation loss on the two-instance fixture with random instance vectors '''
    labels = two_instance_labels()
    rng = np.random.default_rng(seed)
    emb = TensorMap(rng.normal(0.0, 1.0, size=(emb_dim,) + labels.instances.labels.shape))

    def loss_op(x: Inputs) -> LossValue:
        return agg_loss(x["emb"], labels.instances, labels.kernel_instances, cfg)

    def kinks(x: Inputs) -> np.ndarray:
        return agg_kink_args(x["emb"], labels.instances, labels.kernel_instances, cfg)

    return GradCheckCase("agg", loss_op, {"emb": emb}, kinks)


def dis_case(seed: int, cfg: LossConfig = LossConfig(), emb_dim: int = 4) -> GradCheckCase:
    ''' Discrimination loss on the two-instance fixture with random instance vectors '''
    labels = two_instance_labels()
    rng = np.random.default_rng(seed)
    emb = TensorMap(rng.normal(0.0, 1.0, size=(emb_dim,) + labels.instances.labels.shape))

    def loss_op(x: Inputs) -> LossValue:
        return dis_loss(x["emb"], labels.instances, labels.kernel_instances, labels.g_tex,
                        cfg, ignore=labels.ignore_mask)

    def kinks(x: Inputs) -> np.ndarray:
        return dis_kink_args(x["emb"], labels.instances, labels.kernel_instances,
                             labels.g_tex, cfg, ignore=labels.ignore_mask)

    return GradCheckCase("dis", loss_op, {"emb": emb}, kinks)


def det_case(seed: int, cfg: LossConfig = LossConfig(), emb_dim: int = 4) -> GradCheckCase:
    '''
        Combined detection loss. The OHEM ratio is raised so that every negative
        is selected and perturbations cannot change the selection.
    '''
    labels = two_instance_labels()
    cfg = LossConfig(alpha=cfg.alpha, beta=cfg.beta, delta_agg=cfg.delta_agg,
                     delta_dis=cfg.delta_dis, ohem_ratio=1e6)
    rng = np.random.default_rng(seed)
    shape = labels.instances.labels.shape
    inputs = {
        "p_tex": TensorMap(rng.uniform(0.05, 0.95, size=(1,) + shape)),
        "p_ker": TensorMap(rng.uniform(0.05, 0.95, size=(1,) + shape)),
        "emb": TensorMap(rng.normal(0.0, 1.0, size=(emb_dim,) + shape)),
    }

    def loss_op(x: Inputs) -> LossValue:
        return det_loss(x["p_tex"], x["p_ker"], x["emb"], labels, cfg)

    def kinks(x: Inputs) -> np.ndarray:
        return np.concatenate([
            agg_kink_args(x["emb"], labels.instances, labels.kernel_instances, cfg),
            dis_kink_args(x["emb"], labels.instances, labels.kernel_instances, labels.g_tex,
                          cfg, ignore=labels.ignore_mask),
        ])

    return GradCheckCase("det", loss_op, inputs, kinks)


def rec_case(seed: int, charset: Optional[Charset] = None, steps: int = 8) -> GradCheckCase:
    ''' Cross-entropy of random logits against an encoded word '''
    charset = charset or Charset.default()
    target = charset.encode("pan42")
    rng = np.random.default_rng(seed)
    logits = TensorMap(rng.normal(0.0, 2.0, size=(steps, charset.size)))
    return GradCheckCase("rec", lambda x: rec_loss(x["logits"], target), {"logits": logits})


def default_cases(seed: int, cfg: LossConfig = LossConfig(),
                  emb_dim: int = 4) -> list[GradCheckCase]:
    ''' The checks run by the grad-check command '''
    return [dice_case(seed), agg_case(seed, cfg, emb_dim), dis_case(seed, cfg, emb_dim),
            det_case(seed, cfg, emb_dim), rec_case(seed)]
