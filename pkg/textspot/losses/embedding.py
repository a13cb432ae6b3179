'''
Aggregation and discrimination losses on the instance vector map.

Both losses only see differences of instance vectors, so adding the same
vector to every pixel leaves them unchanged.
'''

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..config import LossConfig
from ..errors import LossError
from ..labelgen import InstanceLabelMap
from ..tensor import TensorMap
from .base import LossValue, binary


@dataclass
class _Instance:
    text: np.ndarray    # flat indices of T_i
    kernel: np.ndarray  # flat indices of K_i
    mean: np.ndarray    # G(K_i), shape [D]


def _vectors(emb: TensorMap, instances: InstanceLabelMap,
             kernel_instances: InstanceLabelMap) -> np.ndarray:
    if emb.rank != 3:
        raise LossError(f"Instance vectors need dims [D,H,W], got {list(emb.dims)}")

    spatial = emb.dims[1:]
    for (name, label_map) in (("instances", instances), ("kernel_instances", kernel_instances)):
        if label_map.labels.shape != spatial:
            raise LossError(f"{name} is {list(label_map.labels.shape)}, "
                            f"but the instance vectors are {list(spatial)}")

    return emb.array.astype(np.float64).reshape(emb.dims[0], -1)


def _instances(vectors: np.ndarray, instances: InstanceLabelMap,
               kernel_instances: InstanceLabelMap) -> list[_Instance]:
    ''' Instances that have both text and kernel pixels; the others do not count towards N '''
    text_ids = instances.labels.reshape(-1)
    kernel_ids = kernel_instances.labels.reshape(-1)

    result = []
    for instance_id in range(1, instances.num_instances + 1):
        text = np.flatnonzero(text_ids == instance_id)
        kernel = np.flatnonzero(kernel_ids == instance_id)
        if len(text) == 0 or len(kernel) == 0:
            continue
        result.append(_Instance(text, kernel, vectors[:, kernel].mean(axis=1)))
    return result


def _unit(diff: np.ndarray, dist: np.ndarray) -> np.ndarray:
    # The gradient of a norm at zero is taken as zero
    safe = np.where(dist > 0.0, dist, 1.0)
    return np.where(dist > 0.0, diff / safe, 0.0)


def _pull(dist: np.ndarray, delta: float) -> tuple[np.ndarray, np.ndarray]:
    ''' ln(ReLU(dist − δ)² + 1) and its derivative with respect to dist '''
    excess = np.maximum(dist - delta, 0.0)
    return np.log1p(excess * excess), 2.0 * excess / (1.0 + excess * excess)


def _push(dist: np.ndarray, delta: float) -> tuple[np.ndarray, np.ndarray]:
    ''' ln(ReLU(δ − dist)² + 1) and its derivative with respect to dist '''
    shortfall = np.maximum(delta - dist, 0.0)
    return np.log1p(shortfall * shortfall), -2.0 * shortfall / (1.0 + shortfall * shortfall)


def _background(g_tex: TensorMap, ignore: Optional[TensorMap], spatial) -> np.ndarray:
    if g_tex.dims[-2:] != spatial:
        raise LossError(f"g_tex is {list(g_tex.dims)}, but the instance vectors "
                        f"are {list(spatial)}")
    background = ~binary(g_tex).reshape(-1)
    if ignore is not None:
        if ignore.dims != g_tex.dims:
            raise LossError(f"Ignore mask is {list(ignore.dims)}, expected {list(g_tex.dims)}")
        background &= ~binary(ignore).reshape(-1)
    return np.flatnonzero(background)


def agg_loss(emb: TensorMap, instances: InstanceLabelMap, kernel_instances: InstanceLabelMap,
             cfg: LossConfig) -> LossValue:
    '''
        Pulls every text pixel towards the mean instance vector of its kernel:
        (1/N) Σ_i mean_{p ∈ T_i} ln(ReLU(‖F(p) − G(K_i)‖ − δ_agg)² + 1)
    '''
    vectors = _vectors(emb, instances, kernel_instances)
    grad = np.zeros_like(vectors)
    found = _instances(vectors, instances, kernel_instances)

    if not found:
        return LossValue(0.0, {"emb": TensorMap.zeros(emb.dims)})

    total = 0.0
    for instance in found:
        diff = vectors[:, instance.text] - instance.mean[:, None]
        dist = np.linalg.norm(diff, axis=0)
        (terms, slope) = _pull(dist, cfg.delta_agg)
        total += terms.mean()

        contribution = _unit(diff, dist) * (slope / len(instance.text))
        grad[:, instance.text] += contribution
        grad[:, instance.kernel] -= contribution.sum(axis=1)[:, None] / len(instance.kernel)

    count = len(found)
    return LossValue(total / count, {"emb": TensorMap((grad / count).reshape(emb.dims))})


def dis_loss(emb: TensorMap, instances: InstanceLabelMap, kernel_instances: InstanceLabelMap,
             g_tex: TensorMap, cfg: LossConfig, ignore: Optional[TensorMap] = None) -> LossValue:
    '''
        Pushes kernels away from each other and from the background:
        (1/N²) Σ_i [D_b(K_i) + Σ_{j≠i} ln(ReLU(δ_dis − ‖G(K_i) − G(K_j)‖)² + 1)]

        The background is every pixel that is neither text nor ignored.
    '''
    vectors = _vectors(emb, instances, kernel_instances)
    background = _background(g_tex, ignore, emb.dims[1:])
    grad = np.zeros_like(vectors)
    found = _instances(vectors, instances, kernel_instances)

    if not found:
        return LossValue(0.0, {"emb": TensorMap.zeros(emb.dims)})

    count = len(found)
    means = np.stack([instance.mean for instance in found], axis=1)  # [D, N]
    mean_grads = np.zeros_like(means)

    # Ordered pairs (i, j), i ≠ j
    diff = means[:, :, None] - means[:, None, :]
    dist = np.linalg.norm(diff, axis=0)
    (terms, slope) = _push(dist, cfg.delta_dis)
    off_diagonal = ~np.eye(count, dtype=bool)
    total = float(np.sum(terms[off_diagonal]))

    pair_grads = _unit(diff, dist) * np.where(off_diagonal, slope, 0.0)
    mean_grads += pair_grads.sum(axis=2) - pair_grads.sum(axis=1)

    if len(background) > 0:
        background_vectors = vectors[:, background]
        for (index, instance) in enumerate(found):
            diff = background_vectors - instance.mean[:, None]
            dist = np.linalg.norm(diff, axis=0)
            (terms, slope) = _push(dist, cfg.delta_dis)
            total += terms.mean()

            contribution = _unit(diff, dist) * (slope / len(background))
            grad[:, background] += contribution
            mean_grads[:, index] -= contribution.sum(axis=1)

    for (index, instance) in enumerate(found):
        grad[:, instance.kernel] += mean_grads[:, index][:, None] / len(instance.kernel)

    scale = 1.0 / (count * count)
    return LossValue(total * scale, {"emb": TensorMap((grad * scale).reshape(emb.dims))})


def agg_kink_args(emb: TensorMap, instances: InstanceLabelMap,
                  kernel_instances: InstanceLabelMap, cfg: LossConfig) -> np.ndarray:
    ''' Quantities whose sign change marks a non-differentiable point of agg_loss '''
    vectors = _vectors(emb, instances, kernel_instances)
    args = []
    for instance in _instances(vectors, instances, kernel_instances):
        dist = np.linalg.norm(vectors[:, instance.text] - instance.mean[:, None], axis=0)
        args.extend([dist - cfg.delta_agg, dist])
    return np.concatenate(args) if args else np.zeros(0)


def dis_kink_args(emb: TensorMap, instances: InstanceLabelMap,
                  kernel_instances: InstanceLabelMap, g_tex: TensorMap, cfg: LossConfig,
                  ignore: Optional[TensorMap] = None) -> np.ndarray:
    ''' Quantities whose sign change marks a non-differentiable point of dis_loss '''
    vectors = _vectors(emb, instances, kernel_instances)
    background = _background(g_tex, ignore, emb.dims[1:])
    found = _instances(vectors, instances, kernel_instances)

    args = []
    for (index, instance) in enumerate(found):
        for other in found[index + 1:]:
            dist = np.linalg.norm(instance.mean - other.mean, keepdims=True)
            args.extend([cfg.delta_dis - dist, dist])
        if len(background) > 0:
            dist = np.linalg.norm(vectors[:, background] - instance.mean[:, None], axis=0)
            args.extend([cfg.delta_dis - dist, dist])
    return np.concatenate(args) if args else np.zeros(0)
