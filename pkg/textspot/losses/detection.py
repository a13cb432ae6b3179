''' The combined detection loss L_tex + α L_ker + β (L_agg + L_dis) '''

import numpy as np

from ..config import LossConfig
from ..labelgen import LabelSet
from ..tensor import TensorMap
from .base import LossValue, binary, check_same_dims
from .dice import dice_loss, ohem_mask
from .embedding import agg_loss, dis_loss


def kernel_valid_mask(labels: LabelSet) -> TensorMap:
    ''' The kernel loss only looks at non-ignored ground-truth text pixels '''
    return TensorMap(binary(labels.g_tex) & ~binary(labels.ignore_mask))


def det_loss(p_tex: TensorMap, p_ker: TensorMap, emb: TensorMap, labels: LabelSet,
             cfg: LossConfig) -> LossValue:
    '''
        Detection loss at stride 4.

        The OHEM selection is treated as a constant. Gradients are returned
        for "p_tex", "p_ker", and "emb"; the components for "tex", "ker",
        "agg", and "dis".
    '''
    check_same_dims(p_tex=p_tex, p_ker=p_ker, g_tex=labels.g_tex, g_ker=labels.g_ker,
                    ignore=labels.ignore_mask)

    selected = ohem_mask(p_tex, labels.g_tex, labels.ignore_mask, cfg.ohem_ratio)
    tex = dice_loss(p_tex, labels.g_tex, selected)
    ker = dice_loss(p_ker, labels.g_ker, kernel_valid_mask(labels))
    agg = agg_loss(emb, labels.instances, labels.kernel_instances, cfg)
    dis = dis_loss(emb, labels.instances, labels.kernel_instances, labels.g_tex, cfg,
                   ignore=labels.ignore_mask)

    value = tex.value + cfg.alpha * ker.value + cfg.beta * (agg.value + dis.value)

    grads = {
        "p_tex": tex.grad("p"),
        "p_ker": TensorMap(cfg.alpha * ker.grad("p").array.astype(np.float64)),
        "emb": TensorMap(cfg.beta * (agg.grad("emb").array.astype(np.float64)
                                     + dis.grad("emb").array.astype(np.float64))),
    }
    components = {"tex": tex.value, "ker": ker.value, "agg": agg.value, "dis": dis.value}

    return LossValue(value, grads, components)
