'''
Training objectives with analytic gradients, and the finite-difference checks that verify them
'''

from .base import LossValue
from .dice import dice_loss, ohem_mask
from .embedding import agg_loss, dis_loss
from .detection import det_loss
from .recognition import rec_loss
from .gradcheck import GradCheckCase, GradCheckResult, finite_diff_check, default_cases

__all__ = [
    "LossValue", "dice_loss", "ohem_mask", "agg_loss", "dis_loss", "det_loss", "rec_loss",
    "GradCheckCase", "GradCheckResult", "finite_diff_check", "default_cases"
]
