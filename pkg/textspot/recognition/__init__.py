'''
Recognition of detected text instances: Masked RoI features and the attention decoder
'''

from .charset import Charset
from .roi import RoiPatch, masked_roi
from .attention import AttentionLayer, multi_head_attention
from .decoder import DecodedText, Decoder, LSTMCell, start, decode

__all__ = [
    "Charset", "RoiPatch", "masked_roi", "AttentionLayer", "multi_head_attention",
    "DecodedText", "Decoder", "LSTMCell", "start", "decode"
]
