''' Multi-head scaled dot-product attention with learned projections '''

import numpy as np

from scipy.special import softmax

from ..errors import RecognitionError
from ..nn.weights import WeightStore


class AttentionLayer:
    '''
        One attention layer, named by its weight prefix (e.g. "rec.att2").

        Keys and values can be projected once and reused for every query.
    '''

    def __init__(self, weights: WeightStore, prefix: str, heads: int):
        self._query = self._linear(weights, f"{prefix}.q")
        self._key = self._linear(weights, f"{prefix}.k")
        self._value = self._linear(weights, f"{prefix}.v")
        self._output = self._linear(weights, f"{prefix}.o")

        embed_dim = self._query[0].shape[0]
        if heads < 1 or embed_dim % heads != 0:
            raise RecognitionError(f"Embedding size {embed_dim} is not divisible by "
                                   f"{heads} heads")
        self._heads = heads
        self._embed_dim = embed_dim

    @staticmethod
    def _linear(weights: WeightStore, prefix: str) -> tuple[np.ndarray, np.ndarray]:
        return (weights.get(f"{prefix}.weight").array.astype(np.float64),
                weights.get(f"{prefix}.bias").array.astype(np.float64))

    @property
    def heads(self) -> int:
        ''' Number of attention heads '''
        return self._heads

    @property
    def embed_dim(self) -> int:
        ''' E, the size of queries and outputs '''
        return self._embed_dim

    def project(self, kv: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ''' Keys and values [L, E] of [L, C] positions '''
        kv = np.asarray(kv, dtype=np.float64)
        (key_weight, key_bias) = self._key
        if kv.ndim != 2 or kv.shape[1] != key_weight.shape[1]:
            raise RecognitionError(f"Positions need dims [L,{key_weight.shape[1]}], "
                                   f"got {list(kv.shape)}")

        (value_weight, value_bias) = self._value
        return kv @ key_weight.T + key_bias, kv @ value_weight.T + value_bias

    def attend(self, query: np.ndarray, keys: np.ndarray,
               values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ''' Fused output [E] and the head-averaged attention weights [L] '''
        query = np.asarray(query, dtype=np.float64)
        (query_weight, query_bias) = self._query
        if query.shape != (query_weight.shape[1],):
            raise RecognitionError(f"Query needs {query_weight.shape[1]} entries, "
                                   f"got {list(query.shape)}")

        head_dim = self._embed_dim // self._heads
        projected = (query_weight @ query + query_bias).reshape(self._heads, head_dim)
        keys = keys.reshape(len(keys), self._heads, head_dim)
        values = values.reshape(len(values), self._heads, head_dim)

        scores = np.einsum('hd,lhd->hl', projected, keys) / np.sqrt(head_dim)
        attention = softmax(scores, axis=1)
        fused = np.einsum('hl,lhd->hd', attention, values).reshape(-1)

        (output_weight, output_bias) = self._output
        return output_weight @ fused + output_bias, attention.mean(axis=0)


def multi_head_attention(query: np.ndarray, kv: np.ndarray, weights: WeightStore,
                         prefix: str, heads: int) -> tuple[np.ndarray, np.ndarray]:
    ''' Attend from one query over L positions; returns (output [E], attention [L]) '''
    layer = AttentionLayer(weights, prefix, heads)
    (keys, values) = layer.project(kv)
    return layer.attend(query, keys, values)
