''' The attention decoder: SOS starter, two stacked LSTMs, and greedy decoding '''

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from scipy.special import expit

from ..config import RecognitionConfig
from ..errors import RecognitionError
from ..nn.weights import WeightStore
from ..tensor import TensorMap
from .attention import AttentionLayer
from .charset import Charset
from .roi import RoiPatch

STOP_EOS = "eos"
STOP_MAX_STEPS = "max_steps"
STOP_TEACHER = "teacher"


@dataclass(frozen=True, eq=False)
class DecodedText:
    ''' Output of one decode '''
    ids: list[int]
    attention: np.ndarray  # [steps, L], one row per emitted id
    stop_reason: str

    def __len__(self):
        return len(self.ids)

    def text(self, charset: Charset) -> str:
        ''' The transcription, without EOS '''
        return charset.decode(self.ids)


class LSTMCell:
    ''' Standard LSTM with gate order input, forget, cell, output '''

    def __init__(self, weights: WeightStore, prefix: str):
        self._w_ih = weights.get(f"{prefix}.w_ih").array.astype(np.float64)
        self._w_hh = weights.get(f"{prefix}.w_hh").array.astype(np.float64)
        self._bias = weights.get(f"{prefix}.bias").array.astype(np.float64)
        self._hidden = self._w_hh.shape[1]

    @property
    def hidden_dim(self) -> int:
        ''' Size of the hidden and cell states '''
        return self._hidden

    def zero_state(self) -> tuple[np.ndarray, np.ndarray]:
        ''' (h, c) all zeros '''
        return np.zeros(self._hidden), np.zeros(self._hidden)

    def step(self, x: np.ndarray, state: tuple[np.ndarray, np.ndarray]):
        ''' One time step; returns the new (h, c) '''
        (hidden, cell) = state
        gates = self._w_ih @ x + self._w_hh @ hidden + self._bias
        (in_gate, forget_gate, candidate, out_gate) = np.split(gates, 4)

        cell = expit(forget_gate) * cell + expit(in_gate) * np.tanh(candidate)
        hidden = expit(out_gate) * np.tanh(cell)
        return hidden, cell


class Decoder:
    ''' Recognition head bound to a weight store and a charset '''

    def __init__(self, weights: WeightStore, charset: Charset, cfg: RecognitionConfig):
        self._charset = charset
        self._cfg = cfg

        self._sos_embed = weights.get("rec.sos_embed").array.astype(np.float64)
        self._embed = weights.get("rec.embed").array.astype(np.float64)
        for (name, table) in (("rec.sos_embed", self._sos_embed), ("rec.embed", self._embed)):
            if table.shape[0] != charset.size:
                raise RecognitionError(f"{name} has {table.shape[0]} rows, but the charset "
                                       f"has {charset.size} ids")

        self._starter = AttentionLayer(weights, "rec.att1", cfg.heads)
        self._readout = AttentionLayer(weights, "rec.att2", cfg.heads)
        self._lstms = (LSTMCell(weights, "rec.lstm1"), LSTMCell(weights, "rec.lstm2"))
        self._fc_weight = weights.get("rec.fc.weight").array.astype(np.float64)
        self._fc_bias = weights.get("rec.fc.bias").array.astype(np.float64)

        # SOS and PAD are never emitted
        self._emit_mask = np.zeros(charset.size, dtype=bool)
        self._emit_mask[[charset.sos, charset.pad]] = True

    @property
    def charset(self) -> Charset:
        ''' The charset the decoder emits ids of '''
        return self._charset

    def start(self, roi: RoiPatch) -> np.ndarray:
        ''' f_s: the embedded SOS symbol attending over the RoI '''
        (keys, values) = self._starter.project(roi.flattened())
        (f_s, _) = self._starter.attend(self._sos_embed[self._charset.sos], keys, values)
        return f_s

    def _step(self, x: np.ndarray, states: list) -> np.ndarray:
        for (layer, lstm) in enumerate(self._lstms):
            states[layer] = lstm.step(x, states[layer])
            x = states[layer][0]
        return x

    def decode(self, roi: RoiPatch, max_steps: Optional[int] = None,
               teacher: Optional[Sequence[int]] = None) -> tuple[DecodedText, TensorMap]:
        '''
            Greedy decoding, or teacher forcing when a ground-truth id sequence
            (ending with EOS) is given. In teacher mode, step t reads the
            teacher symbol t-1 and exactly len(teacher) steps run.

            Returns the decoded ids and the [T, V] logits.
        '''
        max_steps = self._cfg.max_steps if max_steps is None else max_steps
        if max_steps < 1:
            raise RecognitionError("max_steps must be at least 1")
        if teacher is not None:
            teacher = list(teacher)
            if not teacher:
                raise RecognitionError("A teacher sequence needs at least one symbol")
            if any(not 0 <= symbol < self._charset.size for symbol in teacher):
                raise RecognitionError(f"Teacher ids out of range: {teacher}")

        positions = roi.flattened()
        (keys, values) = self._readout.project(positions)

        # h_0 comes from f_s and zero states, and produces no output
        states = [lstm.zero_state() for lstm in self._lstms]
        self._step(self.start(roi), states)

        steps = len(teacher) if teacher is not None else max_steps
        symbol = self._charset.sos
        ids, attention, logits = [], [], []
        stop_reason = STOP_TEACHER if teacher is not None else STOP_MAX_STEPS

        for step in range(steps):
            if teacher is not None and step > 0:
                symbol = teacher[step - 1]

            hidden = self._step(self._embed[symbol], states)
            (glimpse, weights) = self._readout.attend(hidden, keys, values)
            row = self._fc_weight @ np.concatenate([hidden, glimpse]) + self._fc_bias

            symbol = int(np.argmax(np.where(self._emit_mask, -np.inf, row)))
            ids.append(symbol)
            attention.append(weights)
            logits.append(row)

            if teacher is None and symbol == self._charset.eos:
                stop_reason = STOP_EOS
                break

        decoded = DecodedText(ids, np.stack(attention), stop_reason)
        return decoded, TensorMap(np.stack(logits))


def start(roi: RoiPatch, weights: WeightStore, charset: Charset,
          cfg: RecognitionConfig = RecognitionConfig()) -> np.ndarray:
    ''' Function form of Decoder.start '''
    return Decoder(weights, charset, cfg).start(roi)


def decode(roi: RoiPatch, weights: WeightStore, charset: Charset,
           cfg: RecognitionConfig = RecognitionConfig(), max_steps: Optional[int] = None,
           teacher: Optional[Sequence[int]] = None) -> tuple[DecodedText, TensorMap]:
    ''' Function form of Decoder.decode '''
    return Decoder(weights, charset, cfg).decode(roi, max_steps=max_steps, teacher=teacher)
