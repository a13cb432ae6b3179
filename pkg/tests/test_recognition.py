'''
Tests for the charset, Masked RoI, attention, and the recognition decoder
'''

# pylint: disable=missing-function-docstring

import numpy as np
import pytest

from textspot import RecognitionConfig, RecognitionError, TensorMap
from textspot.nn import WeightStore, init_weights, recognition_architecture
from textspot.nn.weights import attention_architecture
from textspot.recognition import AttentionLayer, Charset, Decoder, RoiPatch, masked_roi
from textspot.recognition import multi_head_attention
from textspot.recognition.decoder import STOP_EOS, STOP_MAX_STEPS, STOP_TEACHER
from textspot.tensor import bilinear_resize

from .golden import check_golden

SMALL = RecognitionConfig(embed_dim=16, heads=4, hidden_dim=16, max_steps=8)
CHANNELS = 12


def _roi(seed=0):
    rng = np.random.default_rng(seed)
    return RoiPatch(TensorMap(rng.normal(size=(CHANNELS, 8, 32))))


def _decoder(charset=None, seed=1, overrides=None):
    charset = charset or Charset.default()
    weights = init_weights(recognition_architecture(SMALL, CHANNELS, charset.size), seed=seed)
    if overrides:
        weights = weights.merged(WeightStore(overrides))
    return Decoder(weights, charset, SMALL)


def _forced_output(charset, favored):
    bias = np.zeros(charset.size)
    bias[favored] = 10.0
    return {"rec.fc.weight": TensorMap.zeros([charset.size, 2 * SMALL.hidden_dim]),
            "rec.fc.bias": TensorMap(bias)}


def test_default_charset():
    charset = Charset.default()

    assert charset.size == len(charset) == 39
    assert (charset.eos, charset.sos, charset.pad) == (36, 37, 38)
    assert charset.encode("Ab1") == [0, 1, 27, 36]
    assert charset.encode("ab", append_eos=False) == [0, 1]


def test_charset_decode_stops_at_eos():
    charset = Charset.default()
    assert charset.decode([7, 4, 11, 11, 14, charset.eos, 0]) == "hello"
    assert charset.decode([charset.sos, 0, charset.pad]) == "a"

    with pytest.raises(RecognitionError):
        charset.decode([39])


def test_charset_unknown_symbols():
    charset = Charset.default()

    with pytest.raises(RecognitionError):
        charset.encode("a-b")
    assert charset.encode("a-b", skip_unknown=True) == [0, 1, charset.eos]


def test_case_sensitive_charset():
    charset = Charset("aA", case_sensitive=True)
    assert charset.encode("Aa") == [1, 0, 2]


def test_charset_rejects_duplicates():
    with pytest.raises(RecognitionError):
        Charset("abca")
    with pytest.raises(RecognitionError):
        Charset("")


def test_charset_file(tmp_path):
    path = tmp_path / "charset.txt"
    path.write_text("x\ny\n\nz\n", encoding='utf-8')

    charset = Charset.from_file(str(path))
    assert charset.symbols == ["x", "y", "z"]
    assert charset.size == 6

    with pytest.raises(RecognitionError):
        Charset.from_file(str(tmp_path / "missing.txt"))


def test_roi_with_full_mask():
    rng = np.random.default_rng(2)
    features = TensorMap(rng.normal(size=(5, 20, 30)))
    mask = np.zeros((20, 30), dtype=bool)
    mask[4:10, 3:27] = True

    roi = masked_roi(features, mask)
    expected = bilinear_resize(TensorMap(features.array[:, 4:10, 3:27]), 8, 32)

    assert roi.features.dims == (5, 8, 32)
    assert roi.features == expected


def test_roi_zeroes_outside_mask():
    features = TensorMap.full([3, 8, 32], 1.0)
    mask = np.zeros((8, 32), dtype=bool)
    mask[:, :16] = True
    mask[0, 31] = True

    masked = masked_roi(features, mask).features.array
    assert masked[:, 4, 2].min() == 1.0
    assert masked[:, 4, 29].max() == 0.0

    plain = masked_roi(features, mask, use_mask=False).features.array
    assert plain.min() == 1.0


def test_roi_size_and_tensor_mask():
    features = TensorMap(np.random.default_rng(3).normal(size=(2, 6, 6)))
    mask = TensorMap.full([1, 6, 6], 1.0)

    roi = masked_roi(features, mask, height=4, width=5, instance_id=3)
    assert roi.features.dims == (2, 4, 5)
    assert roi.instance_id == 3
    assert roi.flattened().shape == (20, 2)


def test_roi_errors():
    features = TensorMap.zeros([2, 6, 6])

    with pytest.raises(RecognitionError):
        masked_roi(features, np.zeros((6, 6), dtype=bool))
    with pytest.raises(RecognitionError):
        masked_roi(features, np.ones((6, 5), dtype=bool))


def _attention_weights(seed=4, embed_dim=16, kv_dim=CHANNELS):
    arch = {}
    attention_architecture(arch, "att", embed_dim, kv_dim)
    return init_weights(arch, seed=seed)


def test_attention_rows_sum_to_one():
    weights = _attention_weights()
    rng = np.random.default_rng(5)

    for _ in range(20):
        (output, attention) = multi_head_attention(rng.normal(size=16),
                                                   rng.normal(size=(256, CHANNELS)),
                                                   weights, "att", heads=4)
        assert output.shape == (16,)
        assert attention.shape == (256,)
        assert abs(attention.sum() - 1.0) < 1e-9
        assert attention.min() >= 0.0


def test_attention_ignores_position_order():
    weights = _attention_weights()
    rng = np.random.default_rng(6)
    query = rng.normal(size=16)
    kv = rng.normal(size=(10, CHANNELS))
    order = rng.permutation(10)

    (output, attention) = multi_head_attention(query, kv, weights, "att", heads=2)
    (shuffled, shuffled_attention) = multi_head_attention(query, kv[order], weights, "att",
                                                          heads=2)

    assert np.allclose(output, shuffled, atol=1e-10)
    assert np.allclose(attention[order], shuffled_attention, atol=1e-12)


def test_attention_errors():
    weights = _attention_weights()

    with pytest.raises(RecognitionError):
        AttentionLayer(weights, "att", heads=3)

    layer = AttentionLayer(weights, "att", heads=4)
    with pytest.raises(RecognitionError):
        layer.project(np.zeros((4, CHANNELS + 1)))

    (keys, values) = layer.project(np.zeros((4, CHANNELS)))
    with pytest.raises(RecognitionError):
        layer.attend(np.zeros(15), keys, values)


def test_decoder_forced_eos():
    charset = Charset.default()
    decoder = _decoder(charset, overrides=_forced_output(charset, charset.eos))

    (decoded, logits) = decoder.decode(_roi())
    assert decoded.ids == [charset.eos]
    assert decoded.stop_reason == STOP_EOS
    assert decoded.text(charset) == ""
    assert logits.dims == (1, charset.size)


def test_decoder_stops_at_max_steps():
    charset = Charset.default()
    decoder = _decoder(charset, overrides=_forced_output(charset, 0))

    (decoded, logits) = decoder.decode(_roi())
    assert decoded.ids == [0] * SMALL.max_steps
    assert decoded.stop_reason == STOP_MAX_STEPS
    assert decoded.attention.shape == (SMALL.max_steps, 256)
    assert logits.dims == (SMALL.max_steps, charset.size)

    (short, _) = decoder.decode(_roi(), max_steps=3)
    assert len(short) == 3
    with pytest.raises(RecognitionError):
        decoder.decode(_roi(), max_steps=0)


def test_decoder_never_emits_sos_or_pad():
    charset = Charset.default()
    bias = _forced_output(charset, [charset.sos, charset.pad])
    bias["rec.fc.bias"] = TensorMap(bias["rec.fc.bias"].array + np.eye(charset.size)[3])
    decoder = _decoder(charset, overrides=bias)

    (decoded, _) = decoder.decode(_roi(), max_steps=4)
    assert decoded.ids == [3, 3, 3, 3]


def test_decoder_is_deterministic():
    decoder = _decoder()
    (first, first_logits) = decoder.decode(_roi(7))
    (second, second_logits) = decoder.decode(_roi(7))

    assert first.ids == second.ids
    assert first_logits.to_bytes() == second_logits.to_bytes()
    assert np.all(np.abs(first.attention.sum(axis=1) - 1.0) < 1e-9)


def test_decoded_attention_rows_sum_to_one():
    rows = 0
    for seed in range(100):
        decoder = _decoder(seed=seed % 10)
        (decoded, _) = decoder.decode(_roi(seed))

        assert decoded.attention.shape == (len(decoded.ids), 8 * 32)
        assert decoded.attention.min() >= 0.0
        assert np.all(np.abs(decoded.attention.sum(axis=1) - 1.0) < 1e-5)
        rows += len(decoded.ids)

    assert rows >= 100


def test_teacher_forcing_reproduces_greedy():
    decoder = _decoder(seed=8)
    (greedy, greedy_logits) = decoder.decode(_roi(9))

    (forced, forced_logits) = decoder.decode(_roi(9), teacher=greedy.ids)
    assert forced.ids == greedy.ids
    assert forced_logits == greedy_logits
    assert forced.stop_reason == STOP_TEACHER


def test_teacher_forcing_is_causal():
    charset = Charset.default()
    decoder = _decoder(charset, seed=10)
    roi = _roi(11)

    (_, first) = decoder.decode(roi, teacher=[1, 2, 3, 4, charset.eos])
    (_, second) = decoder.decode(roi, teacher=[1, 2, 9, 4, charset.eos])

    assert first.dims == second.dims == (5, charset.size)
    assert np.array_equal(first.array[:3], second.array[:3])
    assert not np.array_equal(first.array[3], second.array[3])


def test_teacher_errors():
    charset = Charset.default()
    decoder = _decoder(charset)

    with pytest.raises(RecognitionError):
        decoder.decode(_roi(), teacher=[])
    with pytest.raises(RecognitionError):
        decoder.decode(_roi(), teacher=[charset.size])


def test_decoder_checks_charset_size():
    weights = init_weights(recognition_architecture(SMALL, CHANNELS, 39), seed=1)
    with pytest.raises(RecognitionError):
        Decoder(weights, Charset("abc"), SMALL)


def test_start_vector():
    decoder = _decoder()
    f_s = decoder.start(_roi())

    assert f_s.shape == (SMALL.embed_dim,)
    assert np.array_equal(f_s, decoder.start(_roi()))


def test_start_and_logits_match_golden():
    decoder = _decoder()
    (_, logits) = decoder.decode(_roi())

    check_golden("recognition/start.ptm", TensorMap(decoder.start(_roi())))
    check_golden("recognition/decode_logits.ptm", logits)


def test_output_reads_hidden_state_then_glimpse():
    charset = Charset.default()
    arch = recognition_architecture(SMALL, CHANNELS, charset.size)
    hidden = SMALL.hidden_dim

    # a zero top LSTM keeps h_t at exactly zero
    silent = {name: TensorMap.zeros(dims) for (name, dims) in arch.items()
              if name.startswith("rec.lstm2.")}
    decoder = _decoder(charset, seed=3, overrides=silent)
    weights = init_weights(arch, seed=3)

    roi = _roi(4)
    (_, logits) = decoder.decode(roi, max_steps=3)

    (glimpse, _) = multi_head_attention(np.zeros(hidden), roi.flattened(), weights, "rec.att2",
                                        SMALL.heads)
    fc_weight = weights.get("rec.fc.weight").array.astype(np.float64)
    expected = fc_weight[:, hidden:] @ glimpse + weights.get("rec.fc.bias").array

    assert not np.allclose(fc_weight[:, :hidden] @ glimpse, fc_weight[:, hidden:] @ glimpse)
    for row in logits.array:
        assert np.allclose(row, expected, rtol=1e-5, atol=1e-6)


def test_init_opens_forget_gate():
    weights = init_weights(recognition_architecture(SMALL, 8, 12), seed=3)
    hidden = SMALL.hidden_dim

    for layer in ("rec.lstm1", "rec.lstm2"):
        bias = weights.get(f"{layer}.bias").array
        assert np.all(bias[hidden:2 * hidden] == 1.0)
        assert np.all(bias[:hidden] == 0.0)
        assert np.all(bias[2 * hidden:] == 0.0)
        assert np.abs(weights.get(f"{layer}.w_ih").array).max() <= 0.1
