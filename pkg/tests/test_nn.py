'''
Tests for the forward-only network blocks
'''

# pylint: disable=missing-function-docstring

import numpy as np
import pytest

from textspot import ModelConfig, TensorError, TensorMap, WeightError
from textspot.nn import BNParams, WeightStore, batch_norm, conv2d, detect, detection_architecture
from textspot.nn import detection_head, enhance, enhance_and_fuse, fpem, init_weights
from textspot.nn import separable_conv, toy_backbone, zero_weights
from textspot.nn.layers import BN_EPSILON
from textspot.nn.model import PROB_HIGH, PROB_LOW
from textspot.nn.weights import fpem_architecture

from .golden import check_golden

SMALL = ModelConfig(backbone_channels=(4, 8, 8, 8), enhanced_channels=8, n_stk=2, emb_dim=4)


def _random_pyramid(rng, channels=8, size=16):
    return [TensorMap(rng.normal(size=(channels, size >> level, size >> level)))
            for level in range(4)]


def test_conv_identity_kernel():
    rng = np.random.default_rng(0)
    x = TensorMap(rng.normal(size=(3, 5, 6)))
    weight = TensorMap(np.eye(3).reshape(3, 3, 1, 1))
    assert conv2d(x, weight) == x


def test_conv_ones():
    x = TensorMap.full([1, 5, 5], 1.0)
    out = conv2d(x, TensorMap.full([1, 1, 3, 3], 1.0), pad=1).array[0]

    assert out[2, 2] == 9.0
    assert out[0, 2] == 6.0
    assert out[0, 0] == 4.0
    assert out[4, 4] == 4.0


def test_conv_bias_only():
    x = TensorMap(np.random.default_rng(1).normal(size=(2, 4, 4)))
    out = conv2d(x, TensorMap.zeros([3, 2, 3, 3]), TensorMap([0.5, -1.0, 2.0]), pad=1)

    assert out.dims == (3, 4, 4)
    assert np.all(out.array[1] == -1.0)


def test_conv_output_size_floors():
    x = TensorMap.zeros([1, 7, 7])
    assert conv2d(x, TensorMap.zeros([1, 1, 3, 3]), stride=2, pad=1).dims == (1, 4, 4)

    with pytest.raises(TensorError):
        conv2d(TensorMap.zeros([1, 2, 2]), TensorMap.zeros([1, 1, 3, 3]))


def test_conv_matches_loops():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(4, 6, 5))
    weight = rng.normal(size=(2, 2, 3, 3))
    out = conv2d(TensorMap(x), TensorMap(weight), stride=2, pad=1, groups=2).array

    padded = np.pad(x, ((0, 0), (1, 1), (1, 1)))
    for o in range(2):
        group = o  # one output channel per group
        for i in range(out.shape[1]):
            for j in range(out.shape[2]):
                window = padded[2 * group:2 * group + 2, 2 * i:2 * i + 3, 2 * j:2 * j + 3]
                assert abs(out[o, i, j] - np.sum(window * weight[o])) < 1e-4


def test_batch_norm():
    x = TensorMap(np.random.default_rng(3).normal(size=(2, 3, 3)))
    identity = BNParams.identity(2)
    assert np.allclose(batch_norm(x, identity.gamma, identity.beta, identity.mean,
                                  identity.var).array, x.array, atol=1e-6)

    zeros = TensorMap.zeros([2])
    assert not batch_norm(x, zeros, zeros, zeros, TensorMap.full([2], 1.0)).array.any()

    out = batch_norm(TensorMap([[5.0]]), TensorMap([2.0]), TensorMap([1.0]), TensorMap([3.0]),
                     TensorMap([4.0 - 1e-5]))
    assert abs(out.array[0, 0] - 3.0) < 1e-5


def test_separable_conv_identity():
    x = TensorMap(np.random.default_rng(4).normal(size=(3, 6, 6)))
    dw = np.zeros((3, 1, 3, 3))
    dw[:, 0, 1, 1] = 1.0
    pw = np.eye(3).reshape(3, 3, 1, 1)

    out = separable_conv(x, TensorMap(dw), TensorMap(pw), BNParams.identity(3))
    assert np.allclose(out.array, np.maximum(x.array, 0.0), atol=1e-6)


def test_separable_conv_shapes():
    x = TensorMap(np.random.default_rng(5).normal(size=(3, 7, 8)))
    dw = TensorMap.full([3, 1, 3, 3], 0.1)
    pw = TensorMap.full([5, 3, 1, 1], 0.1)

    assert separable_conv(x, dw, pw, BNParams.identity(5)).dims == (5, 7, 8)
    assert separable_conv(x, dw, pw, BNParams.identity(5), stride=2).dims == (5, 4, 4)

    zero = TensorMap.zeros([3, 1, 3, 3])
    bn = BNParams(TensorMap.full([5], 1.0), TensorMap.zeros([5]), TensorMap.zeros([5]),
                  TensorMap.full([5], 1.0))
    assert not separable_conv(x, zero, pw, bn).array.any()

    with pytest.raises(TensorError):
        separable_conv(x, TensorMap.zeros([2, 1, 3, 3]), pw, BNParams.identity(5))


def test_fpem_residual_identity():
    weights = zero_weights(detection_architecture(SMALL))
    rng = np.random.default_rng(6)

    for _ in range(100):
        pyramid = _random_pyramid(rng)
        result = fpem(pyramid, weights, "fpem0")
        for (before, after) in zip(pyramid, result):
            assert after == before

    pyramid = _random_pyramid(rng)
    assert all(a == b for (a, b) in zip(enhance(pyramid, weights, 2), pyramid))


def test_fpem_stacks_keep_shapes():
    rng = np.random.default_rng(7)
    pyramid = _random_pyramid(rng)

    for n_stk in (1, 2, 4):
        cfg = ModelConfig(backbone_channels=(4, 8, 8, 8), enhanced_channels=8, n_stk=n_stk)
        weights = init_weights(detection_architecture(cfg), seed=1)
        result = enhance(pyramid, weights, n_stk)
        assert [r.dims for r in result] == [p.dims for p in pyramid]


def test_fpem_rejects_bad_pyramid():
    rng = np.random.default_rng(8)
    weights = zero_weights(detection_architecture(SMALL))
    pyramid = _random_pyramid(rng)

    with pytest.raises(TensorError):
        fpem(pyramid[:3], weights, "fpem0")
    with pytest.raises(TensorError):
        fpem(pyramid[:3] + [TensorMap.zeros([8, 3, 3])], weights, "fpem0")


def test_fuse_without_fpem():
    pyramid = [TensorMap.full([8, 16 >> level, 16 >> level], float(level)) for level in range(4)]
    weights = zero_weights(detection_architecture(SMALL))

    for n_stk in (0, 2):
        fused = enhance_and_fuse(pyramid, weights, n_stk)
        assert fused.dims == (32, 16, 16)
        for level in range(4):
            assert np.all(fused.array[8 * level:8 * (level + 1)] == float(level))


def _pass_through_fpem(channels=8) -> WeightStore:
    ''' FPEM weights whose separable convs copy non-negative inputs '''
    arch = {}
    fpem_architecture(arch, "fpem0", channels)

    tensors = {}
    for (name, dims) in arch.items():
        if name.endswith(".dw"):
            value = np.zeros(dims)
            value[:, 0, 1, 1] = 1.0
        elif name.endswith(".pw"):
            value = np.eye(channels).reshape(dims)
        elif name.endswith(".bn.gamma"):
            value = np.ones(dims)
        elif name.endswith(".bn.var"):
            value = np.full(dims, 1.0 - BN_EPSILON)
        else:
            value = np.zeros(dims)
        tensors[name] = TensorMap(value)
    return WeightStore(tensors)


def test_fpem_joins():
    levels = (1.0, 2.0, 4.0, 8.0)
    pyramid = [TensorMap.full([8, 16 >> level, 16 >> level], value)
               for (level, value) in enumerate(levels)]

    # up-scale sums are 15, 14, 12, 8; down-scale adds the finer level on top
    result = fpem(pyramid, _pass_through_fpem(), "fpem0")
    for (fmap, expected) in zip(result, (16.0, 31.0, 45.0, 57.0)):
        assert np.allclose(fmap.array, expected, rtol=1e-5)


def test_detect_matches_golden():
    weights = init_weights(detection_architecture(SMALL), seed=42)
    image = TensorMap(np.random.default_rng(11).uniform(size=(3, 64, 64)))
    out = detect(image, weights, SMALL)

    check_golden("detection/p_tex.ptm", out.p_tex)
    check_golden("detection/p_ker.ptm", out.p_ker)
    check_golden("detection/emb.ptm", out.emb)


def test_backbone_shapes():
    weights = init_weights(detection_architecture(SMALL), seed=3)
    image = TensorMap(np.random.default_rng(9).uniform(size=(3, 64, 64)))
    pyramid = toy_backbone(image, weights)

    assert [p.dims for p in pyramid] == [(8, 16, 16), (8, 8, 8), (8, 4, 4), (8, 2, 2)]


def test_backbone_zero_weights():
    weights = zero_weights(detection_architecture(SMALL))
    image = TensorMap(np.random.default_rng(10).uniform(size=(3, 32, 32)))
    assert not any(p.array.any() for p in toy_backbone(image, weights))


def test_backbone_needs_multiple_of_32():
    weights = zero_weights(detection_architecture(SMALL))
    with pytest.raises(TensorError, match="64x96"):
        toy_backbone(TensorMap.zeros([3, 40, 96]), weights)


def test_head_with_zero_weights():
    weights = zero_weights(detection_architecture(SMALL))
    out = detection_head(TensorMap.full([32, 8, 8], 0.3), weights, SMALL)

    assert np.all(out.p_tex.array == 0.5)
    assert np.all(out.p_ker.array == 0.5)
    assert out.emb.dims == (4, 8, 8) and not out.emb.array.any()


def test_detect_shapes_and_determinism():
    weights = init_weights(detection_architecture(SMALL), seed=42)
    image = TensorMap(np.random.default_rng(11).uniform(size=(3, 256, 256)))

    first = detect(image, weights, SMALL)
    second = detect(image, weights, SMALL)

    assert first.p_tex.dims == (1, 64, 64)
    assert first.p_ker.dims == (1, 64, 64)
    assert first.emb.dims == (4, 64, 64)
    assert first.p_tex.to_bytes() == second.p_tex.to_bytes()
    assert first.emb.to_bytes() == second.emb.to_bytes()

    for prob in (first.p_tex, first.p_ker):
        assert prob.array.min() >= PROB_LOW and prob.array.max() <= PROB_HIGH


def test_fused_channels_of_default_config():
    assert ModelConfig().fused_channels == 512
    assert ModelConfig().det_out_channels == 6


def test_weight_store_round_trip(tmp_path):
    arch = detection_architecture(SMALL)
    weights = init_weights(arch, seed=5)
    weights.save(str(tmp_path / "weights"))

    loaded = WeightStore.load(str(tmp_path / "weights"))
    loaded.validate(arch)
    assert sorted(loaded.names) == sorted(weights.names)
    assert loaded.get("head.out.bias") == weights.get("head.out.bias")


def test_weight_store_validation():
    arch = detection_architecture(SMALL)
    weights = init_weights(arch, seed=5)

    with pytest.raises(WeightError):
        WeightStore({}).get("head.conv")

    broken = weights.merged(WeightStore({"head.conv": TensorMap.zeros([1, 1, 1, 1])}))
    with pytest.raises(WeightError):
        broken.validate(arch)

    negative = weights.merged(WeightStore({"head.bn.var": TensorMap.full([8], -1.0)}))
    with pytest.raises(WeightError):
        negative.validate(arch)


def test_init_is_seeded():
    arch = detection_architecture(SMALL)
    a = init_weights(arch, seed=1)
    b = init_weights(arch, seed=1)
    c = init_weights(arch, seed=2)

    assert all(tensor == b.get(name) for (name, tensor) in a)
    assert a.get("head.conv") != c.get("head.conv")
    assert np.abs(a.get("head.conv").array).max() <= 0.1


def test_init_bn_is_identity_like():
    weights = init_weights(detection_architecture(SMALL), seed=5)
    bn_names = [name for (name, _) in weights if ".bn." in name]
    assert bn_names

    for name in bn_names:
        expected = 1.0 if name.endswith((".gamma", ".var")) else 0.0
        assert np.all(weights.get(name).array == expected)
