''' Named parameter tensors: the architecture manifest, seeded initialization, and storage '''

import json
import os

from typing import Iterator

import numpy as np

from ..config import ModelConfig, RecognitionConfig
from ..errors import WeightError, TensorError
from ..tensor import TensorMap, read_ptm, write_ptm
from ..util import atomic_write
from .layers import BNParams

MANIFEST_FILE = "manifest.json"
INIT_RANGE = 0.1

Architecture = dict[str, tuple[int, ...]]


def _bn(arch: Architecture, prefix: str, channels: int):
    for name in ("gamma", "beta", "mean", "var"):
        arch[f"{prefix}.bn.{name}"] = (channels,)


def _sepconv(arch: Architecture, prefix: str, in_channels: int, out_channels: int):
    arch[f"{prefix}.dw"] = (in_channels, 1, 3, 3)
    arch[f"{prefix}.pw"] = (out_channels, in_channels, 1, 1)
    _bn(arch, prefix, out_channels)


def _conv_bn(arch: Architecture, prefix: str, in_channels: int, out_channels: int,
             kernel: int):
    arch[f"{prefix}.conv"] = (out_channels, in_channels, kernel, kernel)
    _bn(arch, prefix, out_channels)


def fpem_architecture(arch: Architecture, prefix: str, channels: int):
    ''' Layers of one FPEM: three up-scale, three stride-2, and three join convs '''
    for level in (2, 1, 0):
        _sepconv(arch, f"{prefix}.up{level}", channels, channels)
    for level in (1, 2, 3):
        _sepconv(arch, f"{prefix}.down{level}", channels, channels)
        _sepconv(arch, f"{prefix}.join{level}", channels, channels)


def detection_architecture(cfg: ModelConfig) -> Architecture:
    ''' Names and dims of every detection parameter, in initialization order '''
    arch: Architecture = {}
    chans = cfg.backbone_channels

    _conv_bn(arch, "backbone.stem", 3, chans[0], 3)
    stage_inputs = (chans[0], chans[0], chans[1], chans[2])
    for stage in range(4):
        _sepconv(arch, f"backbone.stage{stage}", stage_inputs[stage], chans[stage])
    for level in range(4):
        _conv_bn(arch, f"backbone.reduce{level}", chans[level], cfg.enhanced_channels, 1)

    for index in range(cfg.n_stk):
        fpem_architecture(arch, f"fpem{index}", cfg.enhanced_channels)

    _conv_bn(arch, "head", cfg.fused_channels, cfg.enhanced_channels, 3)
    arch["head.out.weight"] = (cfg.det_out_channels, cfg.enhanced_channels, 1, 1)
    arch["head.out.bias"] = (cfg.det_out_channels,)
    return arch


def _linear(arch: Architecture, prefix: str, in_dim: int, out_dim: int):
    arch[f"{prefix}.weight"] = (out_dim, in_dim)
    arch[f"{prefix}.bias"] = (out_dim,)


def attention_architecture(arch: Architecture, prefix: str, embed_dim: int, kv_dim: int):
    ''' Query/key/value/output projections of one multi-head attention layer '''
    _linear(arch, f"{prefix}.q", embed_dim, embed_dim)
    _linear(arch, f"{prefix}.k", kv_dim, embed_dim)
    _linear(arch, f"{prefix}.v", kv_dim, embed_dim)
    _linear(arch, f"{prefix}.o", embed_dim, embed_dim)


def recognition_architecture(cfg: RecognitionConfig, roi_channels: int,
                             vocab_size: int) -> Architecture:
    ''' Names and dims of every recognition parameter '''
    arch: Architecture = {}
    hidden = cfg.hidden_dim

    arch["rec.sos_embed"] = (vocab_size, cfg.embed_dim)
    attention_architecture(arch, "rec.att1", cfg.embed_dim, roi_channels)
    arch["rec.embed"] = (vocab_size, cfg.embed_dim)

    for (layer, in_dim) in (("lstm1", cfg.embed_dim), ("lstm2", hidden)):
        arch[f"rec.{layer}.w_ih"] = (4 * hidden, in_dim)
        arch[f"rec.{layer}.w_hh"] = (4 * hidden, hidden)
        arch[f"rec.{layer}.bias"] = (4 * hidden,)

    attention_architecture(arch, "rec.att2", hidden, roi_channels)
    _linear(arch, "rec.fc", 2 * hidden, vocab_size)
    return arch


class WeightStore:
    ''' A collection of named parameter tensors '''

    def __init__(self, tensors: dict[str, TensorMap]):
        self._tensors = dict(tensors)

    @property
    def names(self) -> list[str]:
        ''' Names of all stored tensors '''
        return list(self._tensors.keys())

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __iter__(self) -> Iterator[tuple[str, TensorMap]]:
        return iter(self._tensors.items())

    def __len__(self):
        return len(self._tensors)

    def get(self, name: str) -> TensorMap:
        ''' Look up a tensor; raises WeightError if it does not exist '''
        try:
            return self._tensors[name]
        except KeyError as err:
            raise WeightError(f"No such parameter: {name}") from err

    def bn(self, prefix: str) -> BNParams:
        ''' The batch norm parameters of a layer '''
        return BNParams(*(self.get(f"{prefix}.bn.{name}")
                          for name in ("gamma", "beta", "mean", "var")))

    def merged(self, other: 'WeightStore') -> 'WeightStore':
        ''' Union of two stores; entries of other win '''
        return WeightStore(dict(self._tensors) | dict(iter(other)))

    def validate(self, arch: Architecture):
        ''' Check that every layer of an architecture exists with the exact dims '''
        for (name, dims) in arch.items():
            tensor = self.get(name)
            if tensor.dims != dims:
                raise WeightError(f"Parameter {name} has dims {list(tensor.dims)}, "
                                  f"expected {list(dims)}")
            if name.endswith(".bn.var") and np.any(tensor.array < 0):
                raise WeightError(f"Parameter {name} has negative variances")

    def save(self, folder: str):
        ''' Write one PTM file per tensor plus a manifest of names and dims '''
        os.makedirs(folder, exist_ok=True)
        manifest = {name: list(tensor.dims) for (name, tensor) in self._tensors.items()}

        for (name, tensor) in self._tensors.items():
            write_ptm(os.path.join(folder, f"{name}.ptm"), tensor)
        atomic_write(os.path.join(folder, MANIFEST_FILE), json.dumps(manifest, indent=2))

    @classmethod
    def load(cls, folder: str) -> 'WeightStore':
        ''' Read a store written by save() '''
        manifest_path = os.path.join(folder, MANIFEST_FILE)
        try:
            with open(manifest_path, encoding='utf-8') as manifest_file:
                manifest = json.load(manifest_file)
        except OSError as err:
            raise WeightError(f"Cannot open weight manifest at {manifest_path}: {err}") from err
        except json.JSONDecodeError as err:
            raise WeightError(f"Weight manifest at {manifest_path} is not valid JSON: "
                              f"{err}") from err

        tensors = {}
        for (name, dims) in manifest.items():
            try:
                tensor = read_ptm(os.path.join(folder, f"{name}.ptm"))
            except (OSError, TensorError) as err:
                raise WeightError(f"Cannot load parameter {name}: {err}") from err
            if list(tensor.dims) != list(dims):
                raise WeightError(f"Parameter {name} has dims {list(tensor.dims)}, "
                                  f"but the manifest says {dims}")
            tensors[name] = tensor

        return cls(tensors)


def _initial_value(name: str, dims: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
    if name.endswith(".bn.gamma") or name.endswith(".bn.var"):
        return np.ones(dims, dtype=np.float32)
    if name.endswith(".bn.beta") or name.endswith(".bn.mean"):
        return np.zeros(dims, dtype=np.float32)

    values = rng.uniform(-INIT_RANGE, INIT_RANGE, size=dims).astype(np.float32)
    if ".lstm" in name and name.endswith(".bias"):
        # gate order is input, forget, cell, output
        hidden = dims[0] // 4
        values[:] = 0.0
        values[hidden:2 * hidden] = 1.0
    return values


def init_weights(arch: Architecture, seed: int) -> WeightStore:
    ''' Deterministic seeded initialization of every parameter of an architecture '''
    rng = np.random.default_rng(seed)
    return WeightStore({name: TensorMap(_initial_value(name, dims, rng))
                        for (name, dims) in arch.items()})


def zero_weights(arch: Architecture) -> WeightStore:
    '''
        Every parameter zero except the BN variances, which are one,
        so every BN output (and every separable branch) is zero
    '''
    tensors = {}
    for (name, dims) in arch.items():
        value = 1.0 if name.endswith(".bn.var") else 0.0
        tensors[name] = TensorMap.full(dims, value)
    return WeightStore(tensors)
