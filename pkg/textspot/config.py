'''
    Typed configuration: model, post-processing, loss, and recognition settings
    plus the run.toml file
'''

from dataclasses import dataclass, field, fields, replace
from os.path import exists
from typing import Any, Optional

import tomllib

from .errors import ConfigurationError


@dataclass(frozen=True)
class ModelConfig:
    ''' Architecture hyperparameters of the detection network '''
    backbone_channels: tuple[int, int, int, int] = (32, 64, 128, 256)
    enhanced_channels: int = 128
    n_stk: int = 2
    emb_dim: int = 4

    def __post_init__(self):
        if len(self.backbone_channels) != 4 or min(self.backbone_channels) < 1:
            raise ConfigurationError("backbone_channels needs four positive entries")
        if self.enhanced_channels < 1:
            raise ConfigurationError("enhanced_channels must be positive")
        if self.n_stk < 0:
            raise ConfigurationError("n_stk must not be negative")
        if self.emb_dim < 1:
            raise ConfigurationError("emb_dim must be positive")

    @property
    def fused_channels(self) -> int:
        ''' Channels of F_f: the four enhanced levels concatenated '''
        return 4 * self.enhanced_channels

    @property
    def det_out_channels(self) -> int:
        ''' Text region + kernel + instance vector '''
        return 2 + self.emb_dim


@dataclass(frozen=True)
class PAConfig:
    ''' Thresholds of pixel aggregation '''
    tex_threshold: float = 0.5
    ker_threshold: float = 0.5
    dist_threshold: float = 3.0
    min_kernel_area: int = 5
    min_instance_area: int = 10
    min_confidence: float = 0.5
    scale: float = 4.0

    def __post_init__(self):
        for name in ("tex_threshold", "ker_threshold"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ConfigurationError(f"{name} must be within (0, 1)")
        if self.dist_threshold <= 0:
            raise ConfigurationError("dist_threshold must be positive")
        if self.min_kernel_area < 0 or self.min_instance_area < 0:
            raise ConfigurationError("Area filters must not be negative")
        if self.scale <= 0:
            raise ConfigurationError("scale must be positive")


@dataclass(frozen=True)
class LossConfig:
    ''' Loss weights and margins '''
    alpha: float = 0.5
    beta: float = 0.25
    delta_agg: float = 0.5
    delta_dis: float = 3.0
    ohem_ratio: float = 3.0

    def __post_init__(self):
        # A zero weight switches its term off
        for name in ("alpha", "beta"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must not be negative")
        for name in ("delta_agg", "delta_dis", "ohem_ratio"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class RecognitionConfig:
    ''' Sizes of the recognition head '''
    embed_dim: int = 128
    heads: int = 8
    hidden_dim: int = 128
    max_steps: int = 32
    roi_height: int = 8
    roi_width: int = 32
    use_mask: bool = True

    def __post_init__(self):
        if self.embed_dim % self.heads != 0:
            raise ConfigurationError(f"embed_dim ({self.embed_dim}) must be divisible "
                                     f"by heads ({self.heads})")
        if self.max_steps < 1:
            raise ConfigurationError("max_steps must be at least 1")
        if self.roi_height < 1 or self.roi_width < 1:
            raise ConfigurationError("RoI size must be positive")


@dataclass(frozen=True)
class PathConfig:
    ''' Files used by a run; input paths must exist '''
    weights: Optional[str] = None
    charset: Optional[str] = None
    output: str = "output"


@dataclass(frozen=True)
class RunSettings:
    ''' Settings that are not part of any model '''
    seed: int = 42
    bench_repetitions: int = 10
    workers: int = 1
    verbose: bool = False
    shrink_rate: float = 0.7

    def __post_init__(self):
        if self.seed < 0:
            raise ConfigurationError("seed must not be negative")
        if self.bench_repetitions < 1:
            raise ConfigurationError("bench_repetitions must be at least 1")
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")
        if not 0.0 <= self.shrink_rate <= 1.0:
            raise ConfigurationError("shrink_rate must be within [0, 1]")


SECTIONS: dict[str, type] = {
    "paths": PathConfig,
    "model": ModelConfig,
    "pa": PAConfig,
    "loss": LossConfig,
    "recognition": RecognitionConfig,
    "run": RunSettings,
}


def _convert(section: str, key: str, default: Any, value: Any) -> Any:
    '''
        Convert a value to the type of the field's default.
        Strings from the command line are parsed, TOML values are checked.
    '''
    target = type(default)
    if default is None or isinstance(value, target) and not isinstance(value, bool) \
            or target is bool and isinstance(value, bool):
        return value

    try:
        if target is bool:
            if isinstance(value, str) and value.lower() in ['true', '1']:
                return True
            if isinstance(value, str) and value.lower() in ['false', '0']:
                return False
            raise ValueError(value)
        if target is tuple:
            items = value.split(',') if isinstance(value, str) else list(value)
            return tuple(type(default[0])(item) for item in items)
        if target is float and isinstance(value, (int, str)) and not isinstance(value, bool):
            return float(value)
        if target is int and isinstance(value, str):
            return int(value)
    except (ValueError, TypeError, AttributeError) as err:
        raise ConfigurationError(f'Cannot set "{section}.{key}" to `{value}`: '
                                 f'expected {target.__name__}') from err

    raise ConfigurationError(f'Cannot set "{section}.{key}" to `{value}`: '
                             f'expected {target.__name__}, got {type(value).__name__}')


def _build_section(section: str, values: dict[str, Any]):
    cls = SECTIONS[section]
    defaults = cls()
    known = {item.name for item in fields(cls)}

    converted = {}
    for key, value in values.items():
        if key not in known:
            raise ConfigurationError(f'Unknown key "{key}" in section [{section}]')
        converted[key] = _convert(section, key, getattr(defaults, key), value)

    return cls(**converted)


@dataclass(frozen=True)
class RunConfig:
    ''' Everything a command needs, as read from a TOML file and -D overrides '''
    paths: PathConfig = field(default_factory=PathConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    pa: PAConfig = field(default_factory=PAConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    recognition: RecognitionConfig = field(default_factory=RecognitionConfig)
    run: RunSettings = field(default_factory=RunSettings)

    @classmethod
    def from_dict(cls, document: dict[str, Any]) -> 'RunConfig':
        ''' Build a config from parsed TOML tables '''
        sections = {}
        for name, table in document.items():
            if name not in SECTIONS:
                raise ConfigurationError(f"Unknown config section [{name}]")
            if not isinstance(table, dict):
                raise ConfigurationError(f"[{name}] must be a table")
            sections[name] = _build_section(name, table)

        config = cls(**sections)
        config.check_paths()
        return config

    def check_paths(self):
        ''' Make sure all referenced input files exist '''
        for name in ("weights", "charset"):
            path = getattr(self.paths, name)
            if path is not None and not exists(path):
                raise ConfigurationError(f'paths.{name} points to "{path}", '
                                         f'which does not exist')

    def override(self, assignment: str) -> 'RunConfig':
        ''' Apply one `section.key=value` override '''
        try:
            name, value = assignment.split('=', 1)
            section, key = name.strip().split('.')
        except ValueError as err:
            raise ConfigurationError(
                f'Invalid override. Should be of form "<section>.<key>=<value>", '
                f'but was "{assignment}"') from err

        if section not in SECTIONS:
            raise ConfigurationError(f"Unknown config section [{section}]")

        current = getattr(self, section)
        if key not in {item.name for item in fields(current)}:
            raise ConfigurationError(f'Unknown key "{key}" in section [{section}]')

        new_value = _convert(section, key, getattr(SECTIONS[section](), key), value)
        updated = replace(self, **{section: replace(current, **{key: new_value})})
        updated.check_paths()
        return updated

    def to_dict(self) -> dict[str, dict[str, Any]]:
        ''' Flatten into plain tables, e.g. for printing '''
        return {name: {item.name: getattr(getattr(self, name), item.name)
                       for item in fields(SECTIONS[name])}
                for name in SECTIONS}


def load_config(path: Optional[str] = None, overrides: Optional[list[str]] = None) -> RunConfig:
    ''' Read a TOML config (or start from defaults) and apply overrides '''
    if path is None:
        config = RunConfig()
    else:
        try:
            with open(path, 'rb') as toml_file:
                document = tomllib.load(toml_file)
        except OSError as err:
            raise ConfigurationError(f"Cannot open config file at {path}: {err}") from err
        except tomllib.TOMLDecodeError as err:
            raise ConfigurationError(f"Failed to parse config file at {path}: "
                                     f"{err}") from err
        config = RunConfig.from_dict(document)

    for assignment in overrides or []:
        config = config.override(assignment)

    return config
