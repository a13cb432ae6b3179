''' The full spotting pipeline: backbone → FPEMs → detection head + PA → recognition '''

from dataclasses import dataclass, field
from time import perf_counter
from typing import Optional

import numpy as np

from .config import RunConfig
from .errors import TensorError
from .logging import RunLogger
from .nn.fpem import enhance_and_fuse
from .nn.model import DetectionOutput, detection_head, toy_backbone
from .nn.weights import WeightStore, detection_architecture, init_weights
from .nn.weights import recognition_architecture
from .pa import TextInstance, aggregate
from .recognition.charset import Charset
from .recognition.decoder import Decoder
from .recognition.roi import masked_roi
from .tensor import TensorMap, bilinear_resize

STAGES = ("backbone", "fpem", "detection_pa", "recognition")
SIZE_MULTIPLE = 32


@dataclass(frozen=True, eq=False)
class PipelineResult:
    ''' Predictions, instances, and per-stage wall-clock milliseconds of one image '''
    detection: DetectionOutput
    instances: list[TextInstance]
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def total_ms(self) -> float:
        ''' Sum over all stages '''
        return sum(self.timings.values())


def prepare_image(image: TensorMap, short_side: int, multiple: int = SIZE_MULTIPLE) -> TensorMap:
    '''
        Resize so the shorter side is close to short_side while keeping the
        aspect ratio; both sides are rounded to multiples of 32
    '''
    if image.rank != 3:
        raise TensorError(f"Expected a [C,H,W] image, got {list(image.dims)}")
    if short_side < multiple:
        raise TensorError(f"Short side must be at least {multiple}, got {short_side}")

    (_, height, width) = image.dims
    scale = short_side / min(height, width)
    out_h = max(multiple, int(round(height * scale / multiple)) * multiple)
    out_w = max(multiple, int(round(width * scale / multiple)) * multiple)
    return bilinear_resize(image, out_h, out_w)


def pad_to_multiple(image: TensorMap, multiple: int = SIZE_MULTIPLE) -> TensorMap:
    ''' Zero-pad the bottom and right so both sides are multiples of 32 '''
    if image.rank != 3:
        raise TensorError(f"Expected a [C,H,W] image, got {list(image.dims)}")

    (_, height, width) = image.dims
    pad_h = -height % multiple
    pad_w = -width % multiple
    if pad_h == 0 and pad_w == 0:
        return image
    return TensorMap(np.pad(image.array, ((0, 0), (0, pad_h), (0, pad_w))))


def model_architecture(cfg: RunConfig, charset: Charset, with_recognition: bool = True):
    ''' All parameters the pipeline needs '''
    arch = detection_architecture(cfg.model)
    if with_recognition:
        arch |= recognition_architecture(cfg.recognition, cfg.model.fused_channels, charset.size)
    return arch


def load_weights(cfg: RunConfig, charset: Charset, with_recognition: bool = True) -> WeightStore:
    ''' Read the configured weight store, or create seeded weights if there is none '''
    arch = model_architecture(cfg, charset, with_recognition)
    if cfg.paths.weights is None:
        weights = init_weights(arch, cfg.run.seed)
    else:
        weights = WeightStore.load(cfg.paths.weights)
    weights.validate(arch)
    return weights


def load_charset(cfg: RunConfig) -> Charset:
    ''' The configured charset, or the default one '''
    if cfg.paths.charset is None:
        return Charset.default()
    return Charset.from_file(cfg.paths.charset)


class Pipeline:
    ''' Runs all stages on one image at a time '''

    def __init__(self, cfg: RunConfig, weights: WeightStore, charset: Charset,
                 logger: Optional[RunLogger] = None):
        self._cfg = cfg
        self._weights = weights
        self._charset = charset
        self._logger = logger
        self._decoder: Optional[Decoder] = None

    @property
    def config(self) -> RunConfig:
        ''' The configuration the pipeline was set up with '''
        return self._cfg

    def _log(self, msg: str):
        if self._logger:
            self._logger.log_info(msg)

    def decoder(self) -> Decoder:
        ''' The recognition head (created on first use) '''
        if self._decoder is None:
            self._decoder = Decoder(self._weights, self._charset, self._cfg.recognition)
        return self._decoder

    def recognize(self, f_f: TensorMap, instances: list[TextInstance]) -> list[TextInstance]:
        ''' Masked RoI extraction and greedy decoding of every instance '''
        rec = self._cfg.recognition
        decoder = self.decoder()

        result = []
        for instance in instances:
            roi = masked_roi(f_f, instance.mask, rec.roi_height, rec.roi_width,
                             use_mask=rec.use_mask, instance_id=instance.id)
            (decoded, _) = decoder.decode(roi)
            result.append(instance.with_transcription(decoded.text(self._charset)))
        return result

    def run(self, image: TensorMap, det_only: bool = False) -> PipelineResult:
        ''' Process one [3,H,W] image with H and W divisible by 32 '''
        timings = {}

        start = perf_counter()
        pyramid = toy_backbone(image, self._weights)
        timings["backbone"] = (perf_counter() - start) * 1000.0

        start = perf_counter()
        f_f = enhance_and_fuse(pyramid, self._weights, self._cfg.model.n_stk)
        timings["fpem"] = (perf_counter() - start) * 1000.0

        start = perf_counter()
        detection = detection_head(f_f, self._weights, self._cfg.model)
        instances = aggregate(detection.p_tex, detection.p_ker, detection.emb, self._cfg.pa)
        timings["detection_pa"] = (perf_counter() - start) * 1000.0

        start = perf_counter()
        if not det_only:
            instances = self.recognize(f_f, instances)
        timings["recognition"] = (perf_counter() - start) * 1000.0

        self._log(f"Found {len(instances)} text instances in "
                  f"{sum(timings.values()):.1f} ms")
        return PipelineResult(detection, instances, timings)
