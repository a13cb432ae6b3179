"""
textspot detects and recognizes arbitrarily-shaped text lines on file-based tensor maps
"""

from .errors import TensorError, GeometryError, AnnotationError, ConfigurationError
from .errors import WeightError, RecognitionError, LossError
from .tensor import TensorMap, read_ptm, write_ptm
from .geometry import Polygon, TextAnnotation, read_annotations, write_annotations
from .labelgen import LabelSet, InstanceLabelMap, generate_labels
from .config import RunConfig, ModelConfig, PAConfig, LossConfig, RecognitionConfig
from .config import load_config
from .logging import RunLogger
from .pa import TextInstance, aggregate, connected_components, segment_regions
from .pipeline import Pipeline, PipelineResult
from .eval import EvalSample, DatasetReport, evaluate_dataset

# If we don't set this, the linter might complain
__all__ = [
    "TensorError", "GeometryError", "AnnotationError", "ConfigurationError", "WeightError",
    "RecognitionError", "LossError", "TensorMap", "read_ptm", "write_ptm", "Polygon",
    "TextAnnotation", "read_annotations", "write_annotations", "LabelSet",
    "InstanceLabelMap", "generate_labels", "RunConfig", "ModelConfig", "PAConfig",
    "LossConfig", "RecognitionConfig", "load_config", "RunLogger", "TextInstance",
    "aggregate", "connected_components", "segment_regions", "Pipeline", "PipelineResult",
    "EvalSample", "DatasetReport", "evaluate_dataset"
]
