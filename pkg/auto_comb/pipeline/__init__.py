from .hyperparameter import DEFAULT_PIPELINE_PARAMS, ARTIFACT_NAMES
from .config import PipelineConfig
from .stages import *
from .runner import run_pipeline
from .phantom import PhantomSpec, OrganBlob, Phantom, make_phantom
