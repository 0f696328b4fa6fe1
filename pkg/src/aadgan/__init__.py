"""Attention-guided adversarial synthesis of contrast-response images.

A generator maps a 3-channel non-contrast stack (T2W, ADC, T1-pre) to a
single-channel early or late contrast-response image. Two attention
discriminators, one over the full image and one over an ROI crop, score
real vs synthesized images; their spatial attention maps are aggregated
and fed back into the generator input through a residual Hadamard
product. Training alternates discriminator and generator Adam updates
with an adversarial plus weighted-L1 objective.
"""

from .aadt import read_tensor_file, write_tensor_file
from .aggregation import (
    AadModel,
    AadOutput,
    ENSEMBLE_MODES,
    aad_forward,
    aggregate_attention,
    build_aad,
    mean_attention,
    resize_map,
)
from .attention import (
    AdBlock,
    AdConfig,
    ConstantAttention,
    ad_forward,
    attention_branch_forward,
    build_ad_block,
    trunk_forward,
)
from .checkpoint import Checkpoint, canonical_json, load_checkpoint, save_checkpoint
from .data import (
    DatasetManifest,
    MultimodalSample,
    RoiRect,
    apply_adc_mode,
    centered_roi,
    extract_roi,
    load_manifest,
    load_sample,
    load_samples,
    make_batches,
    normalize_volume,
)
from .errors import (
    AadganError,
    BadMagic,
    ConfigGeometryMismatch,
    DimMismatch,
    EmptyDataset,
    ImageTooSmall,
    InvalidConfig,
    InvalidGeometry,
    IoFailure,
    NonFiniteInput,
    NonFiniteLoss,
    RoiOutOfBounds,
    ShapeMismatch,
)
from .estimator import AadSynthesizer
from .generator import (
    GeneratorConfig,
    build_generator,
    generator_forward,
    param_count,
)
from .metrics import evaluate, mae, psnr, ssim
from .phantom import generate_phantom_dataset
from .training import (
    Adam,
    Runtime,
    TrainConfig,
    TrainState,
    d_loss,
    g_loss,
    infer,
    infer_with_map,
    init_checkpoint,
    init_state,
    rhp_infuse,
    state_from_checkpoint,
    state_to_checkpoint,
    train,
    train_step,
)

__version__ = "0.1.0"

__all__ = [
    "AadganError",
    "AadModel",
    "AadOutput",
    "AadSynthesizer",
    "Adam",
    "AdBlock",
    "AdConfig",
    "BadMagic",
    "Checkpoint",
    "ConfigGeometryMismatch",
    "ConstantAttention",
    "DatasetManifest",
    "DimMismatch",
    "EmptyDataset",
    "ENSEMBLE_MODES",
    "GeneratorConfig",
    "ImageTooSmall",
    "InvalidConfig",
    "InvalidGeometry",
    "IoFailure",
    "MultimodalSample",
    "NonFiniteInput",
    "NonFiniteLoss",
    "RoiOutOfBounds",
    "RoiRect",
    "Runtime",
    "ShapeMismatch",
    "TrainConfig",
    "TrainState",
    "aad_forward",
    "ad_forward",
    "aggregate_attention",
    "apply_adc_mode",
    "attention_branch_forward",
    "build_aad",
    "build_ad_block",
    "build_generator",
    "canonical_json",
    "centered_roi",
    "d_loss",
    "evaluate",
    "extract_roi",
    "g_loss",
    "generate_phantom_dataset",
    "generator_forward",
    "infer",
    "infer_with_map",
    "init_checkpoint",
    "init_state",
    "load_checkpoint",
    "load_manifest",
    "load_sample",
    "load_samples",
    "mae",
    "make_batches",
    "mean_attention",
    "normalize_volume",
    "param_count",
    "psnr",
    "read_tensor_file",
    "resize_map",
    "rhp_infuse",
    "save_checkpoint",
    "ssim",
    "state_from_checkpoint",
    "state_to_checkpoint",
    "train",
    "train_step",
    "trunk_forward",
    "write_tensor_file",
]
