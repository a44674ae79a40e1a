"""styleshift: stochastic style transfer GAN + self-ensembling domain adaptation.

Train a CycleGAN-variant that swaps style between two image domains while
keeping content, materialize style-adapted dataset instances from its
checkpoints, and train teacher-student classifiers that generalize across
domain shifts, including unseen ones.
"""

__version__ = "0.1.0"

from .disentangle import (
    BackboneConfig,
    ContentRepr,
    FeatureBackbone,
    ImageBatch,
    StyleRepr,
    extract_content,
    extract_style,
    gram_matrix,
    load_backbone,
    style_distance,
)
from .data import AdaptedDatasetSpec, DatasetManifest, ingest, materialize_adapted
from .ensemble import (
    ClassifierConfig,
    EnsembleState,
    TrainMode,
    consistency_loss,
    ema_update,
    supervised_loss,
    train_classifier,
    train_step,
)
from .evaluation import TransferMatrix, render_report, top_k_accuracy
from .gan_losses import (
    LossWeights,
    adversarial_losses,
    loss_cross,
    loss_intra,
    loss_reconstruction,
    total_loss,
)
from .gan_training import GanConfig, load_gan_checkpoint, train_gan
from .networks import GeneratorPair, IdentityGenerator, UnetGenerator, translate
from .pipeline import ExperimentConfig, run_experiment
from .synthetic import SyntheticSpec, make_synthetic_domains

__all__ = [
    "AdaptedDatasetSpec",
    "BackboneConfig",
    "ClassifierConfig",
    "ContentRepr",
    "DatasetManifest",
    "EnsembleState",
    "ExperimentConfig",
    "FeatureBackbone",
    "GanConfig",
    "GeneratorPair",
    "IdentityGenerator",
    "ImageBatch",
    "LossWeights",
    "StyleRepr",
    "SyntheticSpec",
    "TrainMode",
    "TransferMatrix",
    "UnetGenerator",
    "adversarial_losses",
    "consistency_loss",
    "ema_update",
    "extract_content",
    "extract_style",
    "gram_matrix",
    "ingest",
    "load_backbone",
    "load_gan_checkpoint",
    "loss_cross",
    "loss_intra",
    "loss_reconstruction",
    "make_synthetic_domains",
    "materialize_adapted",
    "render_report",
    "run_experiment",
    "style_distance",
    "supervised_loss",
    "top_k_accuracy",
    "total_loss",
    "train_classifier",
    "train_gan",
    "train_step",
    "translate",
]
