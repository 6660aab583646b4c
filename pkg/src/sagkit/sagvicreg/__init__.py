"""VICReg and its affinity-weighted, random-walk-paired variant on a toy encoder."""

from .affinity import batch_affinity, sample_pairs
from .experiment import DistortionReport, unseen_cluster_experiment
from .losses import (
    LossBreakdown,
    VicregConfig,
    covariance_term,
    invariance_term,
    variance_term,
    weighted_invariance,
)
from .model import ToyEncoder
from .step import StepResult, sag_step, vicreg_step
from .synth import Augmenter, SynthConfig, synth_generate
from .train import VARIANTS, train

__all__ = [
    "Augmenter",
    "DistortionReport",
    "LossBreakdown",
    "StepResult",
    "SynthConfig",
    "ToyEncoder",
    "VARIANTS",
    "VicregConfig",
    "batch_affinity",
    "covariance_term",
    "invariance_term",
    "sag_step",
    "sample_pairs",
    "synth_generate",
    "train",
    "unseen_cluster_experiment",
    "variance_term",
    "vicreg_step",
    "weighted_invariance",
]
