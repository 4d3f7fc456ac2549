from .checkpoint import FORMAT_TAG, load_checkpoint, save_checkpoint
from .model import (
    DEFAULT_VARIANCE_FLOOR,
    ElboTerms,
    GmmParams,
    GmVae,
    LatentEmbedding,
    Responsibilities,
    cluster_assign,
    decode,
    elbo,
    em_step,
    encode,
    gmm_log_likelihood,
    permutation_accuracy,
    responsibilities,
    sample,
)
from .train import TrainConfig, TrainHistory, batch_loss, embed_dataset, train

__all__ = [
    "FORMAT_TAG",
    "load_checkpoint",
    "save_checkpoint",
    "DEFAULT_VARIANCE_FLOOR",
    "ElboTerms",
    "GmmParams",
    "GmVae",
    "LatentEmbedding",
    "Responsibilities",
    "cluster_assign",
    "decode",
    "elbo",
    "em_step",
    "encode",
    "gmm_log_likelihood",
    "permutation_accuracy",
    "responsibilities",
    "sample",
    "TrainConfig",
    "TrainHistory",
    "batch_loss",
    "embed_dataset",
    "train",
]
