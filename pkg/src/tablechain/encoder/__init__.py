"""Permutation-invariant table encoder with masked-column pretraining."""

from .features import ColumnFeatures, featurize, feature_matrices
from .model import (
    D_MODEL, EncoderParams, MANIFEST, NUM_HEADS, TableEmbedding,
    attention_block, encode, init_params, layer_norm, load_params,
    load_params_file, save_params, save_params_file,
)
from .training import (
    MtmResult, TrainConfig, grad_check, mask_count, mtm_loss, train_mtm,
)
from .synthetic import synth_corpus, synth_table

__all__ = [
    "ColumnFeatures", "featurize", "feature_matrices",
    "D_MODEL", "NUM_HEADS", "MANIFEST", "EncoderParams", "TableEmbedding",
    "attention_block", "layer_norm", "encode", "init_params",
    "save_params", "save_params_file", "load_params", "load_params_file",
    "MtmResult", "TrainConfig", "grad_check", "mask_count", "mtm_loss",
    "train_mtm", "synth_corpus", "synth_table",
]
