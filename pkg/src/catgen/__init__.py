"""Category-conditioned word-level LSTM text generation toolkit."""

from .corpus import (
    Corpus,
    SentenceRecord,
    TrainingExample,
    Vocabulary,
    build_corpus,
    build_vocabulary,
    clean_text,
    deduplicate,
    encode_sentence,
    load_dataset,
    reverse_record,
    save_dataset,
    tokenize,
    window_examples,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .evaluate import k_jaccard, novelty_protocol, parser_prep, phrase_overlap, phrase_sim
from .generator import GenerationConfig, detokenize, generate, sample_next_token
from .model import ModelConfig, ModelParams, backward_sequence, forward_sequence, forward_step, init_params
from .trainer import EpochReport, TrainingConfig, run_experiment, stratified_batch, train

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "EpochReport",
    "GenerationConfig",
    "ModelConfig",
    "ModelParams",
    "SentenceRecord",
    "TrainingConfig",
    "TrainingExample",
    "Vocabulary",
    "backward_sequence",
    "build_corpus",
    "build_vocabulary",
    "clean_text",
    "deduplicate",
    "detokenize",
    "encode_sentence",
    "forward_sequence",
    "forward_step",
    "generate",
    "init_params",
    "k_jaccard",
    "load_checkpoint",
    "load_dataset",
    "novelty_protocol",
    "parser_prep",
    "phrase_overlap",
    "phrase_sim",
    "reverse_record",
    "run_experiment",
    "sample_next_token",
    "save_checkpoint",
    "save_dataset",
    "stratified_batch",
    "tokenize",
    "train",
    "window_examples",
]
