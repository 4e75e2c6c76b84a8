"""Shared toy corpora and session-scoped trained models.

The toy sentences carry a unique two-token opening and closing per sentence
(so forward and reversed prefixes both identify their sentence) over a small
shared middle vocabulary: 20 sentences, at most 12 tokens, 56 distinct
tokens.
"""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from catgen.corpus import Corpus, SentenceRecord, Vocabulary, build_vocabulary, encode_sentence, reverse_record
from catgen.generator import GenerationConfig, generate
from catgen.model import ModelConfig
from catgen.trainer import EpochReport, TrainingConfig, train

DATA_DIR = Path(__file__).parent / "data"


def toy_sentences(n: int = 20) -> list[list[str]]:
    middles = [f"w{j:02d}" for j in range(10)]
    sents = []
    for i in range(n):
        length = 2 + (i % 7)
        middle = [middles[(i + k) % 10] for k in range(length)]
        sents.append([f"s{i:02d}", "the"] + middle + ["fin", f"e{i:02d}"])
    return sents


def reduced_config(vocab_size: int, num_categories: int) -> ModelConfig:
    return ModelConfig(
        vocab_size=vocab_size,
        glove_dim=8,
        input_embed_dim=16,
        dense1_dim=32,
        lstm1_dim=32,
        lstm2_dim=16,
        dense2_dim=16,
        dropout=0.0,
        l2=1e-5,
        seq_len=13,
        num_categories=num_categories,
    )


def tiny_config() -> ModelConfig:
    """Smallest config used for the full-model gradient checks."""
    return ModelConfig(
        vocab_size=12,
        glove_dim=4,
        input_embed_dim=4,
        dense1_dim=6,
        lstm1_dim=4,
        lstm2_dim=4,
        dense2_dim=4,
        dropout=0.0,
        l2=1e-5,
        seq_len=3,
        num_categories=2,
    )


@dataclass
class ToyModel:
    sentences: list[list[str]]
    vocab: Vocabulary
    corpus: Corpus
    cfg: ModelConfig
    params: object
    reports: list[EpochReport]
    train_seconds: float


def _train_toy(records, num_categories, sentences, vocab, epochs, lr, seed=7) -> ToyModel:
    corpus = Corpus(records=records, num_categories=num_categories)
    cfg = reduced_config(len(vocab), num_categories)
    tcfg = TrainingConfig(batch_size=2, epochs=epochs, lr=lr, rng_seed=seed)
    start = time.perf_counter()
    params, reports = train(corpus, tcfg, cfg)
    return ToyModel(
        sentences=sentences,
        vocab=vocab,
        corpus=corpus,
        cfg=cfg,
        params=params,
        reports=reports,
        train_seconds=time.perf_counter() - start,
    )


@pytest.fixture(scope="session")
def memorized_model() -> ToyModel:
    """20 sentences, one category tag per sentence, trained to memorization."""
    sents = toy_sentences()
    vocab = build_vocabulary(sents, 64)
    records = [encode_sentence(s, vocab, i) for i, s in enumerate(sents)]
    return _train_toy(records, len(sents), sents, vocab, epochs=300, lr=0.015)


@pytest.fixture(scope="session")
def soft_memorized_model() -> ToyModel:
    """Same corpus trained for fewer epochs: still reproduces every sentence
    verbatim but with less saturated output distributions."""
    sents = toy_sentences()
    vocab = build_vocabulary(sents, 64)
    records = [encode_sentence(s, vocab, i) for i, s in enumerate(sents)]
    return _train_toy(records, len(sents), sents, vocab, epochs=150, lr=0.015)


@pytest.fixture(scope="session")
def fwdrev_model() -> ToyModel:
    """Forward sentences under tag 0 plus word-reversed copies under tag 1."""
    sents = toy_sentences()
    vocab = build_vocabulary(sents, 64)
    fwd = [encode_sentence(s, vocab, 0) for s in sents]
    rev = [SentenceRecord(category=1, tokens=reverse_record(r).tokens) for r in fwd]
    return _train_toy(fwd + rev, 2, sents, vocab, epochs=300, lr=0.015)


def disjoint_category_sentences(per_cat: int = 8) -> list[tuple[list[str], list[list[str]]]]:
    """Three categories over pairwise-disjoint 12-word vocabularies."""
    out = []
    for prefix in "abc":
        words = [f"{prefix}{j:02d}" for j in range(12)]
        sents = []
        for i in range(per_cat):
            length = 5 + (i % 5)
            sents.append([words[(i * 3 + k) % 12] for k in range(length)])
        out.append((words, sents))
    return out


@pytest.fixture(scope="session")
def disjoint_model() -> ToyModel:
    cats = disjoint_category_sentences()
    all_sents = [s for _, sents in cats for s in sents]
    vocab = build_vocabulary(all_sents, 64)
    records = [
        encode_sentence(s, vocab, c) for c, (_, sents) in enumerate(cats) for s in sents
    ]
    return _train_toy(records, 3, all_sents, vocab, epochs=300, lr=0.015)


def verbatim_completions(model: ToyModel, categories: list[int] | None = None) -> int:
    """How many sentences the model reproduces exactly from their two-token
    prefix at exploration 0."""
    hits = 0
    for i, sent in enumerate(model.sentences):
        cat = categories[i] if categories is not None else i
        out = generate(
            model.params,
            model.cfg,
            model.vocab,
            GenerationConfig(category=cat, exploration=0.0, seed_text=sent[:2], max_tokens=20),
        )
        hits += sent[:2] + out == sent
    return hits
