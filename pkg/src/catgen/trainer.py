"""Mini-batch training loop with per-category weighted sampling.

Categories are drawn per example according to `category_weights` (uniform by
default) so differently sized categories still contribute equally to the
loss. One epoch is ceil(total examples / batch size) optimizer steps.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .checkpoint import save_checkpoint
from .corpus import Corpus, TrainingExample, Vocabulary, load_dataset, window_examples
from .model import ModelConfig, ModelParams, backward_sequence, forward_sequence, init_params, load_glove_table
from .optim import adam_init, adam_update, clip_gradients


@dataclass
class TrainingConfig:
    batch_size: int = 64
    epochs: int = 8
    lr: float = 1e-3
    rng_seed: int = 0
    category_weights: list[float] | None = None  # None = uniform
    checkpoint_every: int = 0  # epochs between checkpoints; 0 = final only
    clip_norm: float = 5.0  # <= 0 disables clipping

    def __post_init__(self):
        if self.batch_size < 0 or self.epochs < 0:
            raise ValueError("batch_size and epochs must be non-negative")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.category_weights is not None:
            w = np.asarray(self.category_weights, dtype=float)
            if (w < 0).any() or not math.isclose(w.sum(), 1.0, rel_tol=0, abs_tol=1e-9):
                raise ValueError("category weights must be non-negative and sum to 1")


@dataclass
class EpochReport:
    epoch: int
    mean_loss: float
    next_token_accuracy: float
    wall_time: float


def window_corpus(corpus: Corpus, seq_len: int) -> list[list[TrainingExample]]:
    """Window every record; returns one example pool per category."""
    pools: list[list[TrainingExample]] = [[] for _ in range(corpus.num_categories)]
    for rec in corpus.records:
        pools[rec.category].extend(window_examples(rec, seq_len))
    return pools


def resolve_weights(weights: list[float] | None, num_categories: int) -> np.ndarray:
    if weights is None:
        return np.full(num_categories, 1.0 / num_categories)
    w = np.asarray(weights, dtype=float)
    if len(w) != num_categories:
        raise ValueError(f"need {num_categories} category weights, got {len(w)}")
    return w


def stratified_sample_ids(
    pool_sizes: list[int], weights: np.ndarray, batch_size: int, rng: np.random.Generator
) -> list[tuple[int, int]]:
    """Draw (category, index) pairs: category by weight, index uniform."""
    for cat, (size, w) in enumerate(zip(pool_sizes, weights)):
        if w > 0 and size == 0:
            raise ValueError(f"category {cat} has weight {w} but no examples")
    if batch_size == 0:
        return []
    cats = rng.choice(len(pool_sizes), size=batch_size, p=weights / weights.sum())
    return [(int(c), int(rng.integers(pool_sizes[c]))) for c in cats]


def stratified_batch(
    pools: list[list[TrainingExample]],
    weights: list[float] | None,
    batch_size: int,
    rng: np.random.Generator,
) -> list[TrainingExample]:
    w = resolve_weights(weights, len(pools))
    ids = stratified_sample_ids([len(p) for p in pools], w, batch_size, rng)
    return [pools[c][i] for c, i in ids]


def batch_arrays(examples: list[TrainingExample]):
    inputs = np.array([e.input_ids for e in examples], dtype=np.int64)
    targets = np.array([e.target_ids for e in examples], dtype=np.int64)
    mask = np.array([e.mask for e in examples], dtype=bool)
    cats = np.array([e.category for e in examples], dtype=np.int64)
    return inputs, targets, mask, cats


def train(
    corpus: Corpus,
    tcfg: TrainingConfig,
    mcfg: ModelConfig,
    initial_params: ModelParams | None = None,
    glove_table: np.ndarray | None = None,
    vocab: Vocabulary | None = None,
    checkpoint_path: str | Path | None = None,
    log_path: str | Path | None = None,
) -> tuple[ModelParams, list[EpochReport]]:
    """Train on the corpus; fully deterministic for a fixed seed/data/config.

    Writes a checkpoint every `checkpoint_every` epochs (and always at the
    end) when `checkpoint_path` is given, and appends one
    `epoch<TAB>loss<TAB>accuracy<TAB>seconds` line per epoch to `log_path`.
    """
    if not corpus.records:
        raise ValueError("cannot train on an empty corpus")
    if mcfg.num_categories != corpus.num_categories:
        raise ValueError(
            f"model expects {mcfg.num_categories} categories, corpus has {corpus.num_categories}"
        )
    if checkpoint_path is not None and vocab is None:
        raise ValueError("writing checkpoints requires the vocabulary")
    if tcfg.batch_size < 1:
        raise ValueError("training requires batch_size >= 1")

    rng = np.random.default_rng(tcfg.rng_seed)
    params = initial_params if initial_params is not None else init_params(mcfg, rng, glove_table)
    pools = window_corpus(corpus, mcfg.seq_len)
    pool_sizes = [len(p) for p in pools]
    weights = resolve_weights(tcfg.category_weights, corpus.num_categories)
    total = sum(pool_sizes)
    steps_per_epoch = max(1, math.ceil(total / tcfg.batch_size))

    trainable = params.trainable_arrays()
    opt_state = adam_init(trainable)
    reports: list[EpochReport] = []
    log_file = Path(log_path) if log_path is not None else None

    def _write_checkpoint():
        if checkpoint_path is not None:
            save_checkpoint(checkpoint_path, mcfg, vocab, params)

    for epoch in range(1, tcfg.epochs + 1):
        t0 = time.perf_counter()
        loss_sum = 0.0
        hits = 0
        seen = 0
        for step in range(steps_per_epoch):
            ids = stratified_sample_ids(pool_sizes, weights, tcfg.batch_size, rng)
            batch = [pools[c][i] for c, i in ids]
            inputs, targets, mask, cats = batch_arrays(batch)
            loss, logits, caches = forward_sequence(
                params, mcfg, inputs, targets, mask, cats, training=True, rng=rng
            )
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch} step {step}; batch ids {ids}"
                )
            grads = backward_sequence(params, mcfg, caches)
            if tcfg.clip_norm > 0:
                clip_gradients(grads, tcfg.clip_norm)
            adam_update(trainable, grads, opt_state, lr=tcfg.lr)
            loss_sum += loss
            hits += int((np.argmax(logits, axis=2)[mask] == targets[mask]).sum())
            seen += int(mask.sum())
        report = EpochReport(
            epoch=epoch,
            mean_loss=loss_sum / steps_per_epoch,
            next_token_accuracy=hits / seen if seen else 0.0,
            wall_time=time.perf_counter() - t0,
        )
        reports.append(report)
        if log_file is not None:
            with open(log_file, "a", encoding="utf-8") as fh:
                fh.write(
                    f"{report.epoch}\t{report.mean_loss:.6f}"
                    f"\t{report.next_token_accuracy:.6f}\t{report.wall_time:.3f}\n"
                )
        if tcfg.checkpoint_every and epoch % tcfg.checkpoint_every == 0:
            _write_checkpoint()
    _write_checkpoint()
    return params, reports


EXPERIMENT_CATEGORIES = {"just-jokes": 1, "forward-reverse": 2, "three-category": 3}


def run_experiment(
    name: str,
    data_dir: str | Path,
    tcfg: TrainingConfig,
    model_overrides: dict[str, str] | None = None,
    glove_path: str | Path | None = None,
    checkpoint_path: str | Path | None = None,
    log_path: str | Path | None = None,
):
    """Train one of the canned recipes on a prepared dataset directory.

    just-jokes expects a single-category dataset, forward-reverse the
    two-category reverse-augmented one, three-category the full mix.
    """
    if name not in EXPERIMENT_CATEGORIES:
        raise ValueError(f"unknown experiment {name!r}; pick from {sorted(EXPERIMENT_CATEGORIES)}")
    corpus, vocab = load_dataset(data_dir)
    expected = EXPERIMENT_CATEGORIES[name]
    if corpus.num_categories != expected:
        raise ValueError(
            f"experiment {name} needs a {expected}-category dataset, "
            f"found {corpus.num_categories} categories"
        )
    mcfg = build_model_config(len(vocab), corpus.num_categories, model_overrides)
    glove_table = None
    if glove_path is not None:
        glove_table = load_glove_table(
            glove_path, vocab, mcfg.glove_dim, np.random.default_rng(tcfg.rng_seed)
        )
    params, reports = train(
        corpus,
        tcfg,
        mcfg,
        glove_table=glove_table,
        vocab=vocab,
        checkpoint_path=checkpoint_path,
        log_path=log_path,
    )
    return params, reports, mcfg, vocab


def build_model_config(
    vocab_size: int, num_categories: int, overrides: dict[str, str] | None = None
) -> ModelConfig:
    kv = ModelConfig(vocab_size=vocab_size, num_categories=num_categories).to_kv()
    if overrides:
        unknown = set(overrides) - set(kv)
        if unknown:
            raise ValueError(f"unknown model config keys: {sorted(unknown)}")
        kv.update(overrides)
    kv["vocab_size"] = str(vocab_size)
    kv["num_categories"] = str(num_categories)
    return ModelConfig.from_kv(kv)
