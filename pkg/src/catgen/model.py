"""Category-conditioned stacked LSTM over word ids.

Each time step consumes the concatenation of a frozen pretrained embedding,
a trainable embedding, and the one-hot category tag, then runs
dense -> LSTM -> LSTM -> dense -> vocabulary projection. The category vector
is re-injected at every step, which is what lets a single network switch the
style of its output on demand.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Vocabulary
from .layers import (
    AffineParams,
    EmbeddingTable,
    LstmCellParams,
    affine_backward,
    affine_forward,
    dropout_backward,
    dropout_forward,
    embedding_backward,
    init_affine,
    init_embedding,
    init_lstm,
    l2_penalty,
    lstm_step_backward,
    lstm_step_cached,
    softmax_cross_entropy,
)


@dataclass
class ModelConfig:
    vocab_size: int
    glove_dim: int = 200
    input_embed_dim: int = 512
    dense1_dim: int = 512
    lstm1_dim: int = 1024
    lstm2_dim: int = 512
    dense2_dim: int = 512
    dropout: float = 0.2
    l2: float = 1e-5
    seq_len: int = 13
    num_categories: int = 3

    def __post_init__(self):
        dims = (
            self.vocab_size,
            self.glove_dim,
            self.input_embed_dim,
            self.dense1_dim,
            self.lstm1_dim,
            self.lstm2_dim,
            self.dense2_dim,
            self.seq_len,
            self.num_categories,
        )
        if any(d <= 0 for d in dims):
            raise ValueError("all model dimensions must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.l2 < 0:
            raise ValueError("l2 factor must be non-negative")

    @property
    def input_dim(self) -> int:
        return self.glove_dim + self.input_embed_dim + self.num_categories

    def to_kv(self) -> dict[str, str]:
        return {f.name: repr(getattr(self, f.name)) for f in dataclasses.fields(self)}

    @classmethod
    def from_kv(cls, kv: dict[str, str]) -> "ModelConfig":
        kwargs = {}
        for f in dataclasses.fields(cls):
            if f.name in kv:
                kwargs[f.name] = (float if f.type == "float" else int)(float(kv[f.name]))
        return cls(**kwargs)


@dataclass
class ModelParams:
    glove: EmbeddingTable  # frozen
    learned: EmbeddingTable
    dense1: AffineParams
    lstm1: LstmCellParams
    lstm2: LstmCellParams
    dense2: AffineParams
    out_proj: AffineParams

    def named_arrays(self) -> dict[str, np.ndarray]:
        return {
            "glove.table": self.glove.table,
            "learned.table": self.learned.table,
            "dense1.W": self.dense1.W,
            "dense1.b": self.dense1.b,
            "lstm1.W_ih": self.lstm1.W_ih,
            "lstm1.W_hh": self.lstm1.W_hh,
            "lstm1.b": self.lstm1.b,
            "lstm2.W_ih": self.lstm2.W_ih,
            "lstm2.W_hh": self.lstm2.W_hh,
            "lstm2.b": self.lstm2.b,
            "dense2.W": self.dense2.W,
            "dense2.b": self.dense2.b,
            "out_proj.W": self.out_proj.W,
            "out_proj.b": self.out_proj.b,
        }

    def trainable_arrays(self) -> dict[str, np.ndarray]:
        out = self.named_arrays()
        if not self.glove.trainable:
            del out["glove.table"]
        if not self.learned.trainable:
            del out["learned.table"]
        return out

    def l2_arrays(self) -> dict[str, np.ndarray]:
        """Weight matrices subject to the L2 penalty: no biases, no frozen
        embeddings."""
        named = self.trainable_arrays()
        return {k: v for k, v in named.items() if not k.endswith(".b")}


def init_params(
    cfg: ModelConfig, rng: np.random.Generator, glove_table: np.ndarray | None = None
) -> ModelParams:
    """Seeded parameter initialization; rng consumption order is fixed."""
    if glove_table is None:
        glove = init_embedding(rng, cfg.vocab_size, cfg.glove_dim, trainable=False)
    else:
        if glove_table.shape != (cfg.vocab_size, cfg.glove_dim):
            raise ValueError(
                f"pretrained table shape {glove_table.shape} does not match "
                f"({cfg.vocab_size}, {cfg.glove_dim})"
            )
        glove = EmbeddingTable(table=np.array(glove_table, dtype=np.float64), trainable=False)
    return ModelParams(
        glove=glove,
        learned=init_embedding(rng, cfg.vocab_size, cfg.input_embed_dim),
        dense1=init_affine(rng, cfg.input_dim, cfg.dense1_dim),
        lstm1=init_lstm(rng, cfg.dense1_dim, cfg.lstm1_dim),
        lstm2=init_lstm(rng, cfg.lstm1_dim, cfg.lstm2_dim),
        dense2=init_affine(rng, cfg.lstm2_dim, cfg.dense2_dim),
        out_proj=init_affine(rng, cfg.dense2_dim, cfg.vocab_size),
    )


def load_glove_table(
    path: str | Path, vocab: Vocabulary, dim: int, rng: np.random.Generator
) -> np.ndarray:
    """Read a pretrained embedding text file (`word v1 .. vE` per line).

    Tokens absent from the file keep a seeded random row; the rng is consumed
    for the whole table up front so the result is deterministic regardless of
    file ordering.
    """
    table = init_embedding(rng, len(vocab), dim).table
    wanted = vocab.token_to_id
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                continue
            idx = wanted.get(parts[0])
            if idx is not None:
                table[idx] = np.array(parts[1:], dtype=np.float64)
    return table


@dataclass
class ModelState:
    h1: np.ndarray
    c1: np.ndarray
    h2: np.ndarray
    c2: np.ndarray


def zero_state(cfg: ModelConfig, batch: int) -> ModelState:
    return ModelState(
        h1=np.zeros((batch, cfg.lstm1_dim)),
        c1=np.zeros((batch, cfg.lstm1_dim)),
        h2=np.zeros((batch, cfg.lstm2_dim)),
        c2=np.zeros((batch, cfg.lstm2_dim)),
    )


def one_hot(ids: np.ndarray, depth: int) -> np.ndarray:
    out = np.zeros((len(ids), depth))
    out[np.arange(len(ids)), ids] = 1.0
    return out


def _validate_ids(cfg: ModelConfig, token_ids: np.ndarray, categories: np.ndarray) -> None:
    if token_ids.min(initial=0) < 0 or token_ids.max(initial=0) >= cfg.vocab_size:
        raise ValueError("token id out of range")
    if categories.min(initial=0) < 0 or categories.max(initial=0) >= cfg.num_categories:
        raise ValueError("category id out of range")


def _step(
    params: ModelParams,
    cfg: ModelConfig,
    token_ids: np.ndarray,
    cat_onehot: np.ndarray,
    state: ModelState,
    training: bool,
    rng: np.random.Generator | None,
):
    x0 = np.concatenate(
        [params.glove.table[token_ids], params.learned.table[token_ids], cat_onehot], axis=1
    )
    a1 = np.tanh(affine_forward(params.dense1, x0))
    d1, m1 = dropout_forward(a1, cfg.dropout, rng, training)
    h1, c1, l1 = lstm_step_cached(params.lstm1, d1, state.h1, state.c1)
    d2, m2 = dropout_forward(h1, cfg.dropout, rng, training)
    h2, c2, l2 = lstm_step_cached(params.lstm2, d2, state.h2, state.c2)
    d3, m3 = dropout_forward(h2, cfg.dropout, rng, training)
    a2 = np.tanh(affine_forward(params.dense2, d3))
    logits = affine_forward(params.out_proj, a2)
    new_state = ModelState(h1=h1, c1=c1, h2=h2, c2=c2)
    cache = {
        "tok": token_ids,
        "x0": x0,
        "a1": a1,
        "m1": m1,
        "l1": l1,
        "m2": m2,
        "l2": l2,
        "m3": m3,
        "d3": d3,
        "a2": a2,
    }
    return logits, new_state, cache


def forward_step(
    params: ModelParams,
    cfg: ModelConfig,
    token_ids: np.ndarray,
    categories: np.ndarray,
    state: ModelState,
    training: bool = False,
    rng: np.random.Generator | None = None,
):
    """Advance one time step for a batch; returns (logits [B,V], new state)."""
    token_ids = np.asarray(token_ids)
    categories = np.asarray(categories)
    _validate_ids(cfg, token_ids, categories)
    logits, new_state, _ = _step(
        params, cfg, token_ids, one_hot(categories, cfg.num_categories), state, training, rng
    )
    return logits, new_state


def forward_sequence(
    params: ModelParams,
    cfg: ModelConfig,
    inputs: np.ndarray,
    targets: np.ndarray,
    mask: np.ndarray,
    categories: np.ndarray,
    training: bool = False,
    rng: np.random.Generator | None = None,
):
    """Run a [B, L] batch through the unrolled network.

    The category one-hot is repeated at every step. Returns
    (loss, logits [B,L,V], caches); loss is the masked mean cross-entropy
    plus the L2 penalty.
    """
    inputs = np.asarray(inputs)
    targets = np.asarray(targets)
    mask = np.asarray(mask, dtype=bool)
    categories = np.asarray(categories)
    _validate_ids(cfg, inputs, categories)
    batch, length = inputs.shape
    cat_onehot = one_hot(categories, cfg.num_categories)
    state = zero_state(cfg, batch)
    step_caches = []
    logit_steps = []
    for t in range(length):
        logits, state, cache = _step(params, cfg, inputs[:, t], cat_onehot, state, training, rng)
        step_caches.append(cache)
        logit_steps.append(logits)
    all_logits = np.stack(logit_steps, axis=1)  # [B, L, V]
    flat = all_logits.reshape(batch * length, cfg.vocab_size)
    ce_loss, ce_grad = softmax_cross_entropy(flat, targets.reshape(-1), mask.reshape(-1))
    penalty, _ = l2_penalty(list(params.l2_arrays().values()), cfg.l2)
    caches = {
        "steps": step_caches,
        "ce_grad": ce_grad.reshape(batch, length, cfg.vocab_size),
        "batch": batch,
        "length": length,
    }
    return ce_loss + penalty, all_logits, caches


def backward_sequence(params: ModelParams, cfg: ModelConfig, caches: dict) -> dict[str, np.ndarray]:
    """Backpropagation through time for the full stack.

    Returns gradients keyed like `trainable_arrays()`; the frozen pretrained
    table gets no entry.
    """
    grads = {k: np.zeros_like(v) for k, v in params.trainable_arrays().items()}
    batch = caches["batch"]
    dh1 = np.zeros((batch, cfg.lstm1_dim))
    dc1 = np.zeros((batch, cfg.lstm1_dim))
    dh2 = np.zeros((batch, cfg.lstm2_dim))
    dc2 = np.zeros((batch, cfg.lstm2_dim))
    glove_w = cfg.glove_dim
    learned_w = cfg.input_embed_dim
    for t in reversed(range(caches["length"])):
        cache = caches["steps"][t]
        grad_logits = caches["ce_grad"][:, t, :]

        dW, db, da2 = affine_backward(params.out_proj, cache["a2"], grad_logits)
        grads["out_proj.W"] += dW
        grads["out_proj.b"] += db

        ds2 = da2 * (1.0 - cache["a2"] ** 2)
        dW, db, dd3 = affine_backward(params.dense2, cache["d3"], ds2)
        grads["dense2.W"] += dW
        grads["dense2.b"] += db

        dh2_total = dropout_backward(dd3, cache["m3"]) + dh2
        dW_ih, dW_hh, db, dd2, dh2, dc2 = lstm_step_backward(params.lstm2, cache["l2"], dh2_total, dc2)
        grads["lstm2.W_ih"] += dW_ih
        grads["lstm2.W_hh"] += dW_hh
        grads["lstm2.b"] += db

        dh1_total = dropout_backward(dd2, cache["m2"]) + dh1
        dW_ih, dW_hh, db, dd1, dh1, dc1 = lstm_step_backward(params.lstm1, cache["l1"], dh1_total, dc1)
        grads["lstm1.W_ih"] += dW_ih
        grads["lstm1.W_hh"] += dW_hh
        grads["lstm1.b"] += db

        da1 = dropout_backward(dd1, cache["m1"])
        ds1 = da1 * (1.0 - cache["a1"] ** 2)
        dW, db, dx0 = affine_backward(params.dense1, cache["x0"], ds1)
        grads["dense1.W"] += dW
        grads["dense1.b"] += db

        if params.learned.trainable:
            d_learned = dx0[:, glove_w : glove_w + learned_w]
            grads["learned.table"] += embedding_backward(cache["tok"], d_learned, cfg.vocab_size)
        # the frozen pretrained slice and the category one-hot take no gradient

    for name, l2_grad in zip(params.l2_arrays(), l2_penalty(list(params.l2_arrays().values()), cfg.l2)[1]):
        grads[name] += l2_grad
    return grads
