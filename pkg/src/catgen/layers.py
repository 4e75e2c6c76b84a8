"""Dense/recurrent layer math with exact analytic gradients, on float64 numpy.

Every forward here has a matching backward derived by hand; the test suite
checks each one against central finite differences. No autodiff involved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh form is stable for large |x|
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def init_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


@dataclass
class AffineParams:
    W: np.ndarray  # [out, in]
    b: np.ndarray  # [out]


def init_affine(rng: np.random.Generator, in_dim: int, out_dim: int) -> AffineParams:
    return AffineParams(W=init_uniform(rng, (out_dim, in_dim), in_dim), b=np.zeros(out_dim))


def affine_forward(p: AffineParams, x: np.ndarray) -> np.ndarray:
    return x @ p.W.T + p.b


def affine_backward(p: AffineParams, x: np.ndarray, grad_out: np.ndarray):
    """Returns (dW, db, dx) for y = x @ W.T + b."""
    dW = grad_out.T @ x
    db = grad_out.sum(axis=0)
    dx = grad_out @ p.W
    return dW, db, dx


@dataclass
class LstmCellParams:
    """Gates stacked along the first axis in the order input, forget,
    candidate, output."""

    W_ih: np.ndarray  # [4H, D]
    W_hh: np.ndarray  # [4H, H]
    b: np.ndarray  # [4H]

    @property
    def hidden_dim(self) -> int:
        return self.W_hh.shape[1]


def init_lstm(rng: np.random.Generator, in_dim: int, hidden_dim: int) -> LstmCellParams:
    p = LstmCellParams(
        W_ih=init_uniform(rng, (4 * hidden_dim, in_dim), in_dim),
        W_hh=init_uniform(rng, (4 * hidden_dim, hidden_dim), hidden_dim),
        b=np.zeros(4 * hidden_dim),
    )
    p.b[hidden_dim : 2 * hidden_dim] = 1.0  # forget-gate bias starts open
    return p


def lstm_step_cached(p: LstmCellParams, x: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray):
    """One LSTM step over a batch. Returns (h, c, cache) with everything the
    backward pass needs."""
    H = p.hidden_dim
    z = x @ p.W_ih.T + h_prev @ p.W_hh.T + p.b
    i = sigmoid(z[:, :H])
    f = sigmoid(z[:, H : 2 * H])
    g = np.tanh(z[:, 2 * H : 3 * H])
    o = sigmoid(z[:, 3 * H :])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    cache = {"x": x, "h_prev": h_prev, "c_prev": c_prev, "i": i, "f": f, "g": g, "o": o, "tc": tc}
    return h, c, cache


def lstm_step(p: LstmCellParams, x: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray):
    h, c, _ = lstm_step_cached(p, x, h_prev, c_prev)
    return h, c


def lstm_step_backward(p: LstmCellParams, cache: dict, dh: np.ndarray, dc: np.ndarray):
    """Backward through one step given gradients on h and c.

    Returns (dW_ih, dW_hh, db, dx, dh_prev, dc_prev).
    """
    i, f, g, o, tc = cache["i"], cache["f"], cache["g"], cache["o"], cache["tc"]
    dc_total = dc + dh * o * (1.0 - tc * tc)
    do = dh * tc
    di = dc_total * g
    df = dc_total * cache["c_prev"]
    dg = dc_total * i
    dz = np.concatenate(
        [di * i * (1.0 - i), df * f * (1.0 - f), dg * (1.0 - g * g), do * o * (1.0 - o)],
        axis=1,
    )
    dW_ih = dz.T @ cache["x"]
    dW_hh = dz.T @ cache["h_prev"]
    db = dz.sum(axis=0)
    dx = dz @ p.W_ih
    dh_prev = dz @ p.W_hh
    dc_prev = dc_total * f
    return dW_ih, dW_hh, db, dx, dh_prev, dc_prev


@dataclass
class EmbeddingTable:
    table: np.ndarray  # [V, E]
    trainable: bool = True


def init_embedding(rng: np.random.Generator, vocab_size: int, dim: int, trainable: bool = True) -> EmbeddingTable:
    # rows scaled so their norm stays O(1) regardless of vocabulary size
    return EmbeddingTable(table=init_uniform(rng, (vocab_size, dim), dim), trainable=trainable)


def embedding_forward(emb: EmbeddingTable, ids: np.ndarray) -> np.ndarray:
    return emb.table[ids]


def embedding_backward(ids: np.ndarray, grad_out: np.ndarray, vocab_size: int) -> np.ndarray:
    grad = np.zeros((vocab_size, grad_out.shape[-1]))
    np.add.at(grad, ids, grad_out)
    return grad


def dropout_forward(
    x: np.ndarray, rate: float, rng: np.random.Generator | None, training: bool
) -> tuple[np.ndarray, np.ndarray]:
    """Inverted dropout: surviving entries are pre-scaled by 1/(1-rate) so
    inference is a bitwise identity. Returns (y, scaled_mask)."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x, np.ones_like(x)
    if rng is None:
        raise ValueError("training-mode dropout needs an rng")
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * mask, mask


def dropout_backward(grad_out: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return grad_out * mask


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(
    logits: np.ndarray, targets: np.ndarray, mask: np.ndarray | None = None
) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood over unmasked rows.

    Returns (loss, grad_logits); masked rows get zero gradient. An all-masked
    input yields loss 0.
    """
    n, v = logits.shape
    targets = np.asarray(targets)
    if targets.min(initial=0) < 0 or targets.max(initial=0) >= v:
        raise ValueError("targets out of vocabulary range")
    if mask is None:
        mask = np.ones(n, dtype=bool)
    count = int(mask.sum())
    if count == 0:
        return 0.0, np.zeros_like(logits)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    rows = np.arange(n)
    loss = -log_probs[rows, targets][mask].sum() / count
    grad = np.exp(log_probs)
    grad[rows, targets] -= 1.0
    grad /= count
    grad[~mask] = 0.0
    return float(loss), grad


def l2_penalty(weights: list[np.ndarray], factor: float) -> tuple[float, list[np.ndarray]]:
    """Penalty factor * sum(w^2) and its gradient 2 * factor * w per tensor."""
    if factor < 0:
        raise ValueError("l2 factor must be non-negative")
    penalty = factor * sum(float((w * w).sum()) for w in weights)
    grads = [2.0 * factor * w for w in weights]
    return penalty, grads
