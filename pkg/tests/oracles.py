"""Independent reference implementations the test suite checks against.

Everything here recomputes results by a different route than the library:
scalar loops instead of matrix ops, naive enumeration instead of DP, central
finite differences instead of analytic gradients.
"""

from __future__ import annotations

import math

import numpy as np


def finite_diff_grads(loss_fn, arr: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of loss_fn() w.r.t. every entry of arr,
    perturbing in place."""
    grad = np.zeros_like(arr)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + eps
        up = loss_fn()
        flat[k] = orig - eps
        down = loss_fn()
        flat[k] = orig
        gflat[k] = (up - down) / (2 * eps)
    return grad


def assert_grads_close(analytic: np.ndarray, numeric: np.ndarray, rtol=1e-4, floor=1e-7, label=""):
    diff = np.abs(analytic - numeric)
    tol = np.maximum(rtol * np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    worst = float((diff - tol).max())
    assert (diff <= tol).all(), f"{label}: gradient mismatch, worst excess {worst:.3g}"


def lstm_step_scalar(W_ih, W_hh, b, x, h_prev, c_prev):
    """Pure-scalar LSTM step: explicit loops, math.exp, no numpy matmul."""
    batch, in_dim = x.shape
    hidden = W_hh.shape[1]

    def sig(v):
        return 1.0 / (1.0 + math.exp(-v))

    h = np.zeros((batch, hidden))
    c = np.zeros((batch, hidden))
    for n in range(batch):
        for u in range(hidden):
            acc = [0.0, 0.0, 0.0, 0.0]
            for gate in range(4):
                row = gate * hidden + u
                s = b[row]
                for d in range(in_dim):
                    s += W_ih[row, d] * x[n, d]
                for d in range(hidden):
                    s += W_hh[row, d] * h_prev[n, d]
                acc[gate] = s
            i = sig(acc[0])
            f = sig(acc[1])
            g = math.tanh(acc[2])
            o = sig(acc[3])
            c[n, u] = f * c_prev[n, u] + i * g
            h[n, u] = o * math.tanh(c[n, u])
    return h, c


def softmax_ce_naive(logits: np.ndarray, targets: np.ndarray, mask: np.ndarray) -> float:
    """Unstabilized cross-entropy; only valid at well-conditioned scales."""
    total = 0.0
    count = 0
    for n in range(logits.shape[0]):
        if not mask[n]:
            continue
        exps = [math.exp(v) for v in logits[n]]
        total += -math.log(exps[targets[n]] / sum(exps))
        count += 1
    return total / count if count else 0.0


def phrase_overlap_oracle(s1: list, s2: list) -> int:
    """Naive greedy simulation: enumerate every common phrase each round,
    take the longest under the canonical tie-break, erase, repeat."""
    a, b = list(s1), list(s2)
    if (len(a), a) > (len(b), b):
        a, b = b, a
    a = [("tok", t) for t in a]
    b = [("tok", t) for t in b]
    total = 0
    round_no = 0
    while True:
        matches = []
        for i in range(len(a)):
            for j in range(len(b)):
                length = 0
                while i + length < len(a) and j + length < len(b) and a[i + length] == b[j + length]:
                    length += 1
                    matches.append((length, i, j))
        if not matches:
            return total
        best_len = max(m[0] for m in matches)
        _, bi, bj = min((m for m in matches if m[0] == best_len), key=lambda m: (m[1], m[2]))
        total += best_len * best_len
        for k in range(best_len):
            a[bi + k] = ("gone-a", round_no, k)
            b[bj + k] = ("gone-b", round_no, k)
        round_no += 1


def k_jaccard_oracle(s1: list, s2: list, k: int) -> float:
    """List-based Jaccard: distinct k-grams collected without set algebra."""
    g1 = [tuple(s1[i : i + k]) for i in range(len(s1) - k + 1)]
    g2 = [tuple(s2[i : i + k]) for i in range(len(s2) - k + 1)]
    distinct1 = [g for n, g in enumerate(g1) if g not in g1[:n]]
    distinct2 = [g for n, g in enumerate(g2) if g not in g2[:n]]
    inter = sum(1 for g in distinct1 if g in distinct2)
    union = len(distinct1) + len(distinct2) - inter
    return inter / union if union else 0.0
