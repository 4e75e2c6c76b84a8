"""Autoregressive sampling with an exploration factor.

Each generated token flips a biased coin: with probability `exploration` it
is drawn from the softmax distribution, otherwise the highest-probability
token is taken. Exploration 0 is fully deterministic and consumes no
randomness at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import EOS_ID, SOS_ID, SPECIAL_TOKENS, Vocabulary
from .layers import softmax
from .model import ModelConfig, ModelParams, forward_step, zero_state


def sample_next_token(logits: np.ndarray, exploration: float, rng: np.random.Generator) -> int:
    """Pick the next token id from a [V] logit vector.

    Argmax ties resolve to the lowest id. The exploration gate and the
    softmax draw consume one uniform each; the pure argmax path consumes
    none.
    """
    if not 0.0 <= exploration <= 1.0:
        raise ValueError(f"exploration must lie in [0, 1], got {exploration}")
    if exploration > 0.0 and rng.random() < exploration:
        probs = softmax(logits)
        cum = np.cumsum(probs)
        idx = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        return min(idx, len(logits) - 1)
    return int(np.argmax(logits))


@dataclass
class GenerationConfig:
    category: int
    exploration: float = 0.0
    seed_text: list[str] = field(default_factory=list)
    max_tokens: int = 30
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.exploration <= 1.0:
            raise ValueError("exploration must lie in [0, 1]")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be at least 1")


def generate(
    params: ModelParams,
    cfg: ModelConfig,
    vocab: Vocabulary,
    gen: GenerationConfig,
    rng: np.random.Generator | None = None,
) -> list[str]:
    """Generate a continuation for the seed under the requested category.

    The sos marker plus the encoded seed (unknowns map to unk) prime the
    state; generation then runs until eos or `max_tokens`. Returns only the
    newly generated tokens, eos excluded.
    """
    if len(vocab) != cfg.vocab_size:
        raise ValueError("vocabulary does not match the model configuration")
    if not 0 <= gen.category < cfg.num_categories:
        raise ValueError(f"category {gen.category} out of range")
    if rng is None:
        rng = np.random.default_rng(gen.rng_seed)
    state = zero_state(cfg, 1)
    category = np.array([gen.category])
    logits = None
    for token_id in [SOS_ID] + [vocab.encode_token(t) for t in gen.seed_text]:
        logits, state = forward_step(params, cfg, np.array([token_id]), category, state)
    out: list[str] = []
    for _ in range(gen.max_tokens):
        next_id = sample_next_token(logits[0], gen.exploration, rng)
        if next_id == EOS_ID:
            break
        out.append(vocab.decode_id(next_id))
        logits, state = forward_step(params, cfg, np.array([next_id]), category, state)
    return out


def content_tokens(tokens: list[str]) -> list[str]:
    """Drop special-marker literals, keeping the actual words/punctuation."""
    return [t for t in tokens if t not in SPECIAL_TOKENS]


def detokenize(tokens: list[str], glue_punctuation: bool = False) -> str:
    """Join tokens with spaces; optionally glue punctuation to the word
    before it for a cosmetic rendering."""
    if not glue_punctuation:
        return " ".join(tokens)
    pieces: list[str] = []
    for tok in tokens:
        if pieces and tok and not any(ch.isalnum() for ch in tok):
            pieces[-1] += tok
        else:
            pieces.append(tok)
    return " ".join(pieces)
