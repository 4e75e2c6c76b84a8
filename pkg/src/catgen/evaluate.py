"""Novelty scoring of generated text against a training corpus.

Two similarity measures: greedy maximal-phrase overlap (longer shared word
runs count quadratically) squashed through tanh, and the Jaccard index of
contiguous k-gram sets. The protocol seeds generation with the first half of
sampled corpus sentences and reports, per category, the mean over samples of
each generation's maximum similarity to the rest of the corpus.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus, Vocabulary
from .generator import GenerationConfig, generate
from .model import ModelConfig, ModelParams

DEFAULT_KGRAM = 4


def _canonical_pair(s1, s2) -> tuple[list, list]:
    a, b = list(s1), list(s2)
    # a fixed orientation keeps the greedy tie-break symmetric in its inputs
    if (len(a), a) > (len(b), b):
        return b, a
    return a, b


def phrase_overlap(s1: list, s2: list) -> int:
    """Sum of squared lengths over greedily matched maximal common phrases.

    Repeatedly takes the longest contiguous common run (ties: leftmost in the
    canonically first sequence, then the other), retires those positions, and
    adds length squared.
    """
    a, b = _canonical_pair(s1, s2)
    n1, n2 = len(a), len(b)
    alive1 = [True] * n1
    alive2 = [True] * n2
    total = 0
    while True:
        # run[i][j] = longest match starting at (i, j) over alive positions
        best_len = 0
        best_i = best_j = -1
        run_next = [0] * (n2 + 1)
        for i in range(n1 - 1, -1, -1):
            run_here = [0] * (n2 + 1)
            if alive1[i]:
                for j in range(n2 - 1, -1, -1):
                    if alive2[j] and a[i] == b[j]:
                        run_here[j] = 1 + run_next[j + 1]
            run_next = run_here
            for j in range(n2):
                length = run_here[j]
                if length > best_len or (
                    length == best_len and length > 0 and (i, j) < (best_i, best_j)
                ):
                    best_len, best_i, best_j = length, i, j
        if best_len == 0:
            return total
        total += best_len * best_len
        for k in range(best_len):
            alive1[best_i + k] = False
            alive2[best_j + k] = False


def phrase_sim(s1: list, s2: list) -> float:
    """tanh(overlap / combined length); both-empty input is undefined."""
    if len(s1) + len(s2) == 0:
        raise ValueError("phrase similarity needs at least one non-empty sequence")
    return float(np.tanh(phrase_overlap(s1, s2) / (len(s1) + len(s2))))


def kgrams(s: list, k: int) -> set[tuple]:
    return {tuple(s[i : i + k]) for i in range(len(s) - k + 1)}


def k_jaccard(s1: list, s2: list, k: int = DEFAULT_KGRAM) -> float:
    """Jaccard index of contiguous k-gram sets; 0 when both sets are empty."""
    if k < 1:
        raise ValueError("k must be at least 1")
    g1, g2 = kgrams(s1, k), kgrams(s2, k)
    union = g1 | g2
    if not union:
        return 0.0
    return len(g1 & g2) / len(union)


@dataclass
class SampleScore:
    source_index: int
    text: str
    best_match_index: int
    k_jaccard: float
    phrase_sim: float


@dataclass
class SimilarityReport:
    category: int
    exploration: float
    k_jaccard_mean: float
    phrase_overlap_mean: float
    per_sample: list[SampleScore]


def best_scores(
    continuation: list[str], sentences: list[list[str]], exclude_index: int, k: int = DEFAULT_KGRAM
) -> tuple[float, float, int]:
    """Maximum phrase similarity and k-gram Jaccard of a generation against
    every corpus sentence except its own source.

    Returns (max phrase_sim, max k_jaccard, index of the phrase_sim argmax).
    """
    best_sim, best_jac, best_at = 0.0, 0.0, -1
    for idx, other in enumerate(sentences):
        if idx == exclude_index:
            continue
        sim = phrase_sim(continuation, other)
        if sim > best_sim or best_at < 0:
            best_sim, best_at = sim, idx
        best_jac = max(best_jac, k_jaccard(continuation, other, k))
    return best_sim, best_jac, best_at


def novelty_protocol(
    corpus: Corpus,
    vocab: Vocabulary,
    params: ModelParams,
    cfg: ModelConfig,
    exploration: float,
    sample_count: int,
    rng: np.random.Generator,
    max_tokens: int = 30,
    k: int = DEFAULT_KGRAM,
) -> list[SimilarityReport]:
    """Seed generations from sampled corpus sentences and score their novelty.

    For each sampled sentence, its first half seeds one generation per
    category; each continuation (seed excluded) is scored by its maximum
    phrase similarity and k-gram Jaccard against every other corpus sentence.
    """
    sentences = [vocab.decode(rec.tokens[1:-1]) for rec in corpus.records]
    if sample_count > len(sentences):
        warnings.warn(
            f"sample_count {sample_count} exceeds corpus size {len(sentences)}; clamping"
        )
        sample_count = len(sentences)
    picks = rng.choice(len(sentences), size=sample_count, replace=False)
    reports = []
    for category in range(corpus.num_categories):
        scores: list[SampleScore] = []
        for idx in picks:
            source = sentences[idx]
            seed = source[: max(1, len(source) // 2)]
            continuation = generate(
                params,
                cfg,
                vocab,
                GenerationConfig(
                    category=category,
                    exploration=exploration,
                    seed_text=seed,
                    max_tokens=max_tokens,
                ),
                rng=rng,
            )
            best_sim, best_jac, best_at = best_scores(continuation, sentences, int(idx), k)
            scores.append(
                SampleScore(
                    source_index=int(idx),
                    text=" ".join(continuation),
                    best_match_index=best_at,
                    k_jaccard=best_jac,
                    phrase_sim=best_sim,
                )
            )
        reports.append(
            SimilarityReport(
                category=category,
                exploration=exploration,
                k_jaccard_mean=float(np.mean([s.k_jaccard for s in scores])),
                phrase_overlap_mean=float(np.mean([s.phrase_sim for s in scores])),
                per_sample=scores,
            )
        )
    return reports


def write_report_tsv(path: str | Path, reports: list[SimilarityReport]) -> None:
    lines = ["category\texploration\tsample_index\tk_jaccard\tphrase_overlap\tbest_match_index"]
    for report in reports:
        for s in report.per_sample:
            lines.append(
                f"{report.category}\t{report.exploration:g}\t{s.source_index}"
                f"\t{s.k_jaccard:.6f}\t{s.phrase_sim:.6f}\t{s.best_match_index}"
            )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


_SENTENCE_RE = re.compile(r"[^.!?]*[.!?]+|[^.!?]+")


def parser_prep(texts: list[str]) -> list[str]:
    """Split texts into sentences and restore the capitalization an external
    grammar parser expects: sentence-initial letters and the pronoun i."""
    out = []
    for text in texts:
        for piece in _SENTENCE_RE.findall(text):
            sentence = piece.strip()
            if not sentence:
                continue
            sentence = re.sub(r"\bi\b", "I", sentence)
            for pos, ch in enumerate(sentence):
                if ch.isalpha():
                    sentence = sentence[:pos] + ch.upper() + sentence[pos + 1 :]
                    break
            out.append(sentence)
    return out
