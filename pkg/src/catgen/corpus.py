"""Corpus pipeline: cleaning, tokenization, vocabulary, windowed training examples.

Raw inputs are plain UTF-8 text files with one sentence per line. The pipeline
lowercases and strips URLs/control characters, splits words and punctuation
into tokens (apostrophized forms like "what's" stay whole), de-duplicates
within each category, caps the vocabulary by frequency, and frames every
sentence with sentence-start/end markers.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

PAD, UNK, SOS, EOS = "<pad>", "<unk>", "<sos>", "<eos>"
PAD_ID, UNK_ID, SOS_ID, EOS_ID = 0, 1, 2, 3
SPECIAL_TOKENS = (PAD, UNK, SOS, EOS)

_URL_RE = re.compile(r"(?:https?://|www\.)\S+")
_CTRL_RE = re.compile(r"[\x00-\x1f\x7f]")
_WS_RE = re.compile(r"\s+")
# words (with internal apostrophes) or single punctuation marks
_TOKEN_RE = re.compile(r"\w+(?:'\w+)*|[^\w\s]")


def clean_text(raw: str) -> str:
    """Lowercase, drop URLs and control characters, collapse whitespace."""
    text = raw.replace("’", "'").replace("‘", "'")
    text = text.replace("“", '"').replace("”", '"')
    text = text.lower()
    text = _URL_RE.sub(" ", text)
    text = _CTRL_RE.sub(" ", text)
    return _WS_RE.sub(" ", text).strip()


def tokenize(text: str) -> list[str]:
    """Split cleaned text into word and punctuation tokens.

    Hyphens and other punctuation become standalone tokens; apostrophized
    contractions ("what's", "can't") remain single tokens.
    """
    return _TOKEN_RE.findall(text)


def deduplicate(sentences: list[list[str]]) -> list[list[str]]:
    """Remove exact duplicates, keeping the first occurrence in order."""
    seen: set[tuple[str, ...]] = set()
    out = []
    for sent in sentences:
        key = tuple(sent)
        if key not in seen:
            seen.add(key)
            out.append(sent)
    return out


@dataclass
class Vocabulary:
    """Bijective token<->id map with reserved ids 0..3 for the specials."""

    id_to_token: list[str]
    token_to_id: dict[str, int]
    max_size: int

    def __len__(self) -> int:
        return len(self.id_to_token)

    def encode_token(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def decode_id(self, token_id: int) -> str:
        return self.id_to_token[token_id]

    def decode(self, ids) -> list[str]:
        return [self.id_to_token[i] for i in ids]

    def save(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.id_to_token) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        tokens = Path(path).read_text(encoding="utf-8").splitlines()
        if tuple(tokens[:4]) != SPECIAL_TOKENS:
            raise ValueError(f"vocabulary file {path} lacks the reserved special tokens")
        return cls(
            id_to_token=tokens,
            token_to_id={t: i for i, t in enumerate(tokens)},
            max_size=len(tokens),
        )


def build_vocabulary(sentences: list[list[str]], max_size: int) -> Vocabulary:
    """Cap the vocabulary at `max_size`, keeping the most frequent tokens.

    Ties are broken by order of first appearance so the result is
    deterministic for a fixed input order.
    """
    if max_size <= 4:
        raise ValueError(f"max_size must exceed 4 to fit the special tokens, got {max_size}")
    counts: Counter[str] = Counter()
    first_seen: dict[str, int] = {}
    for sent in sentences:
        for tok in sent:
            counts[tok] += 1
            if tok not in first_seen:
                first_seen[tok] = len(first_seen)
    # tokens spelled like a reserved literal would break the bijection
    candidates = [t for t in first_seen if t not in SPECIAL_TOKENS]
    candidates.sort(key=lambda t: (-counts[t], first_seen[t]))
    kept = candidates[: max_size - 4]
    id_to_token = list(SPECIAL_TOKENS) + kept
    return Vocabulary(
        id_to_token=id_to_token,
        token_to_id={t: i for i, t in enumerate(id_to_token)},
        max_size=max_size,
    )


@dataclass
class SentenceRecord:
    """One encoded sentence: category tag plus sos-framed token ids."""

    category: int
    tokens: list[int]

    def __post_init__(self):
        if len(self.tokens) < 3:
            raise ValueError("a sentence record needs sos, eos and at least one token")
        if self.tokens[0] != SOS_ID or self.tokens[-1] != EOS_ID:
            raise ValueError("sentence records must be framed by sos/eos ids")
        if any(t in (SOS_ID, EOS_ID) for t in self.tokens[1:-1]):
            raise ValueError("interior sos/eos ids are not allowed")
        if self.category < 0:
            raise ValueError("category ids are non-negative")


def encode_sentence(tokens: list[str], vocab: Vocabulary, category: int) -> SentenceRecord:
    """Map token strings to ids (unknowns to unk) and frame with sos/eos."""
    ids = [SOS_ID] + [vocab.encode_token(t) for t in tokens] + [EOS_ID]
    return SentenceRecord(category=category, tokens=ids)


def reverse_record(record: SentenceRecord) -> SentenceRecord:
    """Reverse the interior tokens, keeping the sos/eos frame in place."""
    interior = record.tokens[1:-1]
    return SentenceRecord(category=record.category, tokens=[SOS_ID] + interior[::-1] + [EOS_ID])


@dataclass
class TrainingExample:
    """A fixed-length next-token window; masked positions carry no loss."""

    category: int
    input_ids: list[int]
    target_ids: list[int]
    mask: list[bool]


def window_examples(record: SentenceRecord, length: int) -> list[TrainingExample]:
    """Cut a record into stride-`length` windows with tail padding.

    Every source position appears exactly once as an unmasked target.
    """
    if length < 1:
        raise ValueError("window length must be at least 1")
    toks = record.tokens
    n = len(toks)
    examples = []
    for start in range(0, n - 1, length):
        inp = toks[start : start + length]
        tgt = toks[start + 1 : start + length + 1]
        mask = [True] * len(tgt)
        inp += [PAD_ID] * (length - len(inp))
        mask += [False] * (length - len(tgt))
        tgt += [PAD_ID] * (length - len(tgt))
        examples.append(TrainingExample(record.category, inp, tgt, mask))
    return examples


@dataclass
class Corpus:
    """Encoded sentence records plus provenance metadata."""

    records: list[SentenceRecord]
    num_categories: int
    meta: dict[str, str] = field(default_factory=dict)

    def category_counts(self) -> list[int]:
        counts = [0] * self.num_categories
        for rec in self.records:
            counts[rec.category] += 1
        return counts


def _read_sentences(path: str | Path) -> list[list[str]]:
    sents = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        toks = tokenize(clean_text(line))
        if toks:
            sents.append(toks)
    return sents


def build_corpus(
    inputs: list[tuple[str | Path, int]],
    max_vocab: int,
    reverse_augment: bool = False,
) -> tuple[Corpus, Vocabulary]:
    """Run the full preparation pipeline over raw `(file, category)` inputs.

    With `reverse_augment`, the inputs must all carry category 0; the corpus
    gains a word-reversed copy of every sentence under category 1.
    """
    by_category: dict[int, list[list[str]]] = {}
    sources: dict[int, list[str]] = {}
    for path, cat in inputs:
        if cat < 0:
            raise ValueError(f"negative category id {cat}")
        by_category.setdefault(cat, []).extend(_read_sentences(path))
        sources.setdefault(cat, []).append(str(path))
    if reverse_augment and set(by_category) != {0}:
        raise ValueError("--reverse-augment expects all inputs under category 0")
    categories = sorted(by_category)
    if categories != list(range(len(categories))):
        raise ValueError(f"category ids must be contiguous from 0, got {categories}")

    per_cat = {cat: deduplicate(sents) for cat, sents in by_category.items()}
    num_categories = len(per_cat) * (2 if reverse_augment else 1)

    all_sentences = [s for cat in sorted(per_cat) for s in per_cat[cat]]
    if reverse_augment:
        all_sentences = all_sentences + [s[::-1] for s in all_sentences]
    vocab = build_vocabulary(all_sentences, max_vocab)

    records = []
    for cat in sorted(per_cat):
        for sent in per_cat[cat]:
            records.append(encode_sentence(sent, vocab, cat))
    if reverse_augment:
        reversed_copies = [
            SentenceRecord(category=1, tokens=reverse_record(r).tokens) for r in records
        ]
        records.extend(reversed_copies)

    meta = {f"source.{cat}": ";".join(paths) for cat, paths in sorted(sources.items())}
    corpus = Corpus(records=records, num_categories=num_categories, meta=meta)
    return corpus, vocab


def save_dataset(out_dir: str | Path, corpus: Corpus, vocab: Vocabulary) -> dict[str, Path]:
    """Write dataset.tsv, dataset.manifest and vocab.txt under `out_dir`."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset = out / "dataset.tsv"
    lines = []
    for rec in corpus.records:
        words = " ".join(vocab.decode(rec.tokens[1:-1]))
        lines.append(f"{rec.category}\t{words}")
    dataset.write_text("\n".join(lines) + "\n", encoding="utf-8")

    vocab_path = out / "vocab.txt"
    vocab.save(vocab_path)

    counts = corpus.category_counts()
    manifest = out / "dataset.manifest"
    entries = [
        f"num_categories={corpus.num_categories}",
        f"vocab_size={len(vocab)}",
        f"sentences.total={len(corpus.records)}",
    ]
    entries += [f"sentences.{k}={c}" for k, c in enumerate(counts)]
    entries += [f"{k}={v}" for k, v in sorted(corpus.meta.items())]
    manifest.write_text("\n".join(entries) + "\n", encoding="utf-8")
    return {"dataset": dataset, "manifest": manifest, "vocab": vocab_path}


def load_dataset(data_dir: str | Path) -> tuple[Corpus, Vocabulary]:
    """Load a prepared dataset directory back into records and vocabulary."""
    data = Path(data_dir)
    vocab = Vocabulary.load(data / "vocab.txt")
    manifest = parse_kv_file(data / "dataset.manifest")
    num_categories = int(manifest["num_categories"])
    records = []
    for line in (data / "dataset.tsv").read_text(encoding="utf-8").splitlines():
        cat_str, _, words = line.partition("\t")
        cat = int(cat_str)
        if cat >= num_categories:
            raise ValueError(f"category {cat} exceeds num_categories={num_categories}")
        records.append(encode_sentence(words.split(" "), vocab, cat))
    meta = {k: v for k, v in manifest.items() if k.startswith("source.")}
    return Corpus(records=records, num_categories=num_categories, meta=meta), vocab


def parse_kv_file(path: str | Path) -> dict[str, str]:
    """Parse a flat key=value text file; '#' starts a comment line."""
    out: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"malformed line in {path}: {raw!r}")
        out[key.strip()] = value.strip()
    return out
