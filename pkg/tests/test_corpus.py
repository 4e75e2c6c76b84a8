import numpy as np
import pytest

from catgen.corpus import (
    EOS_ID,
    PAD_ID,
    SOS_ID,
    UNK_ID,
    Corpus,
    SentenceRecord,
    Vocabulary,
    build_corpus,
    build_vocabulary,
    clean_text,
    deduplicate,
    encode_sentence,
    load_dataset,
    parse_kv_file,
    reverse_record,
    save_dataset,
    tokenize,
    window_examples,
)
from conftest import DATA_DIR


class TestCleanText:
    def test_case_and_whitespace(self):
        assert clean_text("Hello   WORLD") == "hello world"

    def test_empty(self):
        assert clean_text("") == ""

    def test_url_removed(self):
        assert clean_text("Check http://x.co NOW") == "check now"
        assert clean_text("see www.example.org/page for more") == "see for more"

    def test_control_chars(self):
        assert clean_text("a\x00b\tc\x1fd") == "a b c d"

    def test_curly_quotes_normalized(self):
        assert clean_text("it’s “fine”") == 'it\'s "fine"'


class TestTokenize:
    def test_contractions_stay_whole(self):
        text = "what's done can't be undone ? you heard it ."
        assert tokenize(text) == [
            "what's", "done", "can't", "be", "undone", "?", "you", "heard", "it", ".",
        ]

    def test_single_word(self):
        assert tokenize("a") == ["a"]

    def test_punctuation_split(self):
        assert tokenize("oh no!") == ["oh", "no", "!"]
        assert tokenize("well-known fact") == ["well", "-", "known", "fact"]


class TestDeduplicate:
    def test_exact_duplicate(self):
        assert deduplicate([["a", "b"], ["a", "b"], ["c"]]) == [["a", "b"], ["c"]]

    def test_empty(self):
        assert deduplicate([]) == []

    def test_first_occurrence_kept(self):
        assert deduplicate([["a"], ["a", "b"], ["a"]]) == [["a"], ["a", "b"]]

    def test_idempotent(self):
        rng = np.random.default_rng(0)
        sents = [[f"t{rng.integers(3)}" for _ in range(rng.integers(1, 4))] for _ in range(40)]
        once = deduplicate(sents)
        assert deduplicate(once) == once


class TestVocabulary:
    def test_frequency_cap(self):
        sents = [["a", "a", "b"], ["a", "b", "c"]]
        vocab = build_vocabulary(sents, 6)
        assert vocab.id_to_token == ["<pad>", "<unk>", "<sos>", "<eos>", "a", "b"]
        assert vocab.encode_token("c") == UNK_ID

    def test_empty_corpus(self):
        vocab = build_vocabulary([], 10)
        assert len(vocab) == 4

    def test_single_token(self):
        vocab = build_vocabulary([["x"]], 5)
        assert vocab.id_to_token == ["<pad>", "<unk>", "<sos>", "<eos>", "x"]

    def test_small_max_size_rejected(self):
        with pytest.raises(ValueError):
            build_vocabulary([["x"]], 4)

    def test_tie_break_first_appearance(self):
        vocab = build_vocabulary([["z", "y", "z", "y"]], 6)
        assert vocab.id_to_token[4:] == ["z", "y"]

    def test_deterministic(self):
        sents = [["q", "r", "s"], ["r", "q"]]
        assert build_vocabulary(sents, 7).id_to_token == build_vocabulary(sents, 7).id_to_token

    def test_bijection(self):
        vocab = build_vocabulary([["a", "b", "c"]], 10)
        for tok, idx in vocab.token_to_id.items():
            assert vocab.id_to_token[idx] == tok

    def test_save_load_roundtrip(self, tmp_path):
        vocab = build_vocabulary([["a", "b"]], 8)
        path = tmp_path / "vocab.txt"
        vocab.save(path)
        lines = path.read_text().splitlines()
        assert lines[:4] == ["<pad>", "<unk>", "<sos>", "<eos>"]
        loaded = Vocabulary.load(path)
        assert loaded.id_to_token == vocab.id_to_token

    def test_load_rejects_missing_specials(self, tmp_path):
        path = tmp_path / "vocab.txt"
        path.write_text("a\nb\nc\nd\n")
        with pytest.raises(ValueError):
            Vocabulary.load(path)


class TestEncodeSentence:
    def test_in_vocab(self):
        vocab = build_vocabulary([["hi"]], 5)
        rec = encode_sentence(["hi"], vocab, 0)
        assert rec.tokens == [SOS_ID, vocab.encode_token("hi"), EOS_ID]
        assert rec.category == 0

    def test_oov_maps_to_unk(self):
        vocab = build_vocabulary([["hi"]], 5)
        rec = encode_sentence(["zzz"], vocab, 1)
        assert rec.tokens == [SOS_ID, UNK_ID, EOS_ID]

    def test_multi_token(self):
        vocab = build_vocabulary([["a", "b", "?"]], 8)
        rec = encode_sentence(["a", "b", "?"], vocab, 2)
        inner = [vocab.encode_token(t) for t in ["a", "b", "?"]]
        assert rec.tokens == [SOS_ID] + inner + [EOS_ID]

    def test_roundtrip(self):
        vocab = build_vocabulary([["a", "b", "c", "d"]], 10)
        tokens = ["c", "a", "d", "b", "a"]
        rec = encode_sentence(tokens, vocab, 0)
        assert vocab.decode(rec.tokens[1:-1]) == tokens

    def test_record_validation(self):
        with pytest.raises(ValueError):
            SentenceRecord(category=0, tokens=[SOS_ID, EOS_ID])
        with pytest.raises(ValueError):
            SentenceRecord(category=0, tokens=[SOS_ID, 5, 6])
        with pytest.raises(ValueError):
            SentenceRecord(category=0, tokens=[SOS_ID, SOS_ID, 5, EOS_ID])
        with pytest.raises(ValueError):
            SentenceRecord(category=-1, tokens=[SOS_ID, 5, EOS_ID])


class TestWindowExamples:
    def test_short_record_padded(self):
        rec = SentenceRecord(category=0, tokens=[SOS_ID, 7, EOS_ID])
        (ex,) = window_examples(rec, 4)
        assert ex.input_ids == [SOS_ID, 7, EOS_ID, PAD_ID]
        assert ex.target_ids == [7, EOS_ID, PAD_ID, PAD_ID]
        assert ex.mask == [True, True, False, False]

    def test_exact_window(self):
        tokens = [SOS_ID] + list(range(4, 16)) + [EOS_ID]  # 14 tokens
        rec = SentenceRecord(category=1, tokens=tokens)
        (ex,) = window_examples(rec, 13)
        assert ex.input_ids == tokens[:13]
        assert ex.target_ids == tokens[1:14]
        assert all(ex.mask)

    def test_long_record_coverage(self):
        # every source position is an unmasked target exactly once
        tokens = [SOS_ID] + list(range(4, 34)) + [EOS_ID]
        rec = SentenceRecord(category=0, tokens=tokens)
        seen = []
        for ex in window_examples(rec, 7):
            seen.extend(t for t, m in zip(ex.target_ids, ex.mask) if m)
        assert seen == tokens[1:]

    def test_bad_length(self):
        rec = SentenceRecord(category=0, tokens=[SOS_ID, 5, EOS_ID])
        with pytest.raises(ValueError):
            window_examples(rec, 0)


class TestReverseRecord:
    def test_interior_reversed(self):
        rec = SentenceRecord(category=0, tokens=[SOS_ID, 4, 5, 6, EOS_ID])
        assert reverse_record(rec).tokens == [SOS_ID, 6, 5, 4, EOS_ID]

    def test_single_token(self):
        rec = SentenceRecord(category=1, tokens=[SOS_ID, 9, EOS_ID])
        assert reverse_record(rec).tokens == rec.tokens

    def test_involution(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            interior = [int(x) for x in rng.integers(4, 40, size=rng.integers(1, 10))]
            rec = SentenceRecord(category=0, tokens=[SOS_ID] + interior + [EOS_ID])
            assert reverse_record(reverse_record(rec)).tokens == rec.tokens


class TestDatasetIO:
    def test_build_corpus_two_categories(self):
        corpus, vocab = build_corpus(
            [(DATA_DIR / "jokes.txt", 0), (DATA_DIR / "quotes.txt", 1)], max_vocab=100
        )
        assert corpus.num_categories == 2
        counts = corpus.category_counts()
        assert counts[0] > 0 and counts[1] > 0
        assert all(r.tokens[0] == SOS_ID and r.tokens[-1] == EOS_ID for r in corpus.records)

    def test_build_corpus_deduplicates(self, tmp_path):
        raw = tmp_path / "raw.txt"
        raw.write_text("a b c\nA  b c\nd e\n")
        corpus, _ = build_corpus([(raw, 0)], max_vocab=50)
        assert len(corpus.records) == 2

    def test_reverse_augment(self, tmp_path):
        raw = tmp_path / "raw.txt"
        raw.write_text("a b c\nd e f\n")
        corpus, vocab = build_corpus([(raw, 0)], max_vocab=50, reverse_augment=True)
        assert corpus.num_categories == 2
        assert corpus.category_counts() == [2, 2]
        fwd = [r for r in corpus.records if r.category == 0]
        rev = [r for r in corpus.records if r.category == 1]
        for f, r in zip(fwd, rev):
            assert r.tokens[1:-1] == f.tokens[1:-1][::-1]

    def test_reverse_augment_requires_category_zero(self, tmp_path):
        raw = tmp_path / "raw.txt"
        raw.write_text("a b\n")
        with pytest.raises(ValueError):
            build_corpus([(raw, 1)], max_vocab=50, reverse_augment=True)

    def test_non_contiguous_categories_rejected(self, tmp_path):
        raw = tmp_path / "raw.txt"
        raw.write_text("a b\n")
        with pytest.raises(ValueError):
            build_corpus([(raw, 0), (raw, 2)], max_vocab=50)

    def test_save_load_roundtrip(self, tmp_path):
        corpus, vocab = build_corpus(
            [(DATA_DIR / "jokes.txt", 0), (DATA_DIR / "quotes.txt", 1)], max_vocab=60
        )
        out = tmp_path / "data"
        save_dataset(out, corpus, vocab)
        loaded, loaded_vocab = load_dataset(out)
        assert loaded.num_categories == corpus.num_categories
        assert loaded_vocab.id_to_token == vocab.id_to_token
        assert [r.tokens for r in loaded.records] == [r.tokens for r in corpus.records]
        assert [r.category for r in loaded.records] == [r.category for r in corpus.records]

    def test_save_is_deterministic(self, tmp_path):
        corpus, vocab = build_corpus([(DATA_DIR / "tweets.txt", 0)], max_vocab=80)
        save_dataset(tmp_path / "d1", corpus, vocab)
        save_dataset(tmp_path / "d2", corpus, vocab)
        for name in ("dataset.tsv", "dataset.manifest", "vocab.txt"):
            assert (tmp_path / "d1" / name).read_bytes() == (tmp_path / "d2" / name).read_bytes()

    def test_manifest_contents(self, tmp_path):
        corpus, vocab = build_corpus([(DATA_DIR / "jokes.txt", 0)], max_vocab=60)
        paths = save_dataset(tmp_path / "d", corpus, vocab)
        manifest = parse_kv_file(paths["manifest"])
        assert manifest["num_categories"] == "1"
        assert manifest["vocab_size"] == str(len(vocab))
        assert manifest["sentences.0"] == str(len(corpus.records))

    def test_parse_kv_file(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("# comment\nalpha = 1\nbeta=two\n\n")
        assert parse_kv_file(path) == {"alpha": "1", "beta": "two"}
        bad = tmp_path / "bad.cfg"
        bad.write_text("no equals sign\n")
        with pytest.raises(ValueError):
            parse_kv_file(bad)
