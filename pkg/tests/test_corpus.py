"""Tokenization, vocabulary, toy generation and dataset I/O contracts."""
from __future__ import annotations

import math
from collections import Counter, defaultdict

import numpy as np
import pytest
from hypothesis import given, strategies as st

from seqkdlab.corpus import (
    DEFAULT_SPECIALS,
    FeatureSeq,
    ParallelCorpus,
    SpeechSynthesizer,
    StDataset,
    StItem,
    ToyGenConfig,
    Vocabulary,
    build_st_dataset,
    build_vocab,
    detokenize,
    load_features,
    load_parallel_tsv,
    load_st_jsonl,
    save_features,
    save_parallel_tsv,
    save_st_jsonl,
    synonym_table,
    synth_pseudo_speech,
    synth_toy_bitext,
    tokenize,
)
from seqkdlab.errors import ConfigError, EmptyInput, ParseError, UnknownToken


class TestTokenize:
    def test_whitespace_split(self):
        assert tokenize("a b c", "whitespace") == ["a", "b", "c"]

    def test_char_split(self):
        assert tokenize("ab", "char") == ["a", "b"]

    def test_messy_whitespace_round_trips_to_normalized(self):
        tokens = tokenize("  a  b ", "whitespace")
        assert tokens == ["a", "b"]
        assert detokenize(tokens, "whitespace") == "a b"

    def test_empty_after_normalization(self):
        with pytest.raises(EmptyInput):
            tokenize("   ", "whitespace")

    @given(st.text(alphabet="abc ", min_size=0, max_size=30))
    def test_whitespace_round_trip_property(self, text):
        try:
            tokens = tokenize(text, "whitespace")
        except EmptyInput:
            assert text.split() == []
            return
        assert detokenize(tokens) == " ".join(text.split())
        assert tokenize(detokenize(tokens)) == tokens


class TestBuildVocab:
    def test_size_counts_specials_tags_and_tokens(self):
        vocab = build_vocab(["a b"], DEFAULT_SPECIALS, ("<src>", "<tgt>"))
        assert len(vocab) == 10

    def test_empty_corpus_rejected(self):
        with pytest.raises(ConfigError):
            build_vocab([], DEFAULT_SPECIALS)

    def test_repeated_token_gets_one_id(self):
        vocab = build_vocab(["a a a"], DEFAULT_SPECIALS)
        assert len(vocab) == len(DEFAULT_SPECIALS) + 1

    def test_duplicate_specials_rejected(self):
        with pytest.raises(ConfigError):
            build_vocab(["a"], specials=("<pad>", "<pad>", "<bos>", "<eos>", "<unk>", "<mask>", "<len>"))

    def test_specials_and_tags_take_lowest_ids_in_order(self):
        vocab = build_vocab(["z a"], DEFAULT_SPECIALS, ("<src>", "<tgt>"))
        for i, sp in enumerate(DEFAULT_SPECIALS):
            assert vocab.token_to_id[sp] == i
        assert vocab.token_to_id["<src>"] == 6
        assert vocab.token_to_id["<tgt>"] == 7
        # bijective and dense
        assert sorted(vocab.token_to_id.values()) == list(range(len(vocab)))


class TestToyBitext:
    def test_k1_p0_is_deterministic_relabeling(self):
        cfg = ToyGenConfig(src_vocab_size=10, k=1, reorder_p=0.0, corpus_size=50, seed=3)
        corpus = synth_toy_bitext(cfg)
        table = synonym_table(cfg)
        for src, tgt in corpus.pairs:
            assert tuple(table[s][0] for s in src) == tgt

    def test_same_config_same_seed_identical(self):
        cfg = ToyGenConfig(corpus_size=40, seed=11)
        a = synth_toy_bitext(cfg)
        b = synth_toy_bitext(cfg)
        assert a.pairs == b.pairs

    def test_k2_empirical_synonym_frequencies_near_half(self):
        # count-frequency oracle over a large generated corpus
        cfg = ToyGenConfig(src_vocab_size=6, k=2, reorder_p=0.0, corpus_size=3000, seed=5)
        corpus = synth_toy_bitext(cfg)
        table = synonym_table(cfg)
        counts = defaultdict(Counter)
        for src, tgt in corpus.pairs:
            for s, t in zip(src, tgt):
                counts[s][t] += 1
        for s, options in table.items():
            total = sum(counts[s].values())
            assert total > 300
            for t in options:
                assert abs(counts[s][t] / total - 0.5) < 0.06

    def test_reorder_probability_zero_keeps_order(self):
        cfg = ToyGenConfig(src_vocab_size=8, k=1, reorder_p=0.0, corpus_size=30, seed=9)
        table = synonym_table(cfg)
        for src, tgt in synth_toy_bitext(cfg).pairs:
            assert tgt == tuple(table[s][0] for s in src)

    def test_invalid_configs_rejected(self):
        with pytest.raises(ConfigError):
            ToyGenConfig(k=0)
        with pytest.raises(ConfigError):
            ToyGenConfig(reorder_p=1.5)
        with pytest.raises(ConfigError):
            ToyGenConfig(corpus_size=0)


class TestPseudoSpeech:
    def synth(self, sigma=0.0, repeat=(2, 2)):
        return SpeechSynthesizer.for_tokens(
            ["a", "b", "c"], feat_dim=8, repeat_range=repeat, noise_sigma=sigma, seed=1
        )

    def test_fixed_repeat_no_noise_gives_tiled_embeddings(self):
        synth = self.synth()
        feats = synth_pseudo_speech(("a", "b", "c"), synth, seed=0)
        assert feats.num_frames == 6
        assert np.array_equal(feats.frames[0], feats.frames[1])
        assert np.array_equal(feats.frames[0], synth.embed_table["a"])

    def test_repeat_one_no_noise_is_embedding_rows(self):
        synth = self.synth(repeat=(1, 1))
        feats = synth_pseudo_speech(("b", "a"), synth, seed=0)
        assert np.array_equal(feats.frames[0], synth.embed_table["b"])
        assert np.array_equal(feats.frames[1], synth.embed_table["a"])

    def test_noisy_frames_average_to_embedding(self):
        # Monte-Carlo: mean over n repeats within 3*sigma/sqrt(n) of the embedding
        sigma, n = 0.1, 400
        synth = self.synth(sigma=sigma, repeat=(n, n))
        feats = synth_pseudo_speech(("a",), synth, seed=7)
        mean = feats.frames.mean(axis=0)
        tol = 3.0 * sigma / math.sqrt(n)
        assert np.all(np.abs(mean - synth.embed_table["a"]) < tol)

    def test_unknown_token_raises(self):
        with pytest.raises(UnknownToken):
            synth_pseudo_speech(("zz",), self.synth(), seed=0)

    def test_deterministic_under_seed(self):
        synth = self.synth(sigma=0.2, repeat=(1, 3))
        a = synth_pseudo_speech(("a", "b"), synth, seed=4)
        b = synth_pseudo_speech(("a", "b"), synth, seed=4)
        assert a == b


def tiny_dataset() -> StDataset:
    cfg = ToyGenConfig(src_vocab_size=6, k=2, corpus_size=5, seed=2, sent_len_range=(2, 4))
    corpus = synth_toy_bitext(cfg)
    synth = SpeechSynthesizer.for_tokens(
        [t for src, _ in corpus.pairs for t in src], feat_dim=6, seed=2
    )
    return build_st_dataset(corpus, synth, seed=2)


class TestCorpusIo:
    def test_parallel_tsv_round_trip(self, tmp_path):
        corpus = ParallelCorpus(pairs=((("a", "b"), ("x",)), (("c",), ("y", "z"))))
        p = tmp_path / "mt.tsv"
        save_parallel_tsv(corpus, p)
        assert load_parallel_tsv(p).pairs == corpus.pairs

    def test_tsv_wrong_column_count_reports_line(self, tmp_path):
        p = tmp_path / "bad.tsv"
        p.write_text("a b\tx y\nonly one column\n", encoding="utf-8")
        with pytest.raises(ParseError) as err:
            load_parallel_tsv(p)
        assert err.value.line == 2

    def test_st_jsonl_round_trip_is_identity(self, tmp_path):
        ds = tiny_dataset()
        save_st_jsonl(ds, tmp_path / "d.jsonl", tmp_path / "d.feats")
        back = load_st_jsonl(tmp_path / "d.jsonl", tmp_path / "d.feats")
        assert back.variant == ds.variant
        assert back.src_lang == ds.src_lang
        assert len(back) == len(ds)
        for a, b in zip(ds.items, back.items):
            assert a.utt_id == b.utt_id
            assert a.src_text == b.src_text
            assert a.tgt_text == b.tgt_text
            assert a.origin == b.origin
            assert a.speech == b.speech

    def test_jsonl_item_count(self, tmp_path):
        ds = tiny_dataset()
        two = StDataset(items=ds.items[:2], variant=ds.variant)
        save_st_jsonl(two, tmp_path / "two.jsonl", tmp_path / "two.feats")
        assert len(load_st_jsonl(tmp_path / "two.jsonl", tmp_path / "two.feats")) == 2

    def test_jsonl_malformed_line_reports_number(self, tmp_path):
        ds = tiny_dataset()
        save_st_jsonl(ds, tmp_path / "d.jsonl", tmp_path / "d.feats")
        lines = (tmp_path / "d.jsonl").read_text().splitlines()
        lines[3] = "{not json"
        (tmp_path / "d.jsonl").write_text("\n".join(lines) + "\n")
        with pytest.raises(ParseError) as err:
            load_st_jsonl(tmp_path / "d.jsonl", tmp_path / "d.feats")
        assert err.value.line == 4

    def test_features_file_round_trip(self, tmp_path):
        ds = tiny_dataset()
        save_features(ds, tmp_path / "f.bin")
        feats = load_features(tmp_path / "f.bin")
        for item in ds.items:
            assert feats[item.utt_id] == item.speech

    def test_st_tsv_round_trip(self, tmp_path):
        from seqkdlab.corpus import load_st_tsv, save_st_tsv

        ds = tiny_dataset()
        save_st_tsv(ds, tmp_path / "d.tsv")
        save_features(ds, tmp_path / "d.feats")
        back = load_st_tsv(tmp_path / "d.tsv", tmp_path / "d.feats")
        for a, b in zip(ds.items, back.items):
            assert (a.utt_id, a.src_text, a.tgt_text) == (b.utt_id, b.src_text, b.tgt_text)
            assert a.speech == b.speech

    def test_st_tsv_wrong_columns_reports_line(self, tmp_path):
        from seqkdlab.corpus import load_st_tsv

        ds = tiny_dataset()
        save_features(ds, tmp_path / "d.feats")
        (tmp_path / "bad.tsv").write_text("u0\ta b\n", encoding="utf-8")
        with pytest.raises(ParseError) as err:
            load_st_tsv(tmp_path / "bad.tsv", tmp_path / "d.feats")
        assert err.value.line == 1


class TestDataTypes:
    def test_feature_seq_rejects_empty_and_nonfinite(self):
        with pytest.raises(ConfigError):
            FeatureSeq(np.zeros((0, 4)))
        with pytest.raises(ConfigError):
            FeatureSeq(np.array([[np.inf, 0.0]]))

    def test_st_item_rejects_empty_text(self):
        feats = FeatureSeq(np.zeros((1, 2)))
        with pytest.raises(ConfigError):
            StItem(utt_id="u0", speech=feats, src_text=(), tgt_text=("x",))

    def test_combined_needs_parents(self):
        ds = tiny_dataset()
        with pytest.raises(ConfigError):
            StDataset(items=ds.items, variant="combined")
