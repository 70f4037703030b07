"""Shared fixtures: small trained models reused across test modules."""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from seqkdlab.corpus import (
    DEFAULT_SPECIALS,
    SpeechSynthesizer,
    ToyGenConfig,
    build_st_dataset,
    build_vocab,
    synth_toy_bitext,
)
from seqkdlab.model import TrainConfig, TransformerConfig, train_mt

LANG_TAGS = ("<src>", "<tgt>")


def toy_world(gen_cfg: ToyGenConfig, feat_dim: int = 8):
    """Corpus + joint vocabulary + pseudo-speech dataset for one config."""
    corpus = synth_toy_bitext(gen_cfg)
    vocab = build_vocab(
        [list(s) + list(t) for s, t in corpus.pairs],
        DEFAULT_SPECIALS,
        LANG_TAGS,
        partitions={
            "<src>": {tok for s, _ in corpus.pairs for tok in s},
            "<tgt>": {tok for _, t in corpus.pairs for tok in t},
        },
    )
    synth = SpeechSynthesizer.for_tokens(
        [tok for s, _ in corpus.pairs for tok in s], feat_dim=feat_dim, seed=gen_cfg.seed
    )
    dataset = build_st_dataset(corpus, synth, seed=gen_cfg.seed)
    return corpus, vocab, dataset


TEXT_CFG = TransformerConfig(input_mode="text", d_model=64, d_ff=256, num_heads=4)
MT_TRAIN = TrainConfig(epochs=35, batch_size=32, lr_factor=0.25, warmup_steps=80,
                       seed=0, validate=False)


@pytest.fixture(scope="session")
def det_world():
    """Deterministic relabeling task (k=1, no reorder)."""
    return toy_world(ToyGenConfig(src_vocab_size=10, k=1, reorder_p=0.0,
                                  corpus_size=200, seed=3, sent_len_range=(3, 7)))


@pytest.fixture(scope="session")
def det_mt_fwd(det_world):
    corpus, vocab, _ = det_world
    model, log = train_mt(corpus, "forward", vocab, TEXT_CFG, MT_TRAIN)
    return model, log


@pytest.fixture(scope="session")
def mm_world():
    """Multi-modal task (k=2) for distillation structure tests."""
    return toy_world(ToyGenConfig(src_vocab_size=10, k=2, tgt_vocab_size=10,
                                  reorder_p=0.0, corpus_size=240, seed=5,
                                  sent_len_range=(3, 6)))


@pytest.fixture(scope="session")
def mm_mt_models(mm_world):
    corpus, vocab, _ = mm_world
    fwd, _ = train_mt(corpus, "forward", vocab, TEXT_CFG, MT_TRAIN)
    bwd, _ = train_mt(corpus, "backward", vocab, TEXT_CFG, MT_TRAIN)
    return fwd, bwd
