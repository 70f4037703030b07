"""Synthetic bitext with controllable translation multi-modality, plus
pseudo-speech feature synthesis.

Each source token type is assigned k target synonyms drawn from a shared
target vocabulary; at generation time one synonym is chosen i.i.d. per
occurrence, so the forward conditional p(tgt|src) is k-way uniform. The
target vocabulary is smaller than src_vocab_size * k, so synonym sets
collide across source types and the backward conditional p(src|tgt) is
ambiguous as well - both language directions carry nonzero conditional
entropy for the analysis stage to reduce.

Pseudo-speech stands in for acoustic features: every token has a fixed
random embedding, repeated for a random 1-3 frames with optional Gaussian
noise, so the input is a longer continuous sequence than the text and the
encoder has real downsampling work to do.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, UnknownToken
from .data import FeatureSeq, ParallelCorpus, StDataset, StItem


@dataclass(frozen=True)
class ToyGenConfig:
    src_vocab_size: int = 30
    tgt_vocab_size: int | None = None  # default: half the (type, synonym) slot count
    sent_len_range: tuple[int, int] = (3, 8)
    k: int = 3                         # synonym fan-out per ambiguous source type
    ambiguous_frac: float = 1.0        # fraction of source types with k synonyms
    reorder_p: float = 0.1             # adjacent-swap probability on the target side
    corpus_size: int = 2000
    seed: int = 0
    case_markers: bool = False         # sentence-initial marker kept out of ASR text

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("synonym fan-out k must be >= 1")
        if not 0.0 <= self.ambiguous_frac <= 1.0:
            raise ConfigError("ambiguous fraction must be in [0, 1]")
        if not 0.0 <= self.reorder_p <= 1.0:
            raise ConfigError("reorder probability must be in [0, 1]")
        if self.corpus_size < 1:
            raise ConfigError("corpus size must be >= 1")
        if self.src_vocab_size < 1:
            raise ConfigError("source vocabulary must be nonempty")
        lo, hi = self.sent_len_range
        if lo < 1 or hi < lo:
            raise ConfigError(f"bad sentence length range {self.sent_len_range}")
        if self.tgt_vocab_size is not None and self.tgt_vocab_size < self.k:
            raise ConfigError("target vocabulary smaller than synonym fan-out")

    @property
    def num_ambiguous(self) -> int:
        return round(self.src_vocab_size * self.ambiguous_frac)

    @property
    def effective_tgt_vocab_size(self) -> int:
        if self.tgt_vocab_size is not None:
            return self.tgt_vocab_size
        slots = self.num_ambiguous * self.k + (self.src_vocab_size - self.num_ambiguous)
        return max(self.k, round(slots / 2))


CASE_MARKER = "cap"


def src_token(i: int) -> str:
    return f"s{i:02d}"


def tgt_token(i: int) -> str:
    return f"t{i:02d}"


def synonym_table(cfg: ToyGenConfig) -> dict[str, tuple[str, ...]]:
    """Source type -> its target synonyms (deterministic under cfg.seed).

    The first num_ambiguous types get k distinct synonyms each, the rest one;
    synonym sets are drawn from a shared target vocabulary so they collide
    across source types and the reverse direction is ambiguous too.
    """
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xA11E]))
    m = cfg.effective_tgt_vocab_size
    table = {}
    for i in range(cfg.src_vocab_size):
        fan_out = cfg.k if i < cfg.num_ambiguous else 1
        chosen = rng.choice(m, size=fan_out, replace=False)
        table[src_token(i)] = tuple(tgt_token(int(j)) for j in chosen)
    return table


def synth_toy_bitext(cfg: ToyGenConfig) -> ParallelCorpus:
    """Generate the gold bitext; pure function of (cfg, cfg.seed)."""
    table = synonym_table(cfg)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xB17E]))
    lo, hi = cfg.sent_len_range
    pairs = []
    for _ in range(cfg.corpus_size):
        n = int(rng.integers(lo, hi + 1))
        src = [src_token(int(i)) for i in rng.integers(0, cfg.src_vocab_size, size=n)]
        tgt = [table[s][int(rng.integers(0, len(table[s])))] for s in src]
        # left-to-right sweep; a swap consumes both positions
        j = 0
        while j < len(tgt) - 1:
            if rng.random() < cfg.reorder_p:
                tgt[j], tgt[j + 1] = tgt[j + 1], tgt[j]
                j += 2
            else:
                j += 1
        if cfg.case_markers:
            src = [CASE_MARKER] + src
        pairs.append((tuple(src), tuple(tgt)))
    return ParallelCorpus(pairs=tuple(pairs))


def strip_markers(tokens) -> tuple[str, ...]:
    """Drop marker tokens (the ASR-side view of transcriptions)."""
    kept = tuple(t for t in tokens if t != CASE_MARKER)
    return kept if kept else tuple(tokens)


@dataclass(frozen=True)
class SpeechSynthesizer:
    """Fixed per-token random embedding table for pseudo-speech synthesis."""

    embed_table: dict
    feat_dim: int = 16
    repeat_range: tuple[int, int] = (1, 3)
    noise_sigma: float = 0.05

    @classmethod
    def for_tokens(
        cls,
        tokens,
        feat_dim: int = 16,
        repeat_range: tuple[int, int] = (1, 3),
        noise_sigma: float = 0.05,
        seed: int = 0,
    ) -> "SpeechSynthesizer":
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5BEE]))
        table = {}
        for tok in sorted(set(tokens)):
            table[tok] = rng.normal(size=feat_dim).astype(np.float32)
        return cls(table, feat_dim, repeat_range, noise_sigma)


def synth_pseudo_speech(
    src_text,
    synth: SpeechSynthesizer,
    seed: int,
) -> FeatureSeq:
    """Frames = per-token embedding repeated r~U[repeat_range] times + noise."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xF4A3]))
    lo, hi = synth.repeat_range
    rows = []
    for tok in src_text:
        emb = synth.embed_table.get(tok)
        if emb is None:
            raise UnknownToken(f"no speech embedding for token {tok!r}")
        r = int(rng.integers(lo, hi + 1))
        block = np.tile(emb, (r, 1))
        if synth.noise_sigma > 0:
            block = block + rng.normal(scale=synth.noise_sigma, size=block.shape)
        rows.append(block)
    return FeatureSeq(np.concatenate(rows, axis=0).astype(np.float32))


def build_st_dataset(
    corpus: ParallelCorpus,
    synth: SpeechSynthesizer,
    seed: int,
    id_prefix: str = "utt",
) -> StDataset:
    """Attach pseudo-speech to gold bitext, one utterance per pair.

    Speech is synthesized from the marker-stripped transcription so the
    acoustic side is unaffected by the case-marker analog.
    """
    items = []
    for i, (src, tgt) in enumerate(corpus.pairs):
        utt_id = f"{id_prefix}{i:06d}"
        speech = synth_pseudo_speech(strip_markers(src), synth, seed=seed + i)
        items.append(StItem(utt_id=utt_id, speech=speech, src_text=src, tgt_text=tgt))
    return StDataset(
        items=tuple(items),
        variant="real",
        src_lang=corpus.src_lang,
        tgt_lang=corpus.tgt_lang,
    )
