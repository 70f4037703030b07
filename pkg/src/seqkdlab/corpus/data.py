"""Corpus data model: parallel text, feature sequences, triplet datasets.

All types are immutable after construction; dataset builders return new
objects. Sentences are stored as token-string lists (ids are a model-side
concern looked up through a Vocabulary at batch time).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigError

VARIANT_REAL = "real"
VARIANT_FWD = "fwd"
VARIANT_BWD = "bwd"
VARIANT_BIDIR = "bidir"
VARIANT_COMBINED = "combined"

VARIANTS = (VARIANT_REAL, VARIANT_FWD, VARIANT_BWD, VARIANT_BIDIR, VARIANT_COMBINED)


@dataclass(frozen=True)
class ParallelCorpus:
    """Sentence-aligned bitext; both sides nonempty for every pair."""

    pairs: tuple
    src_lang: str = "src"
    tgt_lang: str = "tgt"

    def __post_init__(self):
        for i, (s, t) in enumerate(self.pairs):
            if not s or not t:
                raise ConfigError(f"pair {i} has an empty side")

    def __len__(self) -> int:
        return len(self.pairs)

    def swapped(self) -> "ParallelCorpus":
        return ParallelCorpus(
            pairs=tuple((t, s) for s, t in self.pairs),
            src_lang=self.tgt_lang,
            tgt_lang=self.src_lang,
        )


@dataclass(frozen=True)
class FeatureSeq:
    """Real-valued frame matrix [num_frames x feat_dim], all finite."""

    frames: np.ndarray

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float32)
        if frames.ndim != 2 or frames.shape[0] < 1:
            raise ConfigError(f"feature matrix must be [T>=1, D], got {frames.shape}")
        if not np.all(np.isfinite(frames)):
            raise ConfigError("non-finite values in feature matrix")
        object.__setattr__(self, "frames", frames)

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def feat_dim(self) -> int:
        return self.frames.shape[1]

    def __eq__(self, other) -> bool:
        return isinstance(other, FeatureSeq) and np.array_equal(self.frames, other.frames)


@dataclass(frozen=True)
class StItem:
    """One (speech, transcription, translation) triplet.

    ``origin`` names the parent dataset variant the text sides came from;
    ``degenerate`` flags items whose generated text collapsed to EOS only.
    """

    utt_id: str
    speech: FeatureSeq
    src_text: tuple[str, ...]
    tgt_text: tuple[str, ...]
    origin: str = VARIANT_REAL
    degenerate: bool = False

    def __post_init__(self):
        if not self.src_text or not self.tgt_text:
            raise ConfigError(f"{self.utt_id}: empty text side")
        object.__setattr__(self, "src_text", tuple(self.src_text))
        object.__setattr__(self, "tgt_text", tuple(self.tgt_text))


@dataclass(frozen=True)
class StDataset:
    """Speech-translation triplet dataset with a provenance variant tag."""

    items: tuple
    variant: str = VARIANT_REAL
    parents: tuple[str, ...] = ()
    src_lang: str = "src"
    tgt_lang: str = "tgt"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.variant == VARIANT_COMBINED and len(self.parents) < 2:
            raise ConfigError("combined dataset needs >=2 parent variants")

    def __len__(self) -> int:
        return len(self.items)

    def utt_ids(self) -> tuple[str, ...]:
        return tuple(it.utt_id for it in self.items)

    def text_pairs(self) -> ParallelCorpus:
        """Project to the (src_text, tgt_text) bitext (the MT view)."""
        return ParallelCorpus(
            pairs=tuple((it.src_text, it.tgt_text) for it in self.items),
            src_lang=self.src_lang,
            tgt_lang=self.tgt_lang,
        )

    def subset(self, indices) -> "StDataset":
        return replace(self, items=tuple(self.items[i] for i in indices))
