"""Tokenization and vocabulary handling.

Tokenization is whitespace or character level only; the toy vocabularies
are small and closed, so no subword segmentation is needed.
"""
from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field

from ..errors import ConfigError, EmptyInput

PAD = "<pad>"
BOS = "<bos>"
EOS = "<eos>"
UNK = "<unk>"
MASK = "<mask>"
LENGTH = "<len>"

DEFAULT_SPECIALS = (PAD, BOS, EOS, UNK, MASK, LENGTH)


def tokenize(text: str, scheme: str = "whitespace") -> list[str]:
    """Split normalized text into tokens; raises EmptyInput on nothing left."""
    norm = unicodedata.normalize("NFC", text)
    if scheme == "whitespace":
        tokens = norm.split()
    elif scheme == "char":
        tokens = list(norm)
    else:
        raise ConfigError(f"unknown tokenization scheme {scheme!r}")
    if not tokens:
        raise EmptyInput(f"text {text!r} is empty after normalization")
    return tokens


def detokenize(tokens: list[str], scheme: str = "whitespace") -> str:
    sep = " " if scheme == "whitespace" else ""
    return sep.join(tokens)


@dataclass(frozen=True)
class Vocabulary:
    """Dense bijective token<->id map with reserved specials and language tags.

    Specials and language tags occupy the lowest ids in declared order. A
    joint vocabulary records which language each regular token belongs to
    in ``partitions`` (language tag -> token set).
    """

    id_to_token: tuple[str, ...]
    specials: tuple[str, ...] = DEFAULT_SPECIALS
    lang_tags: tuple[str, ...] = ()
    partitions: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.specials)) != len(self.specials):
            raise ConfigError("duplicate special token names")
        if len(set(self.id_to_token)) != len(self.id_to_token):
            raise ConfigError("duplicate tokens in vocabulary")
        for sp in DEFAULT_SPECIALS:
            if sp not in self.specials:
                raise ConfigError(f"missing required special {sp}")
        object.__setattr__(
            self, "_token_to_id", {t: i for i, t in enumerate(self.id_to_token)}
        )

    @property
    def token_to_id(self) -> dict:
        return self._token_to_id

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self._token_to_id

    def id(self, token: str) -> int:
        tid = self._token_to_id.get(token)
        if tid is None:
            return self._token_to_id[UNK]
        return tid

    def encode(self, tokens: list[str]) -> list[int]:
        return [self.id(t) for t in tokens]

    def decode(self, ids) -> list[str]:
        return [self.id_to_token[int(i)] for i in ids]

    @property
    def pad_id(self) -> int:
        return self._token_to_id[PAD]

    @property
    def bos_id(self) -> int:
        return self._token_to_id[BOS]

    @property
    def eos_id(self) -> int:
        return self._token_to_id[EOS]

    @property
    def unk_id(self) -> int:
        return self._token_to_id[UNK]

    @property
    def mask_id(self) -> int:
        return self._token_to_id[MASK]

    def lang_tag_id(self, tag: str) -> int:
        if tag not in self.lang_tags:
            raise ConfigError(f"unknown language tag {tag!r}")
        return self._token_to_id[tag]

    def reserved_ids(self, allow_eos: bool = False) -> list[int]:
        """Ids generation must never emit (specials and language tags)."""
        skip = {EOS} if allow_eos else set()
        names = [t for t in self.specials if t not in skip] + list(self.lang_tags)
        return [self._token_to_id[t] for t in names]

    def lang_of(self, token: str) -> str | None:
        for tag, tokens in self.partitions.items():
            if token in tokens:
                return tag
        return None

    def to_dict(self) -> dict:
        return {
            "id_to_token": list(self.id_to_token),
            "specials": list(self.specials),
            "lang_tags": list(self.lang_tags),
            "partitions": {k: sorted(v) for k, v in self.partitions.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Vocabulary":
        return cls(
            id_to_token=tuple(d["id_to_token"]),
            specials=tuple(d["specials"]),
            lang_tags=tuple(d["lang_tags"]),
            partitions={k: set(v) for k, v in d["partitions"].items()},
        )


def build_vocab(
    corpus: list[list[str]] | list[str],
    specials: tuple[str, ...] = DEFAULT_SPECIALS,
    lang_tags: tuple[str, ...] = (),
    partitions: dict | None = None,
) -> Vocabulary:
    """Vocabulary over all corpus tokens, specials and tags first.

    Regular tokens are sorted for cross-run stability. Corpus entries may
    be pre-tokenized lists or whitespace-tokenizable strings.
    """
    if not corpus:
        raise ConfigError("cannot build a vocabulary from an empty corpus")
    if len(set(specials)) != len(specials):
        raise ConfigError("duplicate special token names")
    if len(set(lang_tags)) != len(lang_tags):
        raise ConfigError("duplicate language tags")
    seen: set[str] = set()
    for entry in corpus:
        tokens = entry if isinstance(entry, list) else tokenize(entry)
        seen.update(tokens)
    reserved = tuple(specials) + tuple(lang_tags)
    regular = sorted(seen - set(reserved))
    return Vocabulary(
        id_to_token=reserved + tuple(regular),
        specials=tuple(specials),
        lang_tags=tuple(lang_tags),
        partitions=partitions or {},
    )
