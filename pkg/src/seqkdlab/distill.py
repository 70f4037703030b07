"""Distilled-dataset builders.

Forward distillation replaces translations with beam output of the
source-to-target text model; backward distillation replaces transcriptions
with paraphrases decoded from the translations by the target-to-source
model. Speech is copied bit-for-bit everywhere, cardinalities are
preserved exactly, and degenerate (empty) beam outputs are retained as a
single EOS token and flagged rather than dropped.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

from .corpus.data import (
    StDataset,
    StItem,
    VARIANT_BIDIR,
    VARIANT_BWD,
    VARIANT_COMBINED,
    VARIANT_FWD,
)
from .corpus.vocab import EOS
from .errors import AlignmentError, ConfigError
from .metrics import bleu, ter
from .model.config import DecodeConfig
from .model.decoding import beam_search
from .model.training import lang_tag
from .model.transformer import Seq2SeqModel


@dataclass(frozen=True)
class DistillConfig:
    beam_width: int = 4
    max_len: int = 24
    seed: int = 0

    def __post_init__(self):
        if self.beam_width < 1:
            raise ConfigError("beam width must be >= 1")

    def decode_config(self) -> DecodeConfig:
        return DecodeConfig(beam_width=self.beam_width, max_len=self.max_len)


def model_checksum(model: Seq2SeqModel) -> str:
    h = hashlib.sha256()
    for name in sorted(model.params):
        h.update(name.encode())
        h.update(model.params[name].data.tobytes())
    return h.hexdigest()[:16]


def _decode_texts(model: Seq2SeqModel, inputs, out_lang_tag: str, cfg: DistillConfig):
    """Beam-decode token sequences; empty outputs become a flagged EOS."""
    decode_cfg = cfg.decode_config()
    outputs = []
    for tokens in inputs:
        hyp = beam_search(model, tokens, out_lang_tag, decode_cfg)
        text = hyp.text_tokens(model.vocab)
        if text:
            outputs.append((text, False))
        else:
            outputs.append(((EOS,), True))
    return outputs


def forward_seqkd(model_fwd: Seq2SeqModel, dataset: StDataset, cfg: DistillConfig) -> StDataset:
    """Re-target every item with the forward model's translation of its
    gold transcription; speech and transcription are copied verbatim."""
    if model_fwd.cfg.input_mode != "text":
        raise ConfigError("forward distillation needs a text-mode model")
    decoded = _decode_texts(
        model_fwd,
        [item.src_text for item in dataset.items],
        lang_tag(dataset.tgt_lang),
        cfg,
    )
    items = tuple(
        replace(item, tgt_text=text, origin=VARIANT_FWD, degenerate=flag)
        for item, (text, flag) in zip(dataset.items, decoded)
    )
    return replace(dataset, items=items, variant=VARIANT_FWD)


def backward_seqkd(model_bwd: Seq2SeqModel, dataset: StDataset, cfg: DistillConfig) -> StDataset:
    """Replace every transcription with a paraphrase back-translated from
    the gold translation; speech and translation are copied verbatim."""
    if model_bwd.cfg.input_mode != "text":
        raise ConfigError("backward distillation needs a text-mode model")
    decoded = _decode_texts(
        model_bwd,
        [item.tgt_text for item in dataset.items],
        lang_tag(dataset.src_lang),
        cfg,
    )
    items = tuple(
        replace(item, src_text=text, origin=VARIANT_BWD, degenerate=flag)
        for item, (text, flag) in zip(dataset.items, decoded)
    )
    return replace(dataset, items=items, variant=VARIANT_BWD)


def _check_same_utts(a: StDataset, b: StDataset, op: str) -> None:
    if a.utt_ids() != b.utt_ids():
        raise AlignmentError(f"{op}: utterance ids disagree or are out of order")


def make_bidir(d_fwd: StDataset, d_bwd: StDataset) -> StDataset:
    """Machine-generated text on both sides: paraphrased source from the
    backward set, distilled target from the forward set."""
    _check_same_utts(d_fwd, d_bwd, "make_bidir")
    items = tuple(
        replace(
            fwd_item,
            src_text=bwd_item.src_text,
            origin=VARIANT_BIDIR,
            degenerate=fwd_item.degenerate or bwd_item.degenerate,
        )
        for fwd_item, bwd_item in zip(d_fwd.items, d_bwd.items)
    )
    return replace(d_fwd, items=items, variant=VARIANT_BIDIR, parents=())


def concat_2ref(da: StDataset, db: StDataset) -> StDataset:
    """Two-reference training set: every utterance appears once per parent,
    with its parent variant recorded per item."""
    if set(da.utt_ids()) != set(db.utt_ids()):
        raise AlignmentError("concat_2ref: utterance id sets differ")
    items = tuple(
        replace(item, origin=ds.variant)
        for ds in (da, db)
        for item in ds.items
    )
    return StDataset(
        items=items,
        variant=VARIANT_COMBINED,
        parents=(da.variant, db.variant),
        src_lang=da.src_lang,
        tgt_lang=da.tgt_lang,
    )


def paraphrase_report(real: StDataset, generated: StDataset, side: str = "src") -> dict:
    """Quality of machine-generated text against the gold side it replaced
    (corpus BLEU / TER plus a few sample pairs)."""
    _check_same_utts(real, generated, "paraphrase_report")
    if side == "src":
        refs = [item.src_text for item in real.items]
        hyps = [item.src_text for item in generated.items]
    elif side == "tgt":
        refs = [item.tgt_text for item in real.items]
        hyps = [item.tgt_text for item in generated.items]
    else:
        raise ConfigError(f"unknown side {side!r}")
    exact = sum(h == r for h, r in zip(hyps, refs))
    samples = [
        {"utt_id": real.items[i].utt_id, "reference": " ".join(refs[i]), "generated": " ".join(hyps[i])}
        for i in range(min(5, len(refs)))
    ]
    return {
        "side": side,
        "variant": generated.variant,
        "bleu": bleu(hyps, refs),
        "ter": ter(hyps, refs),
        "exact_match_rate": exact / len(refs),
        "num_sentences": len(refs),
        "samples": samples,
    }


def distill_manifest(model: Seq2SeqModel, cfg: DistillConfig, variant: str) -> dict:
    return {
        "variant": variant,
        "generator_checksum": model_checksum(model),
        "beam_width": cfg.beam_width,
        "max_len": cfg.max_len,
        "seed": cfg.seed,
    }
