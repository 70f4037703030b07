"""Joint training objectives for the AR and masked-LM decoder branches.

The AR objective is  total = st + lambda_src * src  where both terms are
label-smoothed cross entropies from the *same* decoder parameters, with
only the added language embedding switched between the two passes.

The masked-LM objective replaces the st term with
    st = cmlm + lambda_ar * ar + lambda_lp * lp
(masked-position CE, auxiliary AR decoder CE, and length-class CE); the
source-text term then uses the masked-LM decoder as well.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import tensor as T
from ..corpus.vocab import Vocabulary
from ..errors import LengthError
from ..tensor import Tensor, cross_entropy_smoothed
from .config import LossBreakdown
from .transformer import Seq2SeqModel


@dataclass
class TargetBatch:
    """Padded id views of one language side of a batch."""

    lang: str
    ar_in: np.ndarray    # [B, L+1]  BOS + tokens
    ar_out: np.ndarray   # [B, L+1]  tokens + EOS, PAD beyond
    ar_lens: np.ndarray  # per-sample L_i + 1
    tokens: np.ndarray   # [B, L]    tokens only (masked-LM view)
    tok_lens: np.ndarray


@dataclass
class Batch:
    enc_input: np.ndarray  # [B, T] ids or [B, T, feat_dim] frames
    enc_lens: np.ndarray
    primary: TargetBatch
    aux: TargetBatch | None = None
    utt_ids: tuple[str, ...] = ()


def build_target_batch(sequences, vocab: Vocabulary, lang: str) -> TargetBatch:
    """Pad token-string sequences into AR and masked-LM id views."""
    ids = [vocab.encode(list(seq)) for seq in sequences]
    lens = np.array([len(s) for s in ids])
    B, L = len(ids), int(lens.max())
    pad, bos, eos = vocab.pad_id, vocab.bos_id, vocab.eos_id
    ar_in = np.full((B, L + 1), pad, dtype=np.int64)
    ar_out = np.full((B, L + 1), pad, dtype=np.int64)
    tokens = np.full((B, L), pad, dtype=np.int64)
    for i, seq in enumerate(ids):
        n = len(seq)
        ar_in[i, 0] = bos
        ar_in[i, 1 : n + 1] = seq
        ar_out[i, :n] = seq
        ar_out[i, n] = eos
        tokens[i, :n] = seq
    return TargetBatch(lang=lang, ar_in=ar_in, ar_out=ar_out, ar_lens=lens + 1, tokens=tokens, tok_lens=lens)


def _ar_ce(model: Seq2SeqModel, enc, enc_lens, tb: TargetBatch, smoothing: float) -> Tensor:
    logits = model.ar_logits(enc, enc_lens, tb.ar_in, tb.ar_lens, tb.lang)
    return cross_entropy_smoothed(logits, tb.ar_out, smoothing, ignore_index=model.vocab.pad_id)


def ar_joint_loss(
    model: Seq2SeqModel,
    batch: Batch,
    lambda_src: float,
    smoothing: float = 0.0,
) -> tuple[Tensor, LossBreakdown]:
    """Eq.-style AR objective; the src term is skipped entirely at weight 0."""
    enc, enc_lens = model.encode_batch(batch.enc_input, batch.enc_lens)
    st = _ar_ce(model, enc, enc_lens, batch.primary, smoothing)
    breakdown = LossBreakdown(st=st.item())
    if lambda_src > 0.0 and batch.aux is not None:
        src = _ar_ce(model, enc, enc_lens, batch.aux, smoothing)
        total = st + lambda_src * src
        breakdown.src = src.item()
    else:
        total = st
    breakdown.total = total.item()
    return total, breakdown


def sample_cmlm_mask(rng: np.random.Generator, tok_lens: np.ndarray, width: int) -> np.ndarray:
    """Boolean [B, width] mask with u ~ U[1, len] masked positions per row."""
    mask = np.zeros((len(tok_lens), width), dtype=bool)
    for i, n in enumerate(tok_lens):
        n = int(n)
        u = int(rng.integers(1, n + 1))
        mask[i, rng.choice(n, size=u, replace=False)] = True
    return mask


def cmlm_loss(
    model: Seq2SeqModel,
    enc: Tensor,
    enc_lens: np.ndarray,
    tb: TargetBatch,
    mask: np.ndarray,
    smoothing: float,
    smart: bool = False,
) -> Tensor:
    """Masked-position CE; with smart refinement the graph runs through a
    second pass whose masked slots hold first-pass predictions."""
    mask_id = model.vocab.mask_id
    dec_ids = np.where(mask, mask_id, tb.tokens)
    targets = np.where(mask, tb.tokens, -1)
    if smart:
        with T.no_grad():
            logits1 = model.nar_logits(enc, enc_lens, dec_ids, tb.tok_lens, tb.lang)
        preds = logits1.data.argmax(axis=-1)
        dec_ids = np.where(mask, preds, tb.tokens)
    logits = model.nar_logits(enc, enc_lens, dec_ids, tb.tok_lens, tb.lang)
    return cross_entropy_smoothed(logits, targets, smoothing, ignore_index=-1)


def nar_joint_loss(
    model: Seq2SeqModel,
    batch: Batch,
    lambda_ar: float,
    lambda_lp: float,
    lambda_src: float,
    smart: bool = False,
    smoothing: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[Tensor, LossBreakdown]:
    rng = rng or np.random.default_rng(0)
    pb = batch.primary
    if int(pb.tok_lens.max()) > model.cfg.max_len:
        raise LengthError(
            f"target length {int(pb.tok_lens.max())} exceeds max_len {model.cfg.max_len}"
        )
    enc, enc_lens = model.encode_batch(batch.enc_input, batch.enc_lens)

    mask = sample_cmlm_mask(rng, pb.tok_lens, pb.tokens.shape[1])
    cmlm = cmlm_loss(model, enc, enc_lens, pb, mask, smoothing, smart=smart)
    total = cmlm
    breakdown = LossBreakdown(cmlm=cmlm.item())

    if lambda_ar > 0.0:
        ar = _ar_ce(model, enc, enc_lens, pb, smoothing)
        total = total + lambda_ar * ar
        breakdown.ar = ar.item()
    if lambda_lp > 0.0:
        len_logits = model.length_logits(enc, enc_lens)
        lp = cross_entropy_smoothed(len_logits, pb.tok_lens - 1, 0.0)
        total = total + lambda_lp * lp
        breakdown.lp = lp.item()
    breakdown.st = breakdown.cmlm + lambda_ar * breakdown.ar + lambda_lp * breakdown.lp

    if lambda_src > 0.0 and batch.aux is not None:
        ab = batch.aux
        src_mask = sample_cmlm_mask(rng, ab.tok_lens, ab.tokens.shape[1])
        src = cmlm_loss(model, enc, enc_lens, ab, src_mask, smoothing, smart=smart)
        total = total + lambda_src * src
        breakdown.src = src.item()
    breakdown.total = total.item()
    return total, breakdown
