"""Inference: beam search for the AR branch, iterative mask-predict for the
masked-LM branch with AR rescoring of the length candidates."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import tensor as T
from ..corpus.data import FeatureSeq
from ..errors import ConfigError
from ..tensor import Tensor
from .config import DecodeConfig
from .transformer import Seq2SeqModel


@dataclass(frozen=True)
class Hypothesis:
    """Decoded id sequence with per-token log-probabilities.

    ``score`` is the raw sum of token scores; ordering between hypotheses
    uses the length-normalized value. ``ended`` is False only when the
    sequence hit the length cap before emitting EOS (truncated).
    """

    tokens: tuple[int, ...]
    token_scores: tuple[float, ...]
    ended: bool = True
    length_candidate: int | None = None

    @property
    def score(self) -> float:
        return float(sum(self.token_scores))

    @property
    def normalized_score(self) -> float:
        return self.score / max(len(self.tokens), 1)

    def text_tokens(self, vocab) -> tuple[str, ...]:
        ids = [t for t in self.tokens if t != vocab.eos_id]
        return tuple(vocab.id_to_token[i] for i in ids)


@dataclass
class MaskPredictTrace:
    """Instrumentation of one mask-predict run (per length candidate)."""

    lengths: tuple[int, ...] = ()
    remask_counts: dict = field(default_factory=dict)   # length -> [n_t per iteration]
    chosen_length: int = 0


def beam_search_steps(
    step_fn,
    bos_id: int,
    eos_id: int,
    beam_width: int,
    max_len: int,
) -> Hypothesis:
    """Generic beam search over a prefix scorer.

    step_fn maps an int array of prefixes [N, t] (each starting with BOS)
    to log-probabilities [N, V]. Candidates are ordered by cumulative
    log-probability during search and by length-normalized score at the
    end; ties resolve toward earlier beam entries, then lower token ids.
    """
    live: list[tuple[list[int], list[float]]] = [([bos_id], [])]
    finished: list[Hypothesis] = []
    for _ in range(max_len):
        prefixes = np.array([seq for seq, _ in live], dtype=np.int64)
        logprobs = step_fn(prefixes)  # [N, V]
        totals = np.array([sum(sc) for _, sc in live])[:, None] + logprobs
        flat = totals.reshape(-1)
        order = np.argsort(-flat, kind="stable")[: beam_width * 2]
        next_live: list[tuple[list[int], list[float]]] = []
        v = logprobs.shape[1]
        for idx in order:
            if len(next_live) >= beam_width:
                break
            bi, tok = divmod(int(idx), v)
            seq, scores = live[bi]
            new_scores = scores + [float(logprobs[bi, tok])]
            if tok == eos_id:
                finished.append(Hypothesis(tuple(seq[1:] + [tok]), tuple(new_scores)))
            else:
                next_live.append((seq + [tok], new_scores))
        live = next_live
        if not live or len(finished) >= beam_width:
            break
    if finished:
        finished.sort(key=lambda h: (-h.normalized_score, len(h.tokens)))
        return finished[0]
    # nothing completed: return the best truncated prefix
    live.sort(key=lambda h: -(sum(h[1]) / max(len(h[1]), 1)))
    seq, scores = live[0]
    return Hypothesis(tuple(seq[1:]), tuple(scores), ended=False)


def _encode_single(model: Seq2SeqModel, enc_input) -> tuple[np.ndarray, int]:
    if isinstance(enc_input, FeatureSeq):
        frames = enc_input.frames[None, :, :]
        states, out_lens = model.encode_features(frames, np.array([enc_input.num_frames]))
    else:
        ids = np.array([model.vocab.encode(list(enc_input))])
        states, out_lens = model.encode_text(ids, np.array([len(enc_input)]))
    return states.data[0], int(out_lens[0])


def _ar_step_scorer(model: Seq2SeqModel, enc_np: np.ndarray, enc_len: int, lang: str):
    banned = model.vocab.reserved_ids(allow_eos=True)

    def step_fn(prefixes: np.ndarray) -> np.ndarray:
        n, t = prefixes.shape
        enc = Tensor(np.broadcast_to(enc_np, (n,) + enc_np.shape).copy())
        lens = np.full(n, t)
        logits = model.ar_logits(enc, np.full(n, enc_len), prefixes, lens, lang)
        logp = T.log_softmax(logits, axis=-1).data[:, -1, :].copy()
        logp[:, banned] = -1e9
        return logp

    return step_fn


def beam_search(model: Seq2SeqModel, enc_input, lang: str, cfg: DecodeConfig) -> Hypothesis:
    """Beam decode one utterance with the AR branch."""
    with T.no_grad():
        enc_np, enc_len = _encode_single(model, enc_input)
        step_fn = _ar_step_scorer(model, enc_np, enc_len, lang)
        return beam_search_steps(
            step_fn, model.vocab.bos_id, model.vocab.eos_id, cfg.beam_width, cfg.max_len
        )


def remask_count(length: int, t: int, total: int) -> int:
    """Positions re-masked after iteration t of `total`: floor(N*(T-t)/T)."""
    return (length * (total - t)) // total


def mask_predict(
    model: Seq2SeqModel,
    enc_input,
    lang: str,
    cfg: DecodeConfig,
    record_trace: bool = False,
) -> tuple[Hypothesis, MaskPredictTrace | None]:
    """Iterative parallel decoding over a beam of length candidates.

    The length head proposes the top-l lengths (ties toward shorter). Each
    candidate starts fully masked; every iteration predicts all masked
    positions, then re-masks the floor(N*(T-t)/T) lowest-confidence
    positions. Finished candidates are teacher-forced through the AR
    decoder and the best length-normalized AR score wins.
    """
    if cfg.length_beam > min(cfg.max_len, model.cfg.max_len):
        raise ConfigError("length beam exceeds the maximum output length")
    vocab = model.vocab
    with T.no_grad():
        enc_np, enc_len = _encode_single(model, enc_input)
        len_logits = model.length_logits(
            Tensor(enc_np[None, :, :]), np.array([enc_len])
        ).data[0]
        probs = np.exp(len_logits - len_logits.max())
        probs = probs / probs.sum()
        order = sorted(range(len(probs)), key=lambda i: (-probs[i], i))
        lengths = tuple(i + 1 for i in order[: cfg.length_beam])

        n_cand = len(lengths)
        width = max(lengths)
        tok_lens = np.array(lengths)
        dec_ids = np.full((n_cand, width), vocab.pad_id, dtype=np.int64)
        conf = np.full((n_cand, width), -np.inf)
        masked = np.zeros((n_cand, width), dtype=bool)
        for c, n in enumerate(lengths):
            dec_ids[c, :n] = vocab.mask_id
            masked[c, :n] = True

        trace = MaskPredictTrace(lengths=lengths) if record_trace else None
        if trace is not None:
            trace.remask_counts = {n: [] for n in lengths}

        enc = Tensor(np.broadcast_to(enc_np, (n_cand,) + enc_np.shape).copy())
        enc_lens = np.full(n_cand, enc_len)
        iterations = cfg.nar_iterations
        banned = vocab.reserved_ids(allow_eos=False)
        for t in range(1, iterations + 1):
            logits = model.nar_logits(enc, enc_lens, dec_ids, tok_lens, lang)
            logp = T.log_softmax(logits, axis=-1).data.copy()
            logp[:, :, banned] = -np.inf
            preds = logp.argmax(axis=-1)
            best = logp.max(axis=-1)
            dec_ids = np.where(masked, preds, dec_ids)
            conf = np.where(masked, best, conf)
            masked = np.zeros_like(masked)
            for c, n in enumerate(lengths):
                n_t = remask_count(n, t, iterations)
                if trace is not None:
                    trace.remask_counts[n].append(n_t)
                if n_t > 0 and t < iterations:
                    lowest = np.argsort(conf[c, :n], kind="stable")[:n_t]
                    masked[c, lowest] = True
                    dec_ids[c, lowest] = vocab.mask_id

        # AR rescoring: teacher-force each candidate plus its EOS
        ar_in = np.full((n_cand, width + 1), vocab.pad_id, dtype=np.int64)
        ar_in[:, 0] = vocab.bos_id
        ar_in[:, 1:] = dec_ids
        ar_logits = model.ar_logits(enc, enc_lens, ar_in, tok_lens + 1, lang)
        ar_logp = T.log_softmax(ar_logits, axis=-1).data
        scored: list[Hypothesis] = []
        for c, n in enumerate(lengths):
            token_ids = list(dec_ids[c, :n]) + [vocab.eos_id]
            steps = np.arange(n + 1)
            token_scores = ar_logp[c, steps, token_ids]
            scored.append(
                Hypothesis(
                    tokens=tuple(int(i) for i in token_ids),
                    token_scores=tuple(float(s) for s in token_scores),
                    length_candidate=n,
                )
            )
        scored.sort(key=lambda h: (-h.normalized_score, h.length_candidate))
        best_hyp = scored[0]
        if trace is not None:
            trace.chosen_length = best_hyp.length_candidate or 0
    return best_hyp, trace


def greedy_tokens(model: Seq2SeqModel, enc_input, lang: str, max_len: int = 24) -> tuple[str, ...]:
    """Convenience greedy decode returning text tokens (no EOS)."""
    hyp = beam_search(model, enc_input, lang, DecodeConfig(beam_width=1, max_len=max_len))
    return hyp.text_tokens(model.vocab)
