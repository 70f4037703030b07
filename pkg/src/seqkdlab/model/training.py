"""Training loops for every model role (MT, ASR pre-training, ST) plus
validation-based checkpoint selection and parameter transfer."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import tensor as T
from ..corpus.data import ParallelCorpus, StDataset
from ..corpus.toygen import strip_markers
from ..corpus.vocab import Vocabulary
from ..errors import ConfigError
from ..tensor import LrSchedule, OptimizerState, Tensor, adam_step, noam_lr
from .config import LossBreakdown, TrainConfig, TransformerConfig
from .losses import Batch, ar_joint_loss, build_target_batch, nar_joint_loss
from .transformer import Seq2SeqModel, average_checkpoints


def lang_tag(lang: str) -> str:
    return f"<{lang}>"


@dataclass(frozen=True)
class Sample:
    """One training example: encoder input plus 1-2 decoder targets."""

    utt_id: str
    primary: tuple[str, ...]
    primary_lang: str
    enc_tokens: tuple[str, ...] | None = None
    enc_feats: np.ndarray | None = None
    aux: tuple[str, ...] | None = None
    aux_lang: str | None = None


def mt_samples(corpus: ParallelCorpus, direction: str) -> list[Sample]:
    """Text-to-text view; `backward` swaps the sides (same construction path)."""
    if direction not in ("forward", "backward"):
        raise ConfigError(f"unknown MT direction {direction!r}")
    view = corpus if direction == "forward" else corpus.swapped()
    out_lang = view.tgt_lang
    return [
        Sample(
            utt_id=f"mt{i:06d}",
            enc_tokens=tuple(src),
            primary=tuple(tgt),
            primary_lang=lang_tag(out_lang),
        )
        for i, (src, tgt) in enumerate(view.pairs)
    ]


def asr_samples(dataset: StDataset) -> list[Sample]:
    """Speech -> transcription; marker tokens are stripped like ASR casing."""
    return [
        Sample(
            utt_id=item.utt_id,
            enc_feats=item.speech.frames,
            primary=strip_markers(item.src_text),
            primary_lang=lang_tag(dataset.src_lang),
        )
        for item in dataset.items
    ]


def st_samples(dataset: StDataset, with_src: bool = False) -> list[Sample]:
    """Speech -> translation, optionally carrying the source text target."""
    return [
        Sample(
            utt_id=item.utt_id,
            enc_feats=item.speech.frames,
            primary=item.tgt_text,
            primary_lang=lang_tag(dataset.tgt_lang),
            aux=item.src_text if with_src else None,
            aux_lang=lang_tag(dataset.src_lang) if with_src else None,
        )
        for item in dataset.items
    ]


def make_batch(samples: list[Sample], vocab: Vocabulary, input_mode: str) -> Batch:
    if input_mode == "text":
        ids = [vocab.encode(list(s.enc_tokens)) for s in samples]
        lens = np.array([len(x) for x in ids])
        enc = np.full((len(ids), int(lens.max())), vocab.pad_id, dtype=np.int64)
        for i, seq in enumerate(ids):
            enc[i, : len(seq)] = seq
    else:
        lens = np.array([s.enc_feats.shape[0] for s in samples])
        feat_dim = samples[0].enc_feats.shape[1]
        enc = np.zeros((len(samples), int(lens.max()), feat_dim), dtype=np.float32)
        for i, s in enumerate(samples):
            enc[i, : s.enc_feats.shape[0]] = s.enc_feats
    primary = build_target_batch([s.primary for s in samples], vocab, samples[0].primary_lang)
    aux = None
    if samples[0].aux is not None:
        aux = build_target_batch([s.aux for s in samples], vocab, samples[0].aux_lang)
    return Batch(
        enc_input=enc,
        enc_lens=lens,
        primary=primary,
        aux=aux,
        utt_ids=tuple(s.utt_id for s in samples),
    )


@dataclass
class TrainLog:
    step_losses: list[float] = field(default_factory=list)
    step_breakdowns: list[LossBreakdown] = field(default_factory=list)
    epoch_losses: list[float] = field(default_factory=list)
    val_metrics: list[float] = field(default_factory=list)
    metric_name: str = ""


def teacher_forced_accuracy(model: Seq2SeqModel, samples: list[Sample], batch_size: int = 64) -> float:
    """Fraction of non-pad target positions the AR decoder gets right."""
    correct = total = 0
    with T.no_grad():
        for start in range(0, len(samples), batch_size):
            batch = make_batch(samples[start : start + batch_size], model.vocab, model.cfg.input_mode)
            enc, enc_lens = model.encode_batch(batch.enc_input, batch.enc_lens)
            tb = batch.primary
            logits = model.ar_logits(enc, enc_lens, tb.ar_in, tb.ar_lens, tb.lang)
            pred = logits.data.argmax(axis=-1)
            valid = tb.ar_out != model.vocab.pad_id
            correct += int((pred[valid] == tb.ar_out[valid]).sum())
            total += int(valid.sum())
    return correct / max(total, 1)


def batch_greedy_decode(
    model: Seq2SeqModel,
    samples: list[Sample],
    lang: str,
    max_len: int,
    batch_size: int = 64,
) -> list[tuple[str, ...]]:
    """Greedy decode many utterances at once; returns text tokens per sample."""
    vocab = model.vocab
    banned = vocab.reserved_ids(allow_eos=True)
    results: list[tuple[str, ...]] = []
    with T.no_grad():
        for start in range(0, len(samples), batch_size):
            chunk = samples[start : start + batch_size]
            batch = make_batch(chunk, vocab, model.cfg.input_mode)
            enc, enc_lens = model.encode_batch(batch.enc_input, batch.enc_lens)
            n = len(chunk)
            prefixes = np.full((n, 1), vocab.bos_id, dtype=np.int64)
            done = np.zeros(n, dtype=bool)
            outputs: list[list[int]] = [[] for _ in range(n)]
            for _ in range(max_len):
                lens = np.full(n, prefixes.shape[1])
                logits = model.ar_logits(enc, enc_lens, prefixes, lens, lang)
                logp = logits.data[:, -1, :].copy()
                logp[:, banned] = -1e30
                nxt = logp.argmax(axis=-1)
                for i in range(n):
                    if not done[i]:
                        if nxt[i] == vocab.eos_id:
                            done[i] = True
                        else:
                            outputs[i].append(int(nxt[i]))
                if done.all():
                    break
                prefixes = np.concatenate([prefixes, nxt[:, None]], axis=1)
            for out in outputs:
                results.append(tuple(vocab.id_to_token[i] for i in out))
    return results


def train_seq2seq(
    model: Seq2SeqModel,
    samples: list[Sample],
    cfg: TrainConfig,
    mode: str = "ar",
    dev_samples: list[Sample] | None = None,
    metric: str = "bleu",
) -> TrainLog:
    """Shuffled mini-batch training with a warmup schedule and Adam.

    When validation runs, per-epoch snapshots are kept and the best
    ``cfg.average_best`` checkpoints by validation metric are averaged
    into the model at the end.
    """
    if mode not in ("ar", "nar"):
        raise ConfigError(f"unknown training mode {mode!r}")
    if not samples:
        raise ConfigError("empty training set")
    vocab = model.vocab
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x73A1]))
    if model.cfg.dropout > 0:
        model.dropout_rng = rng
    sched = LrSchedule(cfg.lr_factor, cfg.warmup_steps, model.cfg.d_model)
    opt = OptimizerState()
    param_arrays = {k: p.data for k, p in model.params.items()}
    log = TrainLog(metric_name=metric)
    snapshots: list[tuple[float, int, dict[str, np.ndarray]]] = []

    for epoch in range(cfg.epochs):
        order = rng.permutation(len(samples))
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, len(order), cfg.batch_size):
            chunk = [samples[i] for i in order[start : start + cfg.batch_size]]
            batch = make_batch(chunk, vocab, model.cfg.input_mode)
            if mode == "ar":
                loss, breakdown = ar_joint_loss(model, batch, cfg.lambda_src, cfg.label_smoothing)
            else:
                loss, breakdown = nar_joint_loss(
                    model,
                    batch,
                    cfg.lambda_ar,
                    cfg.lambda_lp,
                    cfg.lambda_src,
                    smart=cfg.smart_refinement,
                    smoothing=cfg.label_smoothing,
                    rng=rng,
                )
            for p in model.params.values():
                p.zero_grad()
            loss.backward()
            grads = {
                k: (p.grad if p.grad is not None else np.zeros_like(p.data))
                for k, p in model.params.items()
            }
            adam_step(param_arrays, grads, opt, noam_lr(opt.step + 1, sched))
            log.step_losses.append(loss.item())
            log.step_breakdowns.append(breakdown)
            epoch_loss += loss.item()
            n_batches += 1
        log.epoch_losses.append(epoch_loss / max(n_batches, 1))

        if cfg.validate and dev_samples:
            if metric == "accuracy":
                score = teacher_forced_accuracy(model, dev_samples)
            else:
                from ..metrics import bleu

                hyps = batch_greedy_decode(
                    model, dev_samples, dev_samples[0].primary_lang, model.cfg.max_len
                )
                refs = [s.primary for s in dev_samples]
                score = bleu(hyps, refs)
            log.val_metrics.append(score)
            snapshots.append((score, epoch, model.param_arrays()))

    if snapshots and cfg.average_best > 0:
        # the "last best" checkpoints: best metric first, later epoch on ties
        snapshots.sort(key=lambda s: (-s[0], -s[1]))
        keep = [snap for _, _, snap in snapshots[: cfg.average_best]]
        model.load_param_arrays(average_checkpoints(keep))
    model.dropout_rng = None
    return log


def train_mt(
    corpus: ParallelCorpus,
    direction: str,
    vocab: Vocabulary,
    model_cfg: TransformerConfig,
    train_cfg: TrainConfig,
    dev_corpus: ParallelCorpus | None = None,
) -> tuple[Seq2SeqModel, TrainLog]:
    """Text NMT model for distillation (forward) or paraphrasing (backward)."""
    if model_cfg.input_mode != "text":
        raise ConfigError("MT models need a text-mode encoder")
    model = Seq2SeqModel.init(model_cfg, vocab, seed=train_cfg.seed)
    samples = mt_samples(corpus, direction)
    dev = mt_samples(dev_corpus, direction) if dev_corpus is not None else None
    log = train_seq2seq(model, samples, train_cfg, mode="ar", dev_samples=dev, metric="bleu")
    return model, log


def pretrain_asr(
    dataset: StDataset,
    vocab: Vocabulary,
    model_cfg: TransformerConfig,
    train_cfg: TrainConfig,
    dev_dataset: StDataset | None = None,
) -> tuple[Seq2SeqModel, TrainLog]:
    """Attention-based speech recognizer whose encoder seeds the ST models."""
    if model_cfg.input_mode != "features":
        raise ConfigError("ASR models need a feature-mode encoder")
    model = Seq2SeqModel.init(model_cfg, vocab, seed=train_cfg.seed)
    samples = asr_samples(dataset)
    dev = asr_samples(dev_dataset) if dev_dataset is not None else None
    log = train_seq2seq(model, samples, train_cfg, mode="ar", dev_samples=dev, metric="accuracy")
    return model, log


ENCODER_PREFIXES = ("enc.", "enc_conv.")
DECODER_PREFIXES = ("ar.", "tok_emb", "lang_emb", "out_proj.")


def init_encoder_from(model: Seq2SeqModel, pretrained: Seq2SeqModel) -> None:
    model.copy_params_from(pretrained, ENCODER_PREFIXES)


def init_decoder_from(model: Seq2SeqModel, mt_model: Seq2SeqModel) -> None:
    model.copy_params_from(mt_model, DECODER_PREFIXES)
