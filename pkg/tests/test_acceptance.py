"""Acceptance suite: one test per exit criterion, each printing a PASS/FAIL
line (run with `pytest -s tests/test_acceptance.py` to watch them live).

The trend criteria (4-7) share one 3-seed experiment over the multi-modal
toy task; its stage timings are attributed to the criterion that needs
them when checking the runtime budgets.
"""
from __future__ import annotations

import json
import math
import time

import numpy as np
import pytest

from seqkdlab import tensor as T
from seqkdlab.alignment import AlignedCorpus, AlignedPair, em_train_aligner
from seqkdlab.corpus import DEFAULT_SPECIALS, ParallelCorpus, ToyGenConfig, build_vocab, synth_toy_bitext
from seqkdlab.metrics import bleu, conditional_entropy, faithfulness, ter
from seqkdlab.model import (
    DecodeConfig,
    Seq2SeqModel,
    TrainConfig,
    TransformerConfig,
    mask_predict,
    remask_count,
    st_samples,
    train_seq2seq,
)
from seqkdlab.pipeline import config_from_dict, run_experiment
from seqkdlab.tensor import Tensor

from helpers import rel_err


def _report_line(num: int, name: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"\n[acceptance {num:02d}] {name}: {status}{suffix}")


def check(num: int, name: str, passed: bool, detail: str = "") -> None:
    _report_line(num, name, passed, detail)
    assert passed, f"criterion {num} ({name}) failed: {detail}"


# ---------------------------------------------------------------------------
# criterion 1: gradient fidelity per layer type


rng_weights = np.random.default_rng(99).normal(size=(2, 5, 8))


def test_criterion_1_gradient_fidelity():
    t0 = time.perf_counter()
    rng_master = np.random.default_rng(0xACC1)
    tol = 1e-4
    h = 1e-5
    worst = 0.0

    def fd_check(build_loss, arrays):
        nonlocal worst
        tensors = [Tensor(a.copy(), requires_grad=True) for a in arrays]
        loss = build_loss(tensors)
        loss.backward()
        for k, arr in enumerate(arrays):
            auto = tensors[k].grad
            flat = arr.reshape(-1)
            probe = rng_master.choice(flat.size, size=min(8, flat.size), replace=False)
            for i in probe:
                orig = flat[i]
                flat[i] = orig + h
                up = float(build_loss([Tensor(a) for a in arrays]).data)
                flat[i] = orig - h
                down = float(build_loss([Tensor(a) for a in arrays]).data)
                flat[i] = orig
                fd = (up - down) / (2 * h)
                a = auto.reshape(-1)[i]
                err = abs(fd - a) / max(abs(fd), abs(a), 1e-6)
                worst = max(worst, err)
                assert err < tol, f"rel err {err:.2e}"

    for seed in range(5):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(2, 5, 8))
        w = rng.normal(size=(8, 8)) * 0.3
        b = rng.normal(size=(8,)) * 0.1
        # linear
        fd_check(lambda ts: ((ts[0] @ ts[1] + ts[2]) * (ts[0] @ ts[1] + ts[2])).mean(), [x, w, b])
        # layer norm
        g = rng.normal(size=(8,)) * 0.5 + 1.0
        fd_check(lambda ts: (T.layer_norm(ts[0], ts[1], ts[2]) * rng_weights).sum(), [x, g, b])
        # softmax
        fd_check(lambda ts: (T.softmax(ts[0]) * rng_weights).sum(), [x])
        # attention (single head, fused chain)
        wq = rng.normal(size=(8, 8)) * 0.3
        wk = rng.normal(size=(8, 8)) * 0.3
        wv = rng.normal(size=(8, 8)) * 0.3

        def attn_loss(ts):
            xq, q_w, k_w, v_w = ts
            q, k, v = xq @ q_w, xq @ k_w, xq @ v_w
            scores = T.softmax(q @ T.swapaxes(k, -1, -2) * (8 ** -0.5))
            return ((scores @ v) * (scores @ v)).mean()

        fd_check(attn_loss, [x, wq, wk, wv])
        # convolution (stride-2 downsampling block)
        cw = rng.normal(size=(3, 8, 8)) * 0.3
        cb = rng.normal(size=(8,)) * 0.1

        def conv_loss(ts):
            y = T.conv1d(ts[0], ts[1], ts[2])
            return (y * y).mean()

        fd_check(conv_loss, [x, cw, cb])
        # embedding + add (scatter grads plus broadcast add)
        table = rng.normal(size=(12, 8)) * 0.5
        ids = rng.integers(0, 12, size=(2, 5))
        lang = rng.normal(size=(8,)) * 0.2
        fd_check(lambda ts: ((T.embedding(ts[0], ids) + ts[1]) * (T.embedding(ts[0], ids) + ts[1])).mean(),
                 [table, lang])

    elapsed = time.perf_counter() - t0
    check(1, "gradient fidelity", elapsed < 30.0 and worst < tol,
          f"worst rel err {worst:.2e}, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# criterion 2: EM correctness


def test_criterion_2_em_correctness():
    t0 = time.perf_counter()
    hand = ParallelCorpus(pairs=((("a", "b"), ("x", "y")), (("a",), ("x",))))
    model = em_train_aligner(hand, iterations=5, use_diagonal=False, p0=0.0)
    sharp = model.t["a"]["x"] > 0.9 and model.t["b"]["y"] > 0.9

    monotone = True
    for seed in (0, 1, 2):
        cfg = ToyGenConfig(src_vocab_size=15, k=2, corpus_size=100, seed=seed)
        mle = em_train_aligner(synth_toy_bitext(cfg), iterations=8, alpha=0.0)
        diffs = np.diff(mle.log_likelihoods)
        monotone = monotone and bool((diffs >= -1e-10).all())
    elapsed = time.perf_counter() - t0
    check(2, "EM correctness", sharp and monotone and elapsed < 5.0,
          f"t(x|a)={model.t['a']['x']:.3f}, t(y|b)={model.t['b']['y']:.3f}, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# criterion 3: metric oracles


def test_criterion_3_metric_oracles():
    ok = []
    ok.append(abs(bleu([("a", "b", "c", "d")], [("a", "b", "c", "d", "e")]) - 77.88) <= 0.01)
    ok.append(bleu([("a", "b", "c", "d")], [("a", "b", "c", "d")]) == pytest.approx(100.0))
    ok.append(ter([("b", "a")], [("a", "b")]) == pytest.approx(50.0))

    half = tuple(
        AlignedPair(("a",), ("x" if i % 2 == 0 else "y",), (0,)) for i in range(100)
    )
    corpus = AlignedCorpus("forward", half)
    ok.append(abs(conditional_entropy(corpus, "forward").value - math.log(2)) <= 1e-6)
    ok.append(faithfulness(corpus, corpus, "forward").value == 0.0)

    collapsed = AlignedCorpus(
        "forward", tuple(AlignedPair(("a",), ("x",), (0,)) for _ in range(100))
    )
    kl = faithfulness(corpus, collapsed, "forward", eps=1e-6).value
    ok.append(abs(kl - 6.214) <= 0.01)
    check(3, "metric oracles", all(ok), f"subchecks {ok}, kl={kl:.4f}")


# ---------------------------------------------------------------------------
# criteria 4-7: shared 3-seed trend experiment


@pytest.fixture(scope="module")
def trend_run():
    cfg = config_from_dict({
        "rows": ["A1", "B1"],
        "seeds": [1, 2, 3],
        "run_2ref_ablation": False,
    })
    assert cfg.data.k == 3 and cfg.data.reorder_p == 0.1 and cfg.data.corpus_size == 2000
    t0 = time.perf_counter()
    result = run_experiment(cfg)
    result["wall"] = time.perf_counter() - t0
    return cfg, result


def _stage_seconds(timings: dict, stages: tuple[str, ...]) -> float:
    return sum(v for k, v in timings.items() if k.startswith(stages))


def test_criterion_4_entropy_reduction_trend(trend_run):
    cfg, result = trend_run
    analysis = result["report"]["analysis"]
    fwd_real = analysis["entropy"]["real"]["forward"]["per_seed"]
    fwd_dist = analysis["entropy"]["fwd"]["forward"]["per_seed"]
    bwd_real = analysis["entropy"]["real"]["backward"]["per_seed"]
    bwd_dist = analysis["entropy"]["bwd"]["backward"]["per_seed"]
    fwd_hits = sum(d <= 0.95 * r for r, d in zip(fwd_real, fwd_dist))
    bwd_hits = sum(d <= 0.95 * r for r, d in zip(bwd_real, bwd_dist))
    # budget: teachers + distillation + alignment analysis
    spent = _stage_seconds(result["timings"], ("prepare:data", "prepare:mt_fwd",
                                               "prepare:mt_bwd", "prepare:distill", "analysis:"))
    check(4, "entropy reduction trend", fwd_hits >= 2 and bwd_hits >= 2 and spent < 600.0,
          f"fwd {fwd_hits}/3 seeds, bwd {bwd_hits}/3 seeds, stage time {spent:.0f}s")


def test_criterion_5_backward_cross_effect(trend_run):
    cfg, result = trend_run
    analysis = result["report"]["analysis"]
    fwd_real = analysis["entropy"]["real"]["forward"]["per_seed"]
    fwd_bwd = analysis["entropy"]["bwd"]["forward"]["per_seed"]
    hits = sum(d < r for r, d in zip(fwd_real, fwd_bwd))
    check(5, "backward-distillation cross effect", hits >= 2, f"{hits}/3 seeds")


def test_criterion_6_faithfulness_structure(trend_run):
    cfg, result = trend_run
    analysis = result["report"]["analysis"]
    real_omitted = "real" not in analysis["faithfulness"]
    positive = all(
        dirs[d]["mean"] > 0.0
        for dirs in analysis["faithfulness"].values()
        for d in ("forward", "backward")
    )
    f = analysis["faithfulness"]
    between_or_flagged = True
    for d in ("forward", "backward"):
        lo, hi = sorted((f["fwd"][d]["mean"], f["bwd"][d]["mean"]))
        mid = f["bidir"][d]["mean"]
        if not (lo <= mid <= hi):
            between_or_flagged = between_or_flagged and any(
                "faithfulness" in flag for flag in analysis["flags"]
            )
    check(6, "faithfulness structure", real_omitted and positive and between_or_flagged,
          f"real omitted={real_omitted}, positive={positive}, flags={analysis['flags']}")


def test_criterion_7_seqkd_bleu_trend(trend_run):
    cfg, result = trend_run
    rows = result["report"]["rows"]
    a1 = rows["A1"]["bleu"]["mean"]
    b1 = rows["B1"]["bleu"]["mean"]
    spent = _stage_seconds(result["timings"], ("row:A1", "row:B1", "prepare:asr"))
    check(7, "forward-distillation BLEU trend", (b1 - a1) >= 0.5 and spent < 1200.0,
          f"A1={a1:.2f}, B1={b1:.2f}, delta={b1 - a1:+.2f}, stage time {spent:.0f}s")


# ---------------------------------------------------------------------------
# criterion 8: joint-loss reduction, bit for bit


def test_criterion_8_joint_loss_reduction():
    from conftest import toy_world

    _, vocab, dataset = toy_world(
        ToyGenConfig(src_vocab_size=10, k=2, tgt_vocab_size=10, reorder_p=0.0,
                     corpus_size=200, seed=11, sent_len_range=(3, 6))
    )
    model_cfg = TransformerConfig(input_mode="features", d_model=64, d_ff=256,
                                  num_heads=4, feat_dim=8)
    # 200 samples / batch 16 = 13 batches per epoch; 8 epochs > 100 steps
    train_cfg = TrainConfig(epochs=8, batch_size=16, lr_factor=0.5, warmup_steps=100,
                            seed=21, validate=False)

    joint = Seq2SeqModel.init(model_cfg, vocab, seed=21)
    log_joint = train_seq2seq(joint, st_samples(dataset, with_src=True), train_cfg, mode="ar")
    plain = Seq2SeqModel.init(model_cfg, vocab, seed=21)
    log_plain = train_seq2seq(plain, st_samples(dataset, with_src=False), train_cfg, mode="ar")

    joint_steps = log_joint.step_losses[:100]
    plain_steps = log_plain.step_losses[:100]
    identical = len(joint_steps) == 100 and joint_steps == plain_steps
    st_equals_total = all(
        b.total == b.st for b in log_joint.step_breakdowns[:100]
    )
    check(8, "joint-loss reduction at lambda 0", identical and st_equals_total,
          f"{len(joint_steps)} steps compared, bitwise equal={identical}")


# ---------------------------------------------------------------------------
# criterion 9: mask-predict contract


def test_criterion_9_mask_predict_contract():
    from conftest import toy_world

    _, vocab, dataset = toy_world(
        ToyGenConfig(src_vocab_size=8, k=2, tgt_vocab_size=8, corpus_size=120,
                     seed=13, sent_len_range=(3, 6))
    )
    model_cfg = TransformerConfig(input_mode="features", d_model=32, d_ff=64,
                                  num_heads=2, feat_dim=8, max_len=24)
    model = Seq2SeqModel.init(model_cfg, vocab, seed=3)
    # a short masked-LM training pass so the length head is trained
    train_cfg = TrainConfig(epochs=3, batch_size=32, lr_factor=0.5, warmup_steps=60,
                            seed=3, validate=False)
    train_seq2seq(model, st_samples(dataset), train_cfg, mode="nar")

    all_ok = True
    details = []
    for iterations in (1, 4, 10):
        cfg = DecodeConfig(nar_iterations=iterations, length_beam=9, max_len=24)
        for item in dataset.items[:5]:
            hyp, trace = mask_predict(model, item.speech, "<tgt>", cfg, record_trace=True)
            no_mask = vocab.mask_id not in hyp.tokens
            exact_len = len(hyp.text_tokens(vocab)) == hyp.length_candidate
            sched_ok = all(
                trace.remask_counts[n] == [remask_count(n, t, iterations)
                                           for t in range(1, iterations + 1)]
                for n in trace.lengths
            )
            all_ok = all_ok and no_mask and exact_len and sched_ok
        details.append(f"T={iterations} ok")
    check(9, "mask-predict contract", all_ok, "; ".join(details))


# ---------------------------------------------------------------------------
# criterion 10: byte-identical reports


def test_criterion_10_run_matrix_determinism(tmp_path):
    from seqkdlab.pipeline import ArtifactSink
    from seqkdlab.pipeline.reporting import write_report

    payload = {
        "data": {"corpus_size": 90, "src_vocab_size": 8, "tgt_vocab_size": 8, "k": 2,
                 "ambiguous_frac": 0.5, "sent_len_min": 3, "sent_len_max": 5},
        "train_mt": {"epochs": 2, "warmup_steps": 20, "lr_factor": 0.25, "batch_size": 32},
        "train_asr": {"epochs": 2, "warmup_steps": 20, "lr_factor": 0.25, "batch_size": 32},
        "train_st": {"epochs": 2, "warmup_steps": 20, "lr_factor": 0.25, "batch_size": 32},
        "decode": {"nar_iterations": [2], "length_beam": 5, "max_len": 16, "beam_width": 2},
        "rows": ["A1"],
        "seeds": [5],
    }
    blobs = []
    for run in ("first", "second"):
        out = tmp_path / run
        cfg = config_from_dict(json.loads(json.dumps(payload)))
        result = run_experiment(cfg, artifact_sink=ArtifactSink(out))
        write_report(result["report"], out / "report.json", fmt="json")
        blobs.append((out / "report.json").read_bytes())
    check(10, "run-matrix determinism", blobs[0] == blobs[1],
          f"{len(blobs[0])} bytes each")
