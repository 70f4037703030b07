"""Experiment matrix: data generation, teacher training, distillation,
row-recipe ST training, decoding, scoring and the analysis tables.

Row recipes (AR unless noted; the encoder always starts from the ASR model):

    A1  gold data, no source loss            A2  A1 + decoder init from the MT model
    A3  A1 + source loss on gold text        A4  gold targets + source loss on paraphrases
    B1  forward-distilled targets            B2  B1 + decoder init from the MT model
    B3  B1 + source loss on gold text        B4  two refs: gold + forward-distilled
    C1  both sides machine-generated         C2  two refs: forward + backward sets
    NAR-fwd / NAR-fwd-jointASR / NAR-bidir   masked-LM branch, forward-distilled base

Every number in the resulting report is a pure function of (config, seeds).
"""
from __future__ import annotations

import hashlib
import time
import zlib
from dataclasses import dataclass, field

import numpy as np

from ..alignment import train_and_align
from ..corpus.data import ParallelCorpus, StDataset
from ..corpus.toygen import SpeechSynthesizer, build_st_dataset, synth_toy_bitext
from ..corpus.vocab import DEFAULT_SPECIALS, Vocabulary, build_vocab
from ..distill import (
    DistillConfig,
    backward_seqkd,
    concat_2ref,
    distill_manifest,
    forward_seqkd,
    make_bidir,
    paraphrase_report,
)
from ..errors import ConfigError
from ..metrics import bleu, conditional_entropy, faithfulness
from ..model.config import TransformerConfig
from ..model.decoding import beam_search, mask_predict
from ..model.training import (
    init_decoder_from,
    init_encoder_from,
    lang_tag,
    pretrain_asr,
    st_samples,
    train_mt,
    train_seq2seq,
)
from ..model.transformer import Seq2SeqModel
from .config import AR_ROWS, ExperimentConfig, NAR_ROWS, config_fingerprint

LANG_TAGS = ("<src>", "<tgt>")


@dataclass
class RowRecipe:
    dataset: str                  # variant key or "2ref:a+b"
    lambda_src: float = 0.0
    mt_decoder_init: bool = False
    mode: str = "ar"              # "ar" | "nar"
    description: str = ""


def row_recipes(lambda_src: float) -> dict[str, RowRecipe]:
    return {
        "A1": RowRecipe("real", 0.0, description="gold data"),
        "A2": RowRecipe("real", 0.0, mt_decoder_init=True, description="gold + MT decoder init"),
        "A3": RowRecipe("real", lambda_src, description="gold + joint transcription loss"),
        "A4": RowRecipe("bwd", lambda_src, description="gold targets + paraphrase source loss"),
        "B1": RowRecipe("fwd", 0.0, description="forward-distilled targets"),
        "B2": RowRecipe("fwd", 0.0, mt_decoder_init=True, description="fwd + MT decoder init"),
        "B3": RowRecipe("fwd", lambda_src, description="fwd + joint transcription loss"),
        "B4": RowRecipe("2ref:real+fwd", 0.0, description="two refs: gold and distilled"),
        "C1": RowRecipe("bidir", lambda_src, description="machine text on both sides"),
        "C2": RowRecipe("2ref:fwd+bwd", lambda_src, description="two refs: fwd and bwd sets"),
        "NAR-fwd": RowRecipe("fwd", 0.0, mode="nar", description="masked-LM on distilled targets"),
        "NAR-fwd-jointASR": RowRecipe("fwd", lambda_src, mode="nar",
                                      description="masked-LM + joint transcription loss"),
        "NAR-bidir": RowRecipe("bidir", lambda_src, mode="nar",
                               description="masked-LM, machine text on both sides"),
    }


TWO_REF_ABLATION = (
    ("real+fwd", "gold source kept in both refs"),
    ("real+bidir", "gold pair plus fully machine pair"),
    ("bwd+bidir", "paraphrased source in both refs"),
    ("fwd+bwd", "original reference on one side of each ref"),
)


def row_seed(base_seed: int, label: str) -> int:
    return (base_seed * 1000003 + zlib.crc32(label.encode())) % (2**31)


# ---------------------------------------------------------------------------
# world construction and splits


@dataclass
class World:
    seed: int
    vocab: Vocabulary
    dataset: StDataset            # full gold triplet dataset
    splits: dict                  # name -> StDataset
    synth: SpeechSynthesizer


def split_indices(utt_ids, train=8, dev=1, test=1) -> dict[str, list[int]]:
    """Stable 80/10/10-style split by utterance-id hash."""
    total = train + dev + test
    buckets: dict[str, list[int]] = {"train": [], "dev": [], "test": []}
    for i, utt in enumerate(utt_ids):
        h = int(hashlib.md5(utt.encode()).hexdigest(), 16) % total
        if h < train:
            buckets["train"].append(i)
        elif h < train + dev:
            buckets["dev"].append(i)
        else:
            buckets["test"].append(i)
    return buckets


def build_world(cfg: ExperimentConfig, seed: int) -> World:
    corpus = synth_toy_bitext(cfg.data.toygen(seed))
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
        [tok for s, _ in corpus.pairs for tok in s],
        feat_dim=cfg.data.feat_dim,
        repeat_range=(cfg.data.repeat_min, cfg.data.repeat_max),
        noise_sigma=cfg.data.noise_sigma,
        seed=seed,
    )
    dataset = build_st_dataset(corpus, synth, seed=seed)
    idx = split_indices(dataset.utt_ids())
    splits = {name: dataset.subset(ids) for name, ids in idx.items()}
    return World(seed=seed, vocab=vocab, dataset=dataset, splits=splits, synth=synth)


# ---------------------------------------------------------------------------
# per-seed stages


@dataclass
class SeedArtifacts:
    world: World
    mt_fwd: Seq2SeqModel | None = None
    mt_bwd: Seq2SeqModel | None = None
    asr: Seq2SeqModel | None = None
    datasets: dict = field(default_factory=dict)    # variant -> StDataset (train split)
    manifests: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)


def text_model_config(cfg: ExperimentConfig) -> TransformerConfig:
    return cfg.model.transformer("text", cfg.data.feat_dim)


def feature_model_config(cfg: ExperimentConfig) -> TransformerConfig:
    return cfg.model.transformer("features", cfg.data.feat_dim)


def prepare_seed(cfg: ExperimentConfig, seed: int, need_bwd: bool = True) -> SeedArtifacts:
    """Everything shared by the rows of one seed: data, teachers, variants."""
    t0 = time.perf_counter()
    world = build_world(cfg, seed)
    art = SeedArtifacts(world=world)
    art.datasets["real"] = world.splits["train"]
    art.timings["data"] = time.perf_counter() - t0

    train_pairs = world.splits["train"].text_pairs()
    dev_pairs = world.splits["dev"].text_pairs()
    tm_cfg = text_model_config(cfg)

    t0 = time.perf_counter()
    art.mt_fwd, _ = train_mt(
        train_pairs, "forward", world.vocab, tm_cfg,
        cfg.train_mt.train_config(row_seed(seed, "mt_fwd")), dev_corpus=dev_pairs,
    )
    art.timings["mt_fwd"] = time.perf_counter() - t0
    if need_bwd:
        t0 = time.perf_counter()
        art.mt_bwd, _ = train_mt(
            train_pairs, "backward", world.vocab, tm_cfg,
            cfg.train_mt.train_config(row_seed(seed, "mt_bwd")), dev_corpus=dev_pairs,
        )
        art.timings["mt_bwd"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    dcfg = DistillConfig(beam_width=cfg.decode.beam_width, max_len=cfg.decode.max_len, seed=seed)
    art.datasets["fwd"] = forward_seqkd(art.mt_fwd, world.splits["train"], dcfg)
    art.manifests["fwd"] = distill_manifest(art.mt_fwd, dcfg, "fwd")
    if need_bwd:
        art.datasets["bwd"] = backward_seqkd(art.mt_bwd, world.splits["train"], dcfg)
        art.manifests["bwd"] = distill_manifest(art.mt_bwd, dcfg, "bwd")
        art.datasets["bidir"] = make_bidir(art.datasets["fwd"], art.datasets["bwd"])
    art.timings["distill"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    art.asr, _ = pretrain_asr(
        world.splits["train"], world.vocab, feature_model_config(cfg),
        cfg.train_asr.train_config(row_seed(seed, "asr")),
        dev_dataset=world.splits["dev"],
    )
    art.timings["asr"] = time.perf_counter() - t0
    return art


def row_dataset(art: SeedArtifacts, recipe: RowRecipe) -> tuple[StDataset, list[str]]:
    key = recipe.dataset
    if key.startswith("2ref:"):
        a, b = key.removeprefix("2ref:").split("+")
        return concat_2ref(art.datasets[a], art.datasets[b]), [a, b]
    return art.datasets[key], [key]


def train_row(cfg: ExperimentConfig, art: SeedArtifacts, row: str) -> tuple[Seq2SeqModel, dict]:
    recipe = row_recipes(cfg.lambda_src)[row]
    dataset, variants = row_dataset(art, recipe)
    world = art.world
    seed = row_seed(world.seed, f"st:{row}")

    model = Seq2SeqModel.init(feature_model_config(cfg), world.vocab, seed=seed)
    init_encoder_from(model, art.asr)
    if recipe.mt_decoder_init or recipe.mode == "nar":
        # NAR training always warm-starts its auxiliary AR decoder from MT
        init_decoder_from(model, art.mt_fwd)

    samples = st_samples(dataset, with_src=recipe.lambda_src > 0)
    dev = st_samples(world.splits["dev"])[:100]  # checkpoint selection only
    train_cfg = cfg.train_st.train_config(seed, lambda_src=recipe.lambda_src)
    train_seq2seq(model, samples, train_cfg, mode=recipe.mode, dev_samples=dev, metric="bleu")

    manifest = {
        "row": row,
        "recipe": recipe.description,
        "datasets_used": variants,
        "target_side_distilled": any(v in ("fwd", "bidir") for v in variants),
        "source_side_distilled": any(v in ("bwd", "bidir") for v in variants),
        "lambda_src": recipe.lambda_src,
        "mode": recipe.mode,
        "generator_manifests": {v: art.manifests[v] for v in variants if v in art.manifests},
    }
    return model, manifest


def decode_testset(
    cfg: ExperimentConfig,
    art: SeedArtifacts,
    model: Seq2SeqModel,
    mode: str,
    nar_t: int | None = None,
) -> list[dict]:
    """Decode the held-out test split into utt-keyed hypothesis records."""
    world = art.world
    tag = lang_tag(world.dataset.tgt_lang)
    records = []
    for item in world.splits["test"].items:
        if mode == "ar":
            hyp = beam_search(model, item.speech, tag, cfg.decode.decode_config())
        else:
            hyp, _ = mask_predict(model, item.speech, tag, cfg.decode.decode_config(nar_t))
        records.append(
            {
                "utt_id": item.utt_id,
                "hyp": " ".join(hyp.text_tokens(world.vocab)),
                "score": round(hyp.normalized_score, 6),
                "variant": "test",
                "decoder": mode,
            }
        )
    return records


def score_records(records: list[dict], testset: StDataset) -> float:
    refs = {item.utt_id: item.tgt_text for item in testset.items}
    hyps = [tuple(r["hyp"].split()) for r in records]
    return bleu(hyps, [refs[r["utt_id"]] for r in records])


# ---------------------------------------------------------------------------
# analysis tables


def run_analysis(datasets: dict, options=None, kl_eps: float = 1e-6) -> dict:
    """Entropy and faithfulness for every variant and both directions.

    `datasets` maps variant name -> StDataset; the real variant must be
    present (it is the faithfulness baseline and is omitted from the
    faithfulness table because its self-divergence is identically zero).
    """
    if "real" not in datasets:
        raise ConfigError("analysis requires the real variant as baseline")
    options = options or {}
    directions = ("forward", "backward")
    aligned: dict = {}
    warnings: list[str] = []
    for variant in ("real", "fwd", "bwd", "bidir"):
        if variant not in datasets:
            warnings.append(f"variant {variant} missing; row omitted")
            continue
        pairs = datasets[variant].text_pairs()
        for direction in directions:
            _, aligned[(variant, direction)] = train_and_align(pairs, direction, **options)

    entropy: dict = {}
    for (variant, direction), ac in aligned.items():
        entropy.setdefault(variant, {})[direction] = conditional_entropy(ac, direction).value

    faith: dict = {}
    unseen: dict = {}
    for variant in ("fwd", "bwd", "bidir"):
        if (variant, "forward") not in aligned:
            continue
        faith[variant] = {}
        unseen[variant] = {}
        for direction in directions:
            report = faithfulness(aligned[("real", direction)], aligned[(variant, direction)],
                                  direction, eps=kl_eps)
            faith[variant][direction] = report.value
            unseen[variant][direction] = report.unseen_conditioning_words

    flags = list(warnings)
    if all(v in faith for v in ("fwd", "bwd", "bidir")):
        for direction in directions:
            lo, hi = sorted((faith["fwd"][direction], faith["bwd"][direction]))
            mid = faith["bidir"][direction]
            if not lo <= mid <= hi:
                flags.append(
                    f"faithfulness({direction}): bidir value {mid:.4f} outside "
                    f"[{lo:.4f}, {hi:.4f}] spanned by fwd/bwd"
                )
    return {"entropy": entropy, "faithfulness": faith,
            "unseen_conditioning_words": unseen, "flags": flags}


def analysis_options(cfg: ExperimentConfig) -> dict:
    a = cfg.analysis
    return {
        "iterations": a.iterations,
        "use_diagonal": a.use_diagonal,
        "p0": a.p0,
        "diag_lambda": a.diag_lambda,
        "alpha": a.alpha,
    }


# ---------------------------------------------------------------------------
# the full matrix


def _mean_std(values: list[float]) -> dict:
    arr = np.asarray(values, dtype=float)
    return {
        "mean": float(arr.mean()),
        "std": float(arr.std(ddof=0)),
        "per_seed": [float(x) for x in arr],
    }


def run_experiment(cfg: ExperimentConfig, artifact_sink=None) -> dict:
    """Run every requested row over every seed and aggregate the report.

    A row failure is recorded and the remaining rows continue. When an
    artifact sink (see io_stage.ArtifactSink) is provided, datasets, model
    checkpoints and decode records are persisted along the way.
    """
    recipes = row_recipes(cfg.lambda_src)
    need_bwd = any(
        recipes[row].dataset in ("bwd", "bidir") or "bwd" in recipes[row].dataset
        for row in cfg.rows
    ) or cfg.run_analysis or cfg.run_2ref_ablation or cfg.run_paraphrase_report

    rows_out: dict = {row: {"per_seed": {}, "manifest": None, "errors": {}} for row in cfg.rows}
    nar_rows = [r for r in cfg.rows if recipes[r].mode == "nar"]
    analysis_per_seed: list[dict] = []
    paraphrase_out: dict = {}
    ablation_out: dict = {}
    timings: dict = {}

    for seed in cfg.seeds:
        t_seed = time.perf_counter()
        art = prepare_seed(cfg, seed, need_bwd=need_bwd)
        world = art.world
        for stage, dt in art.timings.items():
            timings[f"prepare:{stage}:seed{seed}"] = dt
        if artifact_sink is not None:
            artifact_sink.save_seed_artifacts(cfg, seed, art)

        for row in cfg.rows:
            t0 = time.perf_counter()
            try:
                model, manifest = train_row(cfg, art, row)
                rows_out[row]["manifest"] = manifest
                if recipes[row].mode == "nar":
                    by_t = {}
                    for nar_t in cfg.decode.nar_iterations:
                        records = decode_testset(cfg, art, model, "nar", nar_t=nar_t)
                        by_t[str(nar_t)] = score_records(records, world.splits["test"])
                        if artifact_sink is not None:
                            artifact_sink.save_decodes(row, seed, records, nar_t=nar_t)
                    rows_out[row]["per_seed"][str(seed)] = by_t
                else:
                    records = decode_testset(cfg, art, model, "ar")
                    rows_out[row]["per_seed"][str(seed)] = score_records(
                        records, world.splits["test"]
                    )
                    if artifact_sink is not None:
                        artifact_sink.save_decodes(row, seed, records)
                if artifact_sink is not None:
                    artifact_sink.save_model(f"st_{row}", seed, model)
            except Exception as err:  # row isolation: record and continue
                rows_out[row]["errors"][str(seed)] = f"{type(err).__name__}: {err}"
            timings[f"row:{row}:seed{seed}"] = time.perf_counter() - t0

        if cfg.run_analysis:
            t0 = time.perf_counter()
            analysis_per_seed.append(
                run_analysis(art.datasets, analysis_options(cfg), kl_eps=cfg.analysis.kl_eps)
            )
            timings[f"analysis:seed{seed}"] = time.perf_counter() - t0

        if cfg.run_paraphrase_report and "bwd" in art.datasets:
            paraphrase_out.setdefault("src_side", {})[str(seed)] = paraphrase_report(
                art.datasets["real"], art.datasets["bwd"], side="src"
            )
            paraphrase_out.setdefault("tgt_side", {})[str(seed)] = paraphrase_report(
                art.datasets["real"], art.datasets["fwd"], side="tgt"
            )

        if cfg.run_2ref_ablation:
            for combo, gloss in TWO_REF_ABLATION:
                t0 = time.perf_counter()
                a, b = combo.split("+")
                dataset = concat_2ref(art.datasets[a], art.datasets[b])
                model = _train_2ref_combo(cfg, art, combo, dataset)
                records = decode_testset(cfg, art, model, "ar")
                ablation_out.setdefault(combo, {"description": gloss, "per_seed": {}})
                ablation_out[combo]["per_seed"][str(seed)] = score_records(
                    records, world.splits["test"]
                )
                timings[f"ablation:{combo}:seed{seed}"] = time.perf_counter() - t0
        timings[f"seed{seed}:total"] = time.perf_counter() - t_seed

    report = assemble_report(cfg, rows_out, nar_rows, analysis_per_seed, paraphrase_out, ablation_out)
    return {"report": report, "timings": timings}


def _train_2ref_combo(cfg, art, combo: str, dataset: StDataset) -> Seq2SeqModel:
    world = art.world
    seed = row_seed(world.seed, f"ablation:{combo}")
    model = Seq2SeqModel.init(feature_model_config(cfg), world.vocab, seed=seed)
    init_encoder_from(model, art.asr)
    samples = st_samples(dataset, with_src=True)
    dev = st_samples(world.splits["dev"])[:100]
    train_cfg = cfg.train_st.train_config(seed, lambda_src=cfg.lambda_src)
    train_seq2seq(model, samples, train_cfg, mode="ar", dev_samples=dev, metric="bleu")
    return model


def assemble_report(cfg, rows_out, nar_rows, analysis_per_seed, paraphrase_out, ablation_out) -> dict:
    rows_summary: dict = {}
    for row, data in rows_out.items():
        entry: dict = {
            "manifest": data["manifest"],
            "errors": data["errors"],
        }
        per_seed = data["per_seed"]
        if row in nar_rows:
            entry["bleu_by_iterations"] = {}
            for nar_t in {t for seed_vals in per_seed.values() for t in seed_vals}:
                vals = [seed_vals[nar_t] for seed_vals in per_seed.values() if nar_t in seed_vals]
                if vals:
                    entry["bleu_by_iterations"][nar_t] = _mean_std(vals)
        else:
            vals = list(per_seed.values())
            if vals:
                entry["bleu"] = _mean_std(vals)
        rows_summary[row] = entry

    baseline = rows_summary.get("A1", {}).get("bleu", {}).get("mean")
    if baseline is not None:
        for row, entry in rows_summary.items():
            if "bleu" in entry:
                entry["delta_vs_A1"] = entry["bleu"]["mean"] - baseline

    analysis_summary: dict = {}
    if analysis_per_seed:
        entropy: dict = {}
        faith: dict = {}
        for snap in analysis_per_seed:
            for variant, dirs in snap["entropy"].items():
                for direction, value in dirs.items():
                    entropy.setdefault(variant, {}).setdefault(direction, []).append(value)
            for variant, dirs in snap["faithfulness"].items():
                for direction, value in dirs.items():
                    faith.setdefault(variant, {}).setdefault(direction, []).append(value)
        analysis_summary = {
            "entropy": {
                v: {d: _mean_std(vals) for d, vals in dirs.items()} for v, dirs in entropy.items()
            },
            "faithfulness": {
                v: {d: _mean_std(vals) for d, vals in dirs.items()} for v, dirs in faith.items()
            },
            "flags": sorted({f for snap in analysis_per_seed for f in snap["flags"]}),
        }

    paraphrase_summary: dict = {}
    for side, by_seed in paraphrase_out.items():
        paraphrase_summary[side] = {
            "bleu": _mean_std([r["bleu"] for r in by_seed.values()]),
            "ter": _mean_std([r["ter"] for r in by_seed.values()]),
            "exact_match_rate": _mean_std([r["exact_match_rate"] for r in by_seed.values()]),
            "samples": next(iter(by_seed.values()))["samples"],
        }

    ablation_summary: dict = {}
    for combo, data in ablation_out.items():
        ablation_summary[combo] = {
            "description": data["description"],
            "bleu": _mean_std(list(data["per_seed"].values())),
        }

    return {
        "config_fingerprint": config_fingerprint(cfg),
        "seeds": list(cfg.seeds),
        "rows": rows_summary,
        "analysis": analysis_summary,
        "paraphrase": paraphrase_summary,
        "ablation_2ref": ablation_summary,
    }
