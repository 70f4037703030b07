"""Command-line experiment driver.

Stage subcommands persist and consume artifacts under --out, so a matrix
run can also be reproduced piecewise:

    seqkdlab gen-data   --config cfg.yaml --seed 1 --out run/
    seqkdlab train-mt   --direction forward --seed 1 --out run/
    seqkdlab distill    --variants fwd,bwd,bidir --seed 1 --out run/
    seqkdlab train-st   --rows B1 --seed 1 --out run/
    seqkdlab decode     --rows B1 --seed 1 --out run/
    seqkdlab score      --rows B1 --seed 1 --out run/
    seqkdlab analyze    --seed 1 --out run/
    seqkdlab run-matrix --config cfg.yaml --out run/
    seqkdlab report     --out run/ --format markdown

Exit code is 0 on success; failures print a JSON error record to stderr
and exit nonzero.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..corpus.data import StDataset
from ..distill import DistillConfig, backward_seqkd, distill_manifest, forward_seqkd, make_bidir
from ..errors import ConfigError, IoError, SeqKdLabError
from ..metrics import bleu, ter
from ..model.training import pretrain_asr, train_mt
from ..model.transformer import Seq2SeqModel
from .artifacts import ArtifactSink
from .config import (
    ExperimentConfig,
    config_to_dict,
    dump_config,
    load_config,
    with_overrides,
)
from .experiment import (
    analysis_options,
    build_world,
    decode_testset,
    feature_model_config,
    prepare_seed,
    row_recipes,
    row_seed,
    run_analysis,
    run_experiment,
    score_records,
    text_model_config,
    train_row,
)
from .reporting import report_to_json, report_to_markdown, write_report


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, default=None, help="YAML config file")
    parser.add_argument("--seed", type=int, default=None, help="override the seed list")
    parser.add_argument("--rows", type=str, default=None, help="comma-separated row ids")
    parser.add_argument("--out", type=str, required=True, help="artifact directory")


def _setup(args) -> tuple[ExperimentConfig, ArtifactSink, int]:
    cfg = load_config(args.config)
    rows = args.rows.split(",") if getattr(args, "rows", None) else None
    cfg = with_overrides(cfg, seed=args.seed, rows=rows)
    sink = ArtifactSink(args.out)
    return cfg, sink, cfg.seeds[0]


def _rebuild_world(cfg: ExperimentConfig, sink: ArtifactSink, seed: int):
    """Load the persisted dataset and splits for one seed."""
    vocab = sink.load_vocab(seed)
    dataset = sink.load_dataset("real", seed)
    split_ids = sink.load_splits(seed)
    by_id = {item.utt_id: i for i, item in enumerate(dataset.items)}
    splits = {
        name: dataset.subset([by_id[u] for u in utts]) for name, utts in split_ids.items()
    }
    return vocab, dataset, splits


def cmd_gen_data(args) -> int:
    cfg, sink, seed = _setup(args)
    world = build_world(cfg, seed)
    from ..corpus.io import save_st_jsonl

    save_st_jsonl(world.dataset, sink.data_path("real", seed), sink.feats_path(seed))
    sink.vocab_path(seed).write_text(
        json.dumps(world.vocab.to_dict(), sort_keys=True), encoding="utf-8"
    )
    splits = {name: list(ds.utt_ids()) for name, ds in world.splits.items()}
    (sink.root / "data" / f"splits_seed{seed}.json").write_text(
        json.dumps(splits, sort_keys=True), encoding="utf-8"
    )
    dump_config(cfg, sink.root / "config.lock.yaml")
    print(json.dumps({"dataset": str(sink.data_path("real", seed)), "items": len(world.dataset)}))
    return 0


def cmd_train_mt(args) -> int:
    cfg, sink, seed = _setup(args)
    vocab, _, splits = _rebuild_world(cfg, sink, seed)
    name = "mt_fwd" if args.direction == "forward" else "mt_bwd"
    model, log = train_mt(
        splits["train"].text_pairs(),
        args.direction,
        vocab,
        text_model_config(cfg),
        cfg.train_mt.train_config(row_seed(seed, name)),
        dev_corpus=splits["dev"].text_pairs(),
    )
    sink.save_model(name, seed, model)
    print(json.dumps({"model": str(sink.model_path(name, seed)),
                      "val_bleu": log.val_metrics[-1] if log.val_metrics else None}))
    return 0


def cmd_distill(args) -> int:
    cfg, sink, seed = _setup(args)
    vocab, _, splits = _rebuild_world(cfg, sink, seed)
    variants = args.variants.split(",")
    dcfg = DistillConfig(beam_width=cfg.decode.beam_width, max_len=cfg.decode.max_len, seed=seed)
    built: dict[str, StDataset] = {}
    tmc = text_model_config(cfg)
    if {"fwd", "bidir"} & set(variants):
        fwd_model = sink.load_model_into(Seq2SeqModel.init(tmc, vocab, 0), "mt_fwd", seed)
        built["fwd"] = forward_seqkd(fwd_model, splits["train"], dcfg)
        sinks_manifest = distill_manifest(fwd_model, dcfg, "fwd")
        (sink.root / "data" / f"manifest_fwd_seed{seed}.json").write_text(
            json.dumps(sinks_manifest, sort_keys=True), encoding="utf-8"
        )
    if {"bwd", "bidir"} & set(variants):
        bwd_model = sink.load_model_into(Seq2SeqModel.init(tmc, vocab, 0), "mt_bwd", seed)
        built["bwd"] = backward_seqkd(bwd_model, splits["train"], dcfg)
        manifest = distill_manifest(bwd_model, dcfg, "bwd")
        (sink.root / "data" / f"manifest_bwd_seed{seed}.json").write_text(
            json.dumps(manifest, sort_keys=True), encoding="utf-8"
        )
    if "bidir" in variants:
        built["bidir"] = make_bidir(built["fwd"], built["bwd"])
    from ..corpus.io import save_st_jsonl

    written = []
    for variant in variants:
        if variant not in built:
            raise ConfigError(f"unknown distillation variant {variant!r}")
        save_st_jsonl(built[variant], sink.data_path(variant, seed))
        written.append(str(sink.data_path(variant, seed)))
    print(json.dumps({"written": written}))
    return 0


def _seed_artifacts_from_disk(cfg, sink, seed):
    """Reassemble prepare_seed() outputs from persisted artifacts, training
    the ASR encoder on demand (it has no dedicated stage command)."""
    from .experiment import SeedArtifacts, World, row_recipes as _rr

    vocab, dataset, splits = _rebuild_world(cfg, sink, seed)
    world = World(seed=seed, vocab=vocab, dataset=dataset, splits=splits, synth=None)
    art = SeedArtifacts(world=world)
    art.datasets["real"] = splits["train"]
    for variant in ("fwd", "bwd", "bidir"):
        if sink.data_path(variant, seed).exists():
            art.datasets[variant] = sink.load_dataset(variant, seed)
            mpath = sink.root / "data" / f"manifest_{variant}_seed{seed}.json"
            if mpath.exists():
                art.manifests[variant] = json.loads(mpath.read_text(encoding="utf-8"))
    tmc = text_model_config(cfg)
    if sink.model_path("mt_fwd", seed).exists():
        art.mt_fwd = sink.load_model_into(Seq2SeqModel.init(tmc, vocab, 0), "mt_fwd", seed)
    if sink.model_path("mt_bwd", seed).exists():
        art.mt_bwd = sink.load_model_into(Seq2SeqModel.init(tmc, vocab, 0), "mt_bwd", seed)
    if sink.model_path("asr", seed).exists():
        art.asr = sink.load_model_into(
            Seq2SeqModel.init(feature_model_config(cfg), vocab, 0), "asr", seed
        )
    else:
        art.asr, _ = pretrain_asr(
            splits["train"], vocab, feature_model_config(cfg),
            cfg.train_asr.train_config(row_seed(seed, "asr")),
            dev_dataset=splits["dev"],
        )
        sink.save_model("asr", seed, art.asr)
    return art


def cmd_train_st(args) -> int:
    cfg, sink, seed = _setup(args)
    art = _seed_artifacts_from_disk(cfg, sink, seed)
    out = {}
    for row in cfg.rows:
        model, manifest = train_row(cfg, art, row)
        sink.save_model(f"st_{row}", seed, model)
        (sink.root / "models" / f"st_{row}_seed{seed}.manifest.json").write_text(
            json.dumps(manifest, sort_keys=True), encoding="utf-8"
        )
        out[row] = str(sink.model_path(f"st_{row}", seed))
    print(json.dumps({"models": out}))
    return 0


def cmd_decode(args) -> int:
    cfg, sink, seed = _setup(args)
    art = _seed_artifacts_from_disk(cfg, sink, seed)
    recipes = row_recipes(cfg.lambda_src)
    written = []
    for row in cfg.rows:
        model = sink.load_model_into(
            Seq2SeqModel.init(feature_model_config(cfg), art.world.vocab, 0), f"st_{row}", seed
        )
        mode = recipes[row].mode
        if mode == "nar":
            for nar_t in cfg.decode.nar_iterations:
                records = decode_testset(cfg, art, model, "nar", nar_t=nar_t)
                sink.save_decodes(row, seed, records, nar_t=nar_t)
                written.append(str(sink.decode_path(row, seed, nar_t)))
        else:
            records = decode_testset(cfg, art, model, "ar")
            sink.save_decodes(row, seed, records)
            written.append(str(sink.decode_path(row, seed)))
    print(json.dumps({"written": written}))
    return 0


def cmd_score(args) -> int:
    cfg, sink, seed = _setup(args)
    _, _, splits = _rebuild_world(cfg, sink, seed)
    refs = {item.utt_id: item.tgt_text for item in splits["test"].items}
    recipes = row_recipes(cfg.lambda_src)
    scores: dict = {}
    for row in cfg.rows:
        t_list = cfg.decode.nar_iterations if recipes[row].mode == "nar" else [None]
        for nar_t in t_list:
            path = sink.decode_path(row, seed, nar_t)
            if not path.exists():
                raise IoError(f"no decodes at {path}; run decode first")
            records = [json.loads(line) for line in path.read_text().splitlines() if line]
            hyps = [tuple(r["hyp"].split()) for r in records]
            ref_list = [refs[r["utt_id"]] for r in records]
            key = row if nar_t is None else f"{row}@T{nar_t}"
            scores[key] = {"bleu": bleu(hyps, ref_list), "ter": ter(hyps, ref_list)}
    print(json.dumps(scores, sort_keys=True, indent=2))
    return 0


def cmd_analyze(args) -> int:
    cfg, sink, seed = _setup(args)
    art = _seed_artifacts_from_disk(cfg, sink, seed)
    result = run_analysis(art.datasets, analysis_options(cfg), kl_eps=cfg.analysis.kl_eps)
    out_path = sink.root / f"analysis_seed{seed}.json"
    out_path.write_text(json.dumps(result, sort_keys=True, indent=2), encoding="utf-8")
    print(json.dumps(result, sort_keys=True, indent=2))
    return 0


def cmd_run_matrix(args) -> int:
    cfg = load_config(args.config)
    rows = args.rows.split(",") if args.rows else None
    cfg = with_overrides(cfg, seed=args.seed, rows=rows)
    sink = ArtifactSink(args.out)
    dump_config(cfg, sink.root / "config.lock.yaml")
    result = run_experiment(cfg, artifact_sink=sink)
    write_report(result["report"], sink.root / "report.json", fmt="json")
    write_report(result["report"], sink.root / "report.md", fmt="markdown")
    (sink.root / "timings.json").write_text(
        json.dumps(result["timings"], sort_keys=True, indent=2), encoding="utf-8"
    )
    print(json.dumps({"report": str(sink.root / "report.json")}))
    return 0


def cmd_report(args) -> int:
    root = Path(args.out)
    report_path = root / "report.json"
    if not report_path.exists():
        raise IoError(f"no report at {report_path}; run run-matrix first")
    report = json.loads(report_path.read_text(encoding="utf-8"))
    if args.format == "markdown":
        out = root / "report.md"
        out.write_text(report_to_markdown(report), encoding="utf-8")
        print(json.dumps({"written": str(out)}))
    else:
        sys.stdout.write(report_to_json(report))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqkdlab",
        description="Desk-scale bidirectional sequence-level distillation experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate the synthetic triplet dataset")
    _add_common(p)
    p.set_defaults(fn=cmd_gen_data)

    p = sub.add_parser("train-mt", help="train a text translation model")
    _add_common(p)
    p.add_argument("--direction", choices=("forward", "backward"), default="forward")
    p.set_defaults(fn=cmd_train_mt)

    p = sub.add_parser("distill", help="build distilled dataset variants")
    _add_common(p)
    p.add_argument("--variants", type=str, default="fwd,bwd,bidir")
    p.set_defaults(fn=cmd_distill)

    p = sub.add_parser("train-st", help="train speech-translation rows")
    _add_common(p)
    p.set_defaults(fn=cmd_train_st)

    p = sub.add_parser("decode", help="decode the test split for trained rows")
    _add_common(p)
    p.set_defaults(fn=cmd_decode)

    p = sub.add_parser("score", help="score persisted decodes")
    _add_common(p)
    p.set_defaults(fn=cmd_score)

    p = sub.add_parser("analyze", help="entropy/faithfulness tables")
    _add_common(p)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("run-matrix", help="run the full experiment matrix")
    _add_common(p)
    p.set_defaults(fn=cmd_run_matrix)

    p = sub.add_parser("report", help="render a persisted report")
    p.add_argument("--out", type=str, required=True)
    p.add_argument("--format", choices=("json", "markdown"), default="json")
    p.set_defaults(fn=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except SeqKdLabError as err:
        sys.stderr.write(json.dumps({"error": type(err).__name__, "message": str(err)}) + "\n")
        return 1
    except Exception as err:  # unexpected: still emit a JSON record
        sys.stderr.write(json.dumps({"error": type(err).__name__, "message": str(err)}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
