"""On-disk artifact layout shared by the CLI stages and the matrix runner.

    out/
      config.lock.yaml
      data/   real_seed{S}.jsonl + real_seed{S}.feats + vocab_seed{S}.json
              fwd_seed{S}.jsonl ... (text only; features shared with real)
              manifest_{variant}_seed{S}.json, splits_seed{S}.json
      models/ mt_fwd_seed{S}.ckpt, mt_bwd_seed{S}.ckpt, asr_seed{S}.ckpt,
              st_{row}_seed{S}.ckpt
      decodes/{row}[_T{t}]_seed{S}.jsonl
      report.json, report.md, timings.json
"""
from __future__ import annotations

import json
from pathlib import Path

from ..corpus.io import load_st_jsonl, save_st_jsonl
from ..corpus.vocab import Vocabulary
from ..errors import IoError
from ..model.transformer import Seq2SeqModel
from ..tensor import load_checkpoint, save_checkpoint


class ArtifactSink:
    def __init__(self, out_dir: str | Path):
        self.root = Path(out_dir)
        for sub in ("data", "models", "decodes"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)

    # -- paths ---------------------------------------------------------------

    def data_path(self, variant: str, seed: int) -> Path:
        return self.root / "data" / f"{variant}_seed{seed}.jsonl"

    def feats_path(self, seed: int) -> Path:
        return self.root / "data" / f"real_seed{seed}.feats"

    def vocab_path(self, seed: int) -> Path:
        return self.root / "data" / f"vocab_seed{seed}.json"

    def model_path(self, name: str, seed: int) -> Path:
        return self.root / "models" / f"{name}_seed{seed}.ckpt"

    def decode_path(self, row: str, seed: int, nar_t: int | None = None) -> Path:
        suffix = f"_T{nar_t}" if nar_t is not None else ""
        return self.root / "decodes" / f"{row}{suffix}_seed{seed}.jsonl"

    # -- writers ---------------------------------------------------------------

    def save_seed_artifacts(self, cfg, seed: int, art) -> None:
        world = art.world
        save_st_jsonl(world.dataset, self.data_path("real", seed), self.feats_path(seed))
        self.vocab_path(seed).write_text(
            json.dumps(world.vocab.to_dict(), sort_keys=True), encoding="utf-8"
        )
        splits = {name: list(ds.utt_ids()) for name, ds in world.splits.items()}
        (self.root / "data" / f"splits_seed{seed}.json").write_text(
            json.dumps(splits, sort_keys=True), encoding="utf-8"
        )
        for variant, ds in art.datasets.items():
            if variant == "real":
                continue
            save_st_jsonl(ds, self.data_path(variant, seed))
            manifest = art.manifests.get(variant)
            if manifest:
                (self.root / "data" / f"manifest_{variant}_seed{seed}.json").write_text(
                    json.dumps(manifest, sort_keys=True), encoding="utf-8"
                )
        for name, model in (("mt_fwd", art.mt_fwd), ("mt_bwd", art.mt_bwd), ("asr", art.asr)):
            if model is not None:
                self.save_model(name, seed, model)

    def save_model(self, name: str, seed: int, model: Seq2SeqModel) -> None:
        save_checkpoint(model.param_arrays(), self.model_path(name, seed))

    def save_decodes(self, row: str, seed: int, records: list[dict], nar_t: int | None = None) -> None:
        path = self.decode_path(row, seed, nar_t)
        with open(path, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")

    # -- readers ---------------------------------------------------------------

    def load_vocab(self, seed: int) -> Vocabulary:
        path = self.vocab_path(seed)
        if not path.exists():
            raise IoError(f"no vocabulary at {path}; run gen-data first")
        return Vocabulary.from_dict(json.loads(path.read_text(encoding="utf-8")))

    def load_dataset(self, variant: str, seed: int):
        path = self.data_path(variant, seed)
        if not path.exists():
            raise IoError(f"no dataset at {path}")
        return load_st_jsonl(path, self.feats_path(seed))

    def load_splits(self, seed: int) -> dict:
        path = self.root / "data" / f"splits_seed{seed}.json"
        return json.loads(path.read_text(encoding="utf-8"))

    def load_model_into(self, model: Seq2SeqModel, name: str, seed: int) -> Seq2SeqModel:
        path = self.model_path(name, seed)
        if not path.exists():
            raise IoError(f"no checkpoint at {path}")
        model.load_param_arrays(load_checkpoint(path))
        return model
