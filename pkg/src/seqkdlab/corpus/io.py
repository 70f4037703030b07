"""Dataset file formats.

Text: TSV (`src<TAB>tgt` for bitext, `utt_id<TAB>src<TAB>tgt` for triplet
datasets) or JSONL (one `{utt_id, src, tgt, variant}` object per line).
Features live in a sidecar binary keyed by utt_id; each record is
    id_len:u32 | utt_id utf-8 | num_frames:u32 | feat_dim:u32 | f32 LE frames
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import IoError, ParseError
from .data import FeatureSeq, ParallelCorpus, StDataset, StItem


def save_parallel_tsv(corpus: ParallelCorpus, path: str | Path) -> None:
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for src, tgt in corpus.pairs:
                fh.write(f"{' '.join(src)}\t{' '.join(tgt)}\n")
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def load_parallel_tsv(path: str | Path, src_lang: str = "src", tgt_lang: str = "tgt") -> ParallelCorpus:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise ParseError(f"expected 2 tab-separated columns, got {len(cols)}", lineno)
            src, tgt = cols
            if not src.strip() or not tgt.strip():
                raise ParseError("empty sentence", lineno)
            pairs.append((tuple(src.split()), tuple(tgt.split())))
    return ParallelCorpus(pairs=tuple(pairs), src_lang=src_lang, tgt_lang=tgt_lang)


def save_features(dataset: StDataset, path: str | Path) -> None:
    path = Path(path)
    try:
        with open(path, "wb") as fh:
            for item in dataset.items:
                raw = item.utt_id.encode("utf-8")
                fh.write(struct.pack("<I", len(raw)))
                fh.write(raw)
                frames = item.speech.frames
                fh.write(struct.pack("<II", frames.shape[0], frames.shape[1]))
                fh.write(np.ascontiguousarray(frames, dtype="<f4").tobytes())
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def load_features(path: str | Path) -> dict[str, FeatureSeq]:
    blob = Path(path).read_bytes()
    off = 0
    feats: dict[str, FeatureSeq] = {}
    rec = 0
    while off < len(blob):
        rec += 1
        try:
            (id_len,) = struct.unpack_from("<I", blob, off)
            off += 4
            utt_id = blob[off : off + id_len].decode("utf-8")
            off += id_len
            t, d = struct.unpack_from("<II", blob, off)
            off += 8
            frames = np.frombuffer(blob, dtype="<f4", count=t * d, offset=off).reshape(t, d)
            off += 4 * t * d
        except (struct.error, ValueError) as e:
            raise ParseError(f"truncated feature record: {e}", rec) from e
        feats[utt_id] = FeatureSeq(frames.copy())
    return feats


def save_st_tsv(dataset: StDataset, path: str | Path) -> None:
    """Text part only; pair with save_features for the full dataset."""
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for item in dataset.items:
                fh.write(f"{item.utt_id}\t{' '.join(item.src_text)}\t{' '.join(item.tgt_text)}\n")
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def load_st_tsv(
    path: str | Path,
    features_path: str | Path,
    variant: str = "real",
    src_lang: str = "src",
    tgt_lang: str = "tgt",
) -> StDataset:
    feats = load_features(features_path)
    items = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise ParseError(f"expected 3 tab-separated columns, got {len(cols)}", lineno)
            utt_id, src, tgt = cols
            if utt_id not in feats:
                raise ParseError(f"no features for utterance {utt_id!r}", lineno)
            if not src.strip() or not tgt.strip():
                raise ParseError("empty sentence", lineno)
            items.append(
                StItem(
                    utt_id=utt_id,
                    speech=feats[utt_id],
                    src_text=tuple(src.split()),
                    tgt_text=tuple(tgt.split()),
                    origin=variant,
                )
            )
    return StDataset(items=tuple(items), variant=variant, src_lang=src_lang, tgt_lang=tgt_lang)


def save_st_jsonl(
    dataset: StDataset,
    path: str | Path,
    features_path: str | Path | None = None,
) -> None:
    path = Path(path)
    header = {
        "dataset_variant": dataset.variant,
        "parents": list(dataset.parents),
        "src_lang": dataset.src_lang,
        "tgt_lang": dataset.tgt_lang,
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"header": header}, sort_keys=True) + "\n")
            for item in dataset.items:
                obj = {
                    "utt_id": item.utt_id,
                    "src": " ".join(item.src_text),
                    "tgt": " ".join(item.tgt_text),
                    "variant": item.origin,
                }
                if item.degenerate:
                    obj["degenerate"] = True
                fh.write(json.dumps(obj, sort_keys=True) + "\n")
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e
    if features_path is not None:
        save_features(dataset, features_path)


def load_st_jsonl(path: str | Path, features_path: str | Path) -> StDataset:
    feats = load_features(features_path)
    items = []
    header: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"invalid JSON: {e.msg}", lineno) from e
            if "header" in obj:
                header = obj["header"]
                continue
            for key in ("utt_id", "src", "tgt", "variant"):
                if key not in obj:
                    raise ParseError(f"missing field {key!r}", lineno)
            utt_id = obj["utt_id"]
            if utt_id not in feats:
                raise ParseError(f"no features for utterance {utt_id!r}", lineno)
            items.append(
                StItem(
                    utt_id=utt_id,
                    speech=feats[utt_id],
                    src_text=tuple(obj["src"].split()),
                    tgt_text=tuple(obj["tgt"].split()),
                    origin=obj["variant"],
                    degenerate=bool(obj.get("degenerate", False)),
                )
            )
    return StDataset(
        items=tuple(items),
        variant=header.get("dataset_variant", "real"),
        parents=tuple(header.get("parents", ())),
        src_lang=header.get("src_lang", "src"),
        tgt_lang=header.get("tgt_lang", "tgt"),
    )
