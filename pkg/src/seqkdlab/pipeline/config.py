"""Experiment configuration: defaults, YAML round-trip, fingerprinting."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

from ..corpus.toygen import ToyGenConfig
from ..errors import ConfigError
from ..model.config import DecodeConfig, TrainConfig, TransformerConfig

AR_ROWS = ("A1", "A2", "A3", "A4", "B1", "B2", "B3", "B4", "C1", "C2")
NAR_ROWS = ("NAR-fwd", "NAR-fwd-jointASR", "NAR-bidir")
ALL_ROWS = AR_ROWS + NAR_ROWS


@dataclass(frozen=True)
class DataConfig:
    src_vocab_size: int = 30
    tgt_vocab_size: int = 24
    sent_len_min: int = 3
    sent_len_max: int = 8
    k: int = 3
    ambiguous_frac: float = 0.4   # share of source types with k-way targets
    reorder_p: float = 0.1
    corpus_size: int = 2000
    feat_dim: int = 16
    repeat_min: int = 1
    repeat_max: int = 3
    noise_sigma: float = 0.05
    case_markers: bool = False

    def toygen(self, seed: int) -> ToyGenConfig:
        return ToyGenConfig(
            src_vocab_size=self.src_vocab_size,
            tgt_vocab_size=self.tgt_vocab_size,
            sent_len_range=(self.sent_len_min, self.sent_len_max),
            k=self.k,
            ambiguous_frac=self.ambiguous_frac,
            reorder_p=self.reorder_p,
            corpus_size=self.corpus_size,
            seed=seed,
            case_markers=self.case_markers,
        )


@dataclass(frozen=True)
class ModelSection:
    num_encoder_layers: int = 2
    num_decoder_layers: int = 2
    d_model: int = 64
    d_ff: int = 256
    num_heads: int = 4
    dropout: float = 0.0
    max_len: int = 24

    def transformer(self, input_mode: str, feat_dim: int) -> TransformerConfig:
        return TransformerConfig(
            num_encoder_layers=self.num_encoder_layers,
            num_decoder_layers=self.num_decoder_layers,
            d_model=self.d_model,
            d_ff=self.d_ff,
            num_heads=self.num_heads,
            dropout=self.dropout,
            input_mode=input_mode,
            feat_dim=feat_dim,
            max_len=self.max_len,
        )


@dataclass(frozen=True)
class TrainSection:
    epochs: int = 30
    batch_size: int = 64
    label_smoothing: float = 0.1
    lr_factor: float = 1.0
    warmup_steps: int = 300
    average_best: int = 5
    lambda_ar: float = 0.3
    lambda_lp: float = 0.1
    smart_refinement: bool = True

    def train_config(self, seed: int, lambda_src: float = 0.0, validate: bool = True) -> TrainConfig:
        return TrainConfig(
            lambda_src=lambda_src,
            lambda_ar=self.lambda_ar,
            lambda_lp=self.lambda_lp,
            smart_refinement=self.smart_refinement,
            epochs=self.epochs,
            batch_size=self.batch_size,
            label_smoothing=self.label_smoothing,
            lr_factor=self.lr_factor,
            warmup_steps=self.warmup_steps,
            seed=seed,
            average_best=self.average_best,
            validate=validate,
        )


@dataclass(frozen=True)
class DecodeSection:
    beam_width: int = 4
    nar_iterations: tuple[int, ...] = (4, 10)
    length_beam: int = 9
    max_len: int = 24

    def decode_config(self, nar_t: int | None = None) -> DecodeConfig:
        return DecodeConfig(
            beam_width=self.beam_width,
            nar_iterations=nar_t or self.nar_iterations[-1],
            length_beam=self.length_beam,
            max_len=self.max_len,
        )


@dataclass(frozen=True)
class AnalysisSection:
    iterations: int = 5
    use_diagonal: bool = True
    p0: float = 0.08
    diag_lambda: float = 4.0
    alpha: float = 0.01
    kl_eps: float = 1e-6


@dataclass(frozen=True)
class ExperimentConfig:
    data: DataConfig = field(default_factory=DataConfig)
    model: ModelSection = field(default_factory=ModelSection)
    train_mt: TrainSection = field(default_factory=lambda: TrainSection(epochs=30, lr_factor=0.5, warmup_steps=200))
    train_asr: TrainSection = field(default_factory=lambda: TrainSection(epochs=30))
    train_st: TrainSection = field(default_factory=lambda: TrainSection(epochs=35))
    decode: DecodeSection = field(default_factory=DecodeSection)
    analysis: AnalysisSection = field(default_factory=AnalysisSection)
    rows: tuple[str, ...] = ("A1", "B1")
    seeds: tuple[int, ...] = (1, 2, 3)
    lambda_src: float = 0.3
    run_analysis: bool = True
    run_paraphrase_report: bool = True
    run_2ref_ablation: bool = False

    def __post_init__(self):
        for row in self.rows:
            if row not in ALL_ROWS:
                raise ConfigError(f"unknown experiment row {row!r}")
        if not self.seeds:
            raise ConfigError("need at least one seed")


_SECTIONS = {
    "data": DataConfig,
    "model": ModelSection,
    "train_mt": TrainSection,
    "train_asr": TrainSection,
    "train_st": TrainSection,
    "decode": DecodeSection,
    "analysis": AnalysisSection,
}
_LISTY = {"rows", "seeds", "nar_iterations"}


def _build_section(cls, payload: dict, where: str):
    valid = {f.name for f in fields(cls)}
    kwargs = {}
    for key, value in payload.items():
        if key not in valid:
            raise ConfigError(f"unknown key {where}.{key}")
        kwargs[key] = tuple(value) if key in _LISTY and isinstance(value, list) else value
    return cls(**kwargs)


def config_from_dict(payload: dict) -> ExperimentConfig:
    payload = dict(payload or {})
    kwargs = {}
    for name, cls in _SECTIONS.items():
        if name in payload:
            section = payload.pop(name)
            if not isinstance(section, dict):
                raise ConfigError(f"section {name} must be a mapping")
            kwargs[name] = _build_section(cls, section, name)
    top_valid = {f.name for f in fields(ExperimentConfig)}
    for key, value in payload.items():
        if key not in top_valid:
            raise ConfigError(f"unknown config key {key}")
        kwargs[key] = tuple(value) if key in _LISTY and isinstance(value, list) else value
    return ExperimentConfig(**kwargs)


def load_config(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    with open(path, encoding="utf-8") as fh:
        payload = yaml.safe_load(fh)
    return config_from_dict(payload or {})


def config_to_dict(cfg: ExperimentConfig) -> dict:
    out = asdict(cfg)
    return json.loads(json.dumps(out))  # tuples -> lists, plain types only


def dump_config(cfg: ExperimentConfig, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config_to_dict(cfg), fh, sort_keys=True)


def config_fingerprint(cfg: ExperimentConfig) -> str:
    blob = json.dumps(config_to_dict(cfg), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def with_overrides(
    cfg: ExperimentConfig,
    seed: int | None = None,
    rows: list[str] | None = None,
) -> ExperimentConfig:
    if seed is not None:
        cfg = replace(cfg, seeds=(seed,))
    if rows:
        cfg = replace(cfg, rows=tuple(rows))
    return cfg
