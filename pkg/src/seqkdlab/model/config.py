"""Model, training and decoding configuration."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..errors import ConfigError


@dataclass(frozen=True)
class TransformerConfig:
    """Encoder-decoder dimensions and input mode.

    Feature mode prepends two stride-2 kernel-3 convolution blocks, giving
    4-fold time downsampling; text mode embeds tokens directly. The desk
    preset keeps CPU runs in the minutes range; ``paper_preset`` mirrors the
    full-scale configuration.
    """

    num_encoder_layers: int = 2
    num_decoder_layers: int = 2
    d_model: int = 64
    d_ff: int = 256
    num_heads: int = 4
    dropout: float = 0.0
    input_mode: str = "text"  # "text" | "features"
    feat_dim: int = 16
    max_len: int = 24         # length-head classes 1..max_len; decode cap
    conv_kernel: int = 3
    conv_stride: int = 2

    def __post_init__(self):
        if self.d_model % self.num_heads != 0:
            raise ConfigError("d_model must be divisible by num_heads")
        if self.num_encoder_layers < 1 or self.num_decoder_layers < 1:
            raise ConfigError("need at least one encoder and one decoder layer")
        if self.input_mode not in ("text", "features"):
            raise ConfigError(f"unknown input mode {self.input_mode!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")

    @classmethod
    def paper_preset(cls, input_mode: str = "features") -> "TransformerConfig":
        # 12 speech-encoder layers (6 for text MT), 6 decoder layers
        return cls(
            num_encoder_layers=12 if input_mode == "features" else 6,
            num_decoder_layers=6,
            d_model=256,
            d_ff=2048,
            num_heads=4,
            dropout=0.1,
            input_mode=input_mode,
            feat_dim=83,
            max_len=64,
        )

    def downsampled_len(self, n: int) -> int:
        out = n
        for _ in range(2):
            out = math.ceil(out / self.conv_stride)
        return out


@dataclass(frozen=True)
class TrainConfig:
    """Weights for the joint objectives plus optimizer/schedule settings."""

    lambda_src: float = 0.0
    lambda_ar: float = 0.3   # auxiliary AR loss weight (NAR training)
    lambda_lp: float = 0.1   # length-prediction loss weight (NAR training)
    smart_refinement: bool = False
    epochs: int = 20
    batch_size: int = 32
    label_smoothing: float = 0.1
    lr_factor: float = 0.5
    warmup_steps: int = 200
    seed: int = 0
    average_best: int = 5    # checkpoints averaged at the end of training
    validate: bool = True

    def __post_init__(self):
        for name in ("lambda_src", "lambda_ar", "lambda_lp"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ConfigError(f"{name} must be finite and non-negative")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")


@dataclass(frozen=True)
class DecodeConfig:
    """Inference-time settings for both decoder branches."""

    beam_width: int = 4
    nar_iterations: int = 10   # T
    length_beam: int = 9       # l, odd
    max_len: int = 24

    def __post_init__(self):
        if self.beam_width < 1:
            raise ConfigError("beam width must be >= 1")
        if self.nar_iterations < 1:
            raise ConfigError("need at least one mask-predict iteration")
        if self.length_beam < 1 or self.length_beam % 2 == 0:
            raise ConfigError("length beam must be a positive odd number")


@dataclass
class LossBreakdown:
    """Scalar components of the training objective; unused entries stay 0."""

    total: float = 0.0
    st: float = 0.0
    src: float = 0.0
    cmlm: float = 0.0
    ar: float = 0.0
    lp: float = 0.0
