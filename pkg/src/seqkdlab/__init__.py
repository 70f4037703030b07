"""Desk-scale lab for bidirectional sequence-level knowledge distillation
on a synthetic speech-to-text translation task.

Subpackages:
    corpus     synthetic bitext + pseudo-speech generation, vocab, file I/O
    tensor     numpy autodiff, losses, Adam + warmup schedule, checkpoints
    model      transformer encoder-decoder (AR + masked-LM branches),
               beam search and mask-predict inference, training loops
    distill    forward/backward/bidirectional distilled dataset builders
    alignment  EM word aligner (IBM-1 / diagonal Model-2 family)
    metrics    BLEU, TER, conditional entropy, faithfulness
    pipeline   experiment matrix runner, analysis tables, reports, CLI
"""

from . import alignment, corpus, distill, metrics, model, pipeline, tensor
from .errors import (
    AlignmentError,
    ConfigError,
    DomainError,
    EmptyInput,
    IoError,
    LengthError,
    NumericError,
    ParseError,
    SeqKdLabError,
    ShapeError,
    UnknownToken,
)

__version__ = "0.1.0"
