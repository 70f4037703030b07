"""EM word alignment (IBM Model 1 / diagonal-reparameterized Model 2 family)
and Viterbi alignment extraction.

The E-step posterior for out-position j over in-positions i (1-based, with
n in-tokens and m out-tokens) is

    delta(i | j, m, n)  propto  p0                      if i = NULL
                                (1-p0) * t(f_j | e_i) * exp(-lambda * |i/n - j/m|)

with the diagonal factor dropped in Model-1 mode. The M-step is either
plain count normalization (alpha=0, textbook EM whose corpus log-likelihood
is non-decreasing) or the sparse-Dirichlet variational update
exp(digamma(c + alpha)) (alpha > 0, the estimator fast_align ships as its
recommended mode; it sharpens rows much faster at a tiny cost in the exact
monotonicity guarantee).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import digamma

from .corpus.data import ParallelCorpus
from .errors import ConfigError


@dataclass
class AlignmentModel:
    """Lexical table t(out_word | in_word) plus alignment-prior settings."""

    t: dict                       # in_word -> {out_word: prob}, rows sum to 1
    direction: str                # "forward": in=src, out=tgt; "backward": swapped
    use_diagonal: bool = True
    diag_lambda: float = 4.0
    p0: float = 0.08
    log_likelihoods: list = field(default_factory=list)
    out_vocab_size: int = 0

    def score_matrix(self, in_tokens, out_tokens) -> np.ndarray:
        """E-step scores [m, n+1]; column n is the NULL score."""
        n, m = len(in_tokens), len(out_tokens)
        scores = np.zeros((m, n + 1))
        for j, f in enumerate(out_tokens):
            for i, e in enumerate(in_tokens):
                lex = self.t.get(e, {}).get(f, 0.0)
                if self.use_diagonal:
                    lex *= np.exp(-self.diag_lambda * abs((i + 1) / n - (j + 1) / m))
                scores[j, i] = (1.0 - self.p0) * lex
            scores[j, n] = self.p0
        return scores


@dataclass(frozen=True)
class AlignedPair:
    """Alignment of each out-position to an in-position (or None for NULL)."""

    in_tokens: tuple
    out_tokens: tuple
    alignment: tuple  # per out position: int index into in_tokens, or None

    def __post_init__(self):
        if len(self.alignment) != len(self.out_tokens):
            raise ConfigError("alignment length must equal the out-token count")
        for a in self.alignment:
            if a is not None and not 0 <= a < len(self.in_tokens):
                raise ConfigError(f"alignment index {a} out of range")


@dataclass(frozen=True)
class AlignedCorpus:
    direction: str
    pairs: tuple

    def __len__(self):
        return len(self.pairs)


def _oriented(corpus: ParallelCorpus, direction: str) -> list[tuple]:
    if direction == "forward":
        return [(s, t) for s, t in corpus.pairs]
    if direction == "backward":
        return [(t, s) for s, t in corpus.pairs]
    raise ConfigError(f"unknown alignment direction {direction!r}")


def em_train_aligner(
    corpus: ParallelCorpus,
    iterations: int = 5,
    direction: str = "forward",
    use_diagonal: bool = True,
    p0: float = 0.08,
    diag_lambda: float = 4.0,
    alpha: float = 0.01,
) -> AlignmentModel:
    """Estimate the lexical table by EM; records the per-iteration corpus
    log-likelihood evaluated under the table entering that iteration."""
    if len(corpus) == 0:
        raise ConfigError("cannot align an empty corpus")
    if iterations < 1:
        raise ConfigError("need at least one EM iteration")
    sentences = _oriented(corpus, direction)
    out_vocab = sorted({f for _, fs in sentences for f in fs})
    v_out = len(out_vocab)
    uniform = 1.0 / v_out

    # sparse init: uniform over the full out vocabulary, materialized lazily
    t: dict = {}
    for es, fs in sentences:
        for e in es:
            row = t.setdefault(e, {})
            for f in fs:
                row.setdefault(f, uniform)

    model = AlignmentModel(
        t=t,
        direction=direction,
        use_diagonal=use_diagonal,
        diag_lambda=diag_lambda,
        p0=p0,
        out_vocab_size=v_out,
    )

    for _ in range(iterations):
        counts: dict = {e: {} for e in t}
        ll = 0.0
        for es, fs in sentences:
            scores = model.score_matrix(es, fs)
            totals = scores.sum(axis=1)
            ll += float(np.log(totals).sum())
            post = scores / totals[:, None]
            for j, f in enumerate(fs):
                for i, e in enumerate(es):
                    if post[j, i] > 0.0:
                        counts[e][f] = counts[e].get(f, 0.0) + post[j, i]
        model.log_likelihoods.append(ll)

        new_t: dict = {}
        for e, row in counts.items():
            if not row:
                new_t[e] = dict(t[e])
                continue
            total = sum(row.values())
            if alpha > 0.0:
                denom = np.exp(digamma(total + v_out * alpha))
                weights = {f: float(np.exp(digamma(c + alpha)) / denom) for f, c in row.items()}
                z = sum(weights.values())
                new_t[e] = {f: w / z for f, w in weights.items()}
            else:
                new_t[e] = {f: c / total for f, c in row.items()}
        model.t = new_t
        t = new_t
    return model


def viterbi_align(model: AlignmentModel, in_tokens, out_tokens) -> AlignedPair:
    """Per out-position argmax of the E-step score; ties prefer the position
    closest to the diagonal, then the lower index. NULL wins only when p0
    strictly exceeds every lexical score."""
    n, m = len(in_tokens), len(out_tokens)
    if n == 0 or m == 0:
        raise ConfigError("cannot align an empty sentence")
    scores = model.score_matrix(in_tokens, out_tokens)
    alignment = []
    for j in range(m):
        row = scores[j]
        best_lex = row[:n].max()
        if row[n] > best_lex:
            alignment.append(None)
            continue
        candidates = [i for i in range(n) if row[i] == best_lex]
        candidates.sort(key=lambda i: (abs((i + 1) / n - (j + 1) / m), i))
        alignment.append(candidates[0])
    return AlignedPair(tuple(in_tokens), tuple(out_tokens), tuple(alignment))


def align_corpus(model: AlignmentModel, corpus: ParallelCorpus) -> AlignedCorpus:
    pairs = [
        viterbi_align(model, ins, outs) for ins, outs in _oriented(corpus, model.direction)
    ]
    return AlignedCorpus(direction=model.direction, pairs=tuple(pairs))


def train_and_align(
    corpus: ParallelCorpus,
    direction: str,
    iterations: int = 5,
    **options,
) -> tuple[AlignmentModel, AlignedCorpus]:
    model = em_train_aligner(corpus, iterations=iterations, direction=direction, **options)
    return model, align_corpus(model, corpus)


def to_pharaoh(aligned: AlignedCorpus) -> str:
    """One sentence per line of 0-indexed `in-out` index pairs."""
    lines = []
    for pair in aligned.pairs:
        cells = [
            f"{a}-{j}" for j, a in enumerate(pair.alignment) if a is not None
        ]
        lines.append(" ".join(cells))
    return "\n".join(lines) + "\n"
