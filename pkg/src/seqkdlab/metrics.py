"""Corpus scoring: BLEU-4, translation edit rate, and the alignment-based
corpus complexity (conditional entropy) and faithfulness (KL) measures.

Entropy and KL use natural log throughout.
"""
from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .alignment import AlignedCorpus
from .errors import ConfigError, DomainError, ShapeError


def _as_tokens(seq) -> tuple[str, ...]:
    if isinstance(seq, str):
        return tuple(seq.split())
    return tuple(seq)


# ---------------------------------------------------------------------------
# BLEU


def _ngram_counts(tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(hypotheses, references, max_n: int = 4) -> float:
    """Corpus BLEU: geometric mean of modified n-gram precisions times the
    brevity penalty; no smoothing, so any zero precision gives 0."""
    if len(hypotheses) != len(references):
        raise ShapeError(f"{len(hypotheses)} hypotheses vs {len(references)} references")
    if not hypotheses:
        raise ShapeError("need at least one sentence pair")
    matched = [0] * max_n
    total = [0] * max_n
    hyp_len = ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp, ref = _as_tokens(hyp), _as_tokens(ref)
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            hc = _ngram_counts(hyp, n)
            rc = _ngram_counts(ref, n)
            total[n - 1] += sum(hc.values())
            matched[n - 1] += sum(min(c, rc[g]) for g, c in hc.items())
    if hyp_len == 0 or any(m == 0 for m in matched):
        return 0.0
    log_prec = sum(math.log(m / t) for m, t in zip(matched, total)) / max_n
    bp = min(1.0, math.exp(1.0 - ref_len / hyp_len))
    return 100.0 * bp * math.exp(log_prec)


# ---------------------------------------------------------------------------
# TER


def _levenshtein(a, b) -> int:
    if not a:
        return len(b)
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        cur = [i]
        for j, y in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


def _best_shift(hyp: list, ref: list, base: int):
    """The single block shift that most reduces edit distance, or None.

    Only hypothesis blocks that literally occur somewhere in the reference
    are movable (the tercom pruning); candidate insertion points cover the
    whole remaining sequence.
    """
    ref_spans = {tuple(ref[i : i + l]) for i in range(len(ref)) for l in range(1, len(ref) - i + 1)}
    best, best_seq = base, None
    for i in range(len(hyp)):
        for l in range(1, len(hyp) - i + 1):
            block = tuple(hyp[i : i + l])
            if block not in ref_spans:
                continue
            rest = hyp[:i] + hyp[i + l :]
            for j in range(len(rest) + 1):
                if j == i:
                    continue
                cand = rest[:j] + list(block) + rest[j:]
                d = _levenshtein(cand, ref)
                if d < best:
                    best, best_seq = d, cand
    return best, best_seq


def ter_edits(hypothesis, reference) -> int:
    """Shift-aware edit count for one sentence: greedy block shifts (cost 1
    each) followed by plain edit distance."""
    hyp = list(_as_tokens(hypothesis))
    ref = list(_as_tokens(reference))
    shifts = 0
    dist = _levenshtein(hyp, ref)
    while dist > 1:
        new_dist, shifted = _best_shift(hyp, ref, dist)
        if shifted is None:
            break
        shifts += 1
        hyp, dist = shifted, new_dist
    return shifts + dist


def ter(hypotheses, references) -> float:
    """Corpus TER: total (edits + shifts) over total reference length, x100."""
    if len(hypotheses) != len(references):
        raise ShapeError(f"{len(hypotheses)} hypotheses vs {len(references)} references")
    total_edits = 0
    total_ref = 0
    for hyp, ref in zip(hypotheses, references):
        ref_tokens = _as_tokens(ref)
        if not ref_tokens:
            raise DomainError("empty reference")
        total_edits += ter_edits(hyp, ref_tokens)
        total_ref += len(ref_tokens)
    return 100.0 * total_edits / total_ref


# ---------------------------------------------------------------------------
# Alignment-distribution statistics


@dataclass
class CondDistTable:
    """Relative frequencies p(out_word | in_word) over aligned word pairs.

    NULL-aligned out-words carry no in-word identity and are excluded.
    """

    counts: dict = field(default_factory=dict)

    @classmethod
    def from_aligned(cls, aligned: AlignedCorpus) -> "CondDistTable":
        counts: dict = defaultdict(Counter)
        for pair in aligned.pairs:
            for j, a in enumerate(pair.alignment):
                if a is None:
                    continue
                counts[pair.in_tokens[a]][pair.out_tokens[j]] += 1
        return cls(counts={k: dict(v) for k, v in counts.items()})

    def row(self, in_word: str) -> dict:
        row = self.counts.get(in_word)
        if not row:
            return {}
        total = sum(row.values())
        return {f: c / total for f, c in row.items()}

    def vocabulary(self) -> list[str]:
        return sorted(self.counts)


@dataclass
class EntropyReport:
    direction: str
    value: float
    per_word: dict
    vocab_size: int


@dataclass
class FaithfulnessReport:
    direction: str
    value: float
    per_word: dict
    vocab_size: int
    unseen_conditioning_words: int
    eps: float


def conditional_entropy(aligned: AlignedCorpus, direction: str) -> EntropyReport:
    """Mean over observed conditioning words of H(out | in), natural log."""
    if aligned.direction != direction:
        raise ConfigError(
            f"alignments are {aligned.direction!r} but {direction!r} was requested"
        )
    table = CondDistTable.from_aligned(aligned)
    vocab = table.vocabulary()
    if not vocab:
        return EntropyReport(direction=direction, value=0.0, per_word={}, vocab_size=0)
    per_word = {}
    for w in vocab:
        probs = table.row(w).values()
        per_word[w] = -sum(p * math.log(p) for p in probs if p > 0)
    value = sum(per_word.values()) / len(vocab)
    return EntropyReport(direction=direction, value=value, per_word=per_word, vocab_size=len(vocab))


def faithfulness(
    real_aligned: AlignedCorpus,
    distilled_aligned: AlignedCorpus,
    direction: str,
    eps: float = 1e-6,
) -> FaithfulnessReport:
    """Mean KL(p_real || p_distilled) over the real conditioning vocabulary.

    The distilled row is floored at eps over the union support and
    renormalized, so zero-support outcomes stay finite; a conditioning word
    absent from the distilled data contributes an all-eps (uniform) row.
    """
    for ac in (real_aligned, distilled_aligned):
        if ac.direction != direction:
            raise ConfigError(
                f"alignments are {ac.direction!r} but {direction!r} was requested"
            )
    real_table = CondDistTable.from_aligned(real_aligned)
    dist_table = CondDistTable.from_aligned(distilled_aligned)
    vocab = real_table.vocabulary()
    per_word = {}
    unseen = 0
    for w in vocab:
        p_r = real_table.row(w)
        p_d_raw = dist_table.row(w)
        if not p_d_raw:
            unseen += 1
        support = sorted(set(p_r) | set(p_d_raw))
        floored = {o: max(p_d_raw.get(o, 0.0), eps) for o in support}
        z = sum(floored.values())
        p_d = {o: v / z for o, v in floored.items()}
        per_word[w] = sum(
            p * math.log(p / p_d[o]) for o, p in p_r.items() if p > 0
        )
    value = sum(per_word.values()) / len(vocab) if vocab else 0.0
    return FaithfulnessReport(
        direction=direction,
        value=value,
        per_word=per_word,
        vocab_size=len(vocab),
        unseen_conditioning_words=unseen,
        eps=eps,
    )
