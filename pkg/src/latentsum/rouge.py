"""ROUGE-1, ROUGE-2 and ROUGE-L full-length F1.

N-grams are counted within each sentence (no n-grams across a sentence
boundary) and pooled; match counts are clipped at reference multiplicity.
ROUGE-L runs a single LCS over each side's concatenated token sequence.
No stemming, no stopword filtering.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .corpus import Sentence


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _score(matched: float, cand_total: int, ref_total: int) -> RougeScore:
    precision = matched / cand_total if cand_total else 0.0
    recall = matched / ref_total if ref_total else 0.0
    return RougeScore(precision=precision, recall=recall, f1=_f1(precision, recall))


def _ngram_counts(sentences, n: int) -> Counter:
    counts: Counter = Counter()
    for sent in sentences:
        toks = sent.tokens
        for i in range(len(toks) - n + 1):
            counts[toks[i : i + n]] += 1
    return counts


def rouge_n(candidate, reference, n: int) -> RougeScore:
    """Clipped n-gram overlap score for n in {1, 2}."""
    if n not in (1, 2):
        raise ValueError(f"rouge_n supports n in {{1, 2}}, got {n}")
    cand = _ngram_counts(candidate, n)
    ref = _ngram_counts(reference, n)
    matched = sum(min(count, ref[gram]) for gram, count in cand.items())
    return _score(matched, sum(cand.values()), sum(ref.values()))


def _lcs_length(a, b) -> int:
    # rolling single-row DP over the concatenated token sequences
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate, reference) -> RougeScore:
    """LCS score over both sides flattened to single token sequences."""
    cand = [tok for sent in candidate for tok in sent.tokens]
    ref = [tok for sent in reference for tok in sent.tokens]
    return _score(_lcs_length(cand, ref), len(cand), len(ref))


def rouge_mean(candidate, reference) -> float:
    """Mean of ROUGE-1 and ROUGE-2 F1; the greedy-selection objective."""
    return (rouge_n(candidate, reference, 1).f1 + rouge_n(candidate, reference, 2).f1) / 2.0
