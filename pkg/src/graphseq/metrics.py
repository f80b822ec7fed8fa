"""Evaluation metrics: exact-match path accuracy and corpus BLEU-4."""

from __future__ import annotations

import math
from collections import Counter

__all__ = ["path_accuracy", "bleu4"]


def path_accuracy(predictions, references) -> float:
    """Fraction of predictions equal to their reference token-for-token."""
    predictions, references = list(predictions), list(references)
    if len(predictions) != len(references):
        raise ValueError(f"got {len(predictions)} predictions for {len(references)} references")
    if not references:
        raise ValueError("empty corpus")
    hits = sum(1 for p, r in zip(predictions, references) if list(p) == list(r))
    return hits / len(references)


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu4(candidates, references) -> float:
    """Corpus BLEU with uniform weights over 1..4-gram modified precisions.

    Classic definition, no smoothing: clipped n-gram matches and totals are
    summed over the corpus, a zero precision at any order zeroes the score,
    and the brevity penalty uses total candidate/reference lengths. Returns
    a value in [0, 1].
    """
    candidates, references = list(candidates), list(references)
    if len(candidates) != len(references):
        raise ValueError(f"got {len(candidates)} candidates for {len(references)} references")
    if not candidates:
        raise ValueError("empty corpus")
    matched = [0] * 4
    total = [0] * 4
    cand_len = 0
    ref_len = 0
    for cand, ref in zip(candidates, references):
        cand, ref = list(cand), list(ref)
        cand_len += len(cand)
        ref_len += len(ref)
        for n in range(1, 5):
            cand_counts = _ngrams(cand, n)
            ref_counts = _ngrams(ref, n)
            total[n - 1] += sum(cand_counts.values())
            matched[n - 1] += sum(min(c, ref_counts[g]) for g, c in cand_counts.items())
    if cand_len == 0:
        return 0.0
    log_precision = 0.0
    for n in range(4):
        if matched[n] == 0:
            return 0.0
        log_precision += 0.25 * math.log(matched[n] / total[n])
    brevity = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return brevity * math.exp(log_precision)
