"""Count-based classification metrics for dataset evaluation.

All inputs are raw confusion counts. Degenerate denominators (no predicted
positives, no actual positives, or an all-zero confusion) yield 0.0 and a
MetricUndefinedWarning instead of raising, so sweeps over many label sets
keep running.
"""

from __future__ import annotations

import warnings

import numpy as np


class MetricUndefinedWarning(UserWarning):
    """A metric's denominator was zero; its value was reported as 0.0."""


def _check_count(value: int, name: str) -> int:
    count = int(value)
    if count < 0:
        raise ValueError(f"{name} must be a non-negative count, got {value!r}")
    return count


def _undefined(name: str, detail: str) -> float:
    warnings.warn(f"{name} is undefined ({detail}); reporting 0.0", MetricUndefinedWarning,
                  stacklevel=3)
    return 0.0


def precision(tp: int, fp: int) -> float:
    """tp / (tp + fp); 0.0 with a warning when nothing was predicted positive."""
    tp, fp = _check_count(tp, "tp"), _check_count(fp, "fp")
    if tp + fp == 0:
        return _undefined("precision", "no predicted positives")
    return tp / (tp + fp)


def recall(tp: int, fn: int) -> float:
    """tp / (tp + fn); 0.0 with a warning when there are no actual positives."""
    tp, fn = _check_count(tp, "tp"), _check_count(fn, "fn")
    if tp + fn == 0:
        return _undefined("recall", "no actual positives")
    return tp / (tp + fn)


def f1(precision_value: float, recall_value: float) -> float:
    """Harmonic mean of precision and recall; 0.0 with a warning when both
    are zero."""
    p, r = float(precision_value), float(recall_value)
    for name, v in (("precision", p), ("recall", r)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
    if p + r == 0.0:
        return _undefined("f1", "precision and recall are both zero")
    return 2.0 * p * r / (p + r)


def f1_score(tp: int, fp: int, fn: int) -> float:
    """F1 straight from counts, composing precision, recall, and f1."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MetricUndefinedWarning)
        p = precision(tp, fp)
        r = recall(tp, fn)
    if p + r == 0.0:
        return _undefined("f1", "precision and recall are both zero")
    return f1(p, r)


def f1_micro(confusion: np.ndarray) -> float:
    """Micro-averaged F1 over a square confusion matrix.

    confusion[i, j] counts samples of true class i predicted as class j.
    Pooling true/false positives over classes makes micro precision and
    micro recall both equal trace/total, so the result equals accuracy; it
    is still computed through the pooled counts so the identity is checked
    by construction rather than assumed.
    """
    m = np.asarray(confusion)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"confusion must be square and non-empty, got shape {m.shape}")
    if not np.issubdtype(m.dtype, np.integer):
        if not np.all(m == np.floor(m)):
            raise ValueError("confusion must contain integer counts")
        m = m.astype(np.int64)
    if (m < 0).any():
        raise ValueError("confusion counts must be non-negative")
    tp = int(np.trace(m))
    fp = int(m.sum() - np.trace(m))   # every off-diagonal sample is a false
    fn = fp                           # positive once and a false negative once
    if m.sum() == 0:
        return _undefined("f1_micro", "confusion is all zero")
    return f1_score(tp, fp, fn)
