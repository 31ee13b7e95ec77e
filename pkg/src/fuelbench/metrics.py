"""Composite F1 for anomaly detection and purity for discretisation."""

from __future__ import annotations

import numpy as np


def _binary_pair(pred, truth):
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ValueError(f"prediction shape {pred.shape} does not match label shape {truth.shape}")
    for name, arr in (("pred", pred), ("truth", truth)):
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise ValueError(f"{name} must be binary")
    return pred.astype(bool), truth.astype(bool)


def events(truth) -> list:
    """Maximal runs of ones as half-open (start, stop) index pairs."""
    t = np.asarray(truth).astype(np.int8)
    edges = np.diff(np.concatenate(([0], t, [0])))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1)
    return list(zip(starts.tolist(), stops.tolist()))


def timewise_precision(pred, truth) -> float:
    """TP / (TP + FP) over samples; 0 when nothing is predicted positive."""
    p, t = _binary_pair(pred, truth)
    n_pos = int(p.sum())
    if n_pos == 0:
        return 0.0
    return int((p & t).sum()) / n_pos


def eventwise_recall(pred, truth) -> float:
    """Fraction of ground-truth events containing at least one positive prediction."""
    p, t = _binary_pair(pred, truth)
    evs = events(t)
    if not evs:
        return 1.0
    cs = np.concatenate(([0], np.cumsum(p)))
    hit = sum(1 for a, b in evs if cs[b] - cs[a] > 0)
    return hit / len(evs)


def composite_f1(pred, truth) -> float:
    pr = timewise_precision(pred, truth)
    rec = eventwise_recall(pred, truth)
    if pr + rec == 0:
        return 0.0
    return 2 * pr * rec / (pr + rec)


def purity(states, labels) -> float:
    """(1/n) * sum over predicted states of the size of their largest true-label group."""
    s = np.asarray(states)
    c = np.asarray(labels)
    if s.shape != c.shape or s.ndim != 1:
        raise ValueError(f"state shape {s.shape} does not match label shape {c.shape}")
    if s.size == 0:
        raise ValueError("purity of an empty assignment is undefined")
    _, s_idx = np.unique(s, return_inverse=True)
    _, c_idx = np.unique(c, return_inverse=True)
    table = np.zeros((s_idx.max() + 1, c_idx.max() + 1), dtype=np.int64)
    np.add.at(table, (s_idx, c_idx), 1)
    return int(table.max(axis=1).sum()) / s.size


class DetectionSeries:
    """Binary predictions aligned with ground-truth labels."""

    def __init__(self, pred, truth):
        self.pred, self.truth = _binary_pair(pred, truth)

    def precision(self) -> float:
        return timewise_precision(self.pred, self.truth)

    def recall(self) -> float:
        return eventwise_recall(self.pred, self.truth)

    def composite_f1(self) -> float:
        return composite_f1(self.pred, self.truth)


class ModeAssignment:
    """Predicted symbolic state per sample next to its true mode label."""

    def __init__(self, states, labels):
        self.states = np.asarray(states)
        self.labels = np.asarray(labels)
        if self.states.shape != self.labels.shape or self.states.size == 0:
            raise ValueError("states and labels must be non-empty and equally long")

    def purity(self) -> float:
        return purity(self.states, self.labels)
