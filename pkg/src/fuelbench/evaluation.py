"""Per-fault scoring of a generated benchmark directory."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .dataset import ModeIdentifiers, data_filename, labels_path, load_runs, read_csv
from .detect import DEFAULT_DEBOUNCE, DEFAULT_THRESHOLD, detect, fit_reference, score
from .faults import FAULT_NAMES, FaultMode, onset_index
from .metrics import composite_f1, eventwise_recall, purity, timewise_precision
from .scenario import ThrottleProfile

DETECTED_F1 = 0.8


class AlignmentError(ValueError):
    pass


def file_labels(path, meta) -> np.ndarray:
    lp = labels_path(path)
    if lp.exists():
        _, values = read_csv(lp)
        return values[:, 0].astype(np.int8)
    n = meta["samples_per_run"]
    one = np.zeros(n, dtype=np.int8)
    if meta["fault"]["mode"]:
        one[min(onset_index(meta["onset"], meta["sample_rate"]), n):] = 1
    return np.tile(one, meta["runs"])


def load_predictions(path, expected: int) -> np.ndarray:
    header, values = read_csv(path)
    if header != ["prediction"]:
        raise AlignmentError(f"{path}: expected a single 'prediction' column, got {header}")
    pred = values[:, 0]
    if len(pred) != expected:
        raise AlignmentError(f"{path}: {len(pred)} predictions for {expected} samples")
    return pred.astype(np.int8)


def baseline_predictions(dataset_dir, threshold=DEFAULT_THRESHOLD, debounce=DEFAULT_DEBOUNCE, modes=None):
    """Fit the envelope on healthy.csv and flag every fault file; returns {mode: prediction array}."""
    dataset_dir = Path(dataset_dir)
    healthy, meta = load_runs(dataset_dir / data_filename(0))
    profile = ThrottleProfile(tuple(tuple(bp) for bp in meta["throttle"]))
    env = fit_reference(healthy, profile)
    out = {}
    for mode in modes or range(1, 10):
        path = dataset_dir / data_filename(mode)
        if not path.exists():
            continue
        runs, _ = load_runs(path)
        out[mode] = np.concatenate([detect(score(r, env), threshold, debounce) for r in runs])
    return out


def evaluate(dataset_dir, predictions_dir=None, baseline=False, assignments=None,
             threshold=DEFAULT_THRESHOLD, debounce=DEFAULT_DEBOUNCE) -> dict:
    """Score predictions (from files or the baseline) against every fault file present."""
    dataset_dir = Path(dataset_dir)
    if baseline == (predictions_dir is not None):
        raise ValueError("give exactly one of predictions_dir or baseline")
    rows, errors = [], []
    preds = baseline_predictions(dataset_dir, threshold, debounce) if baseline else None
    for mode in range(1, 10):
        path = dataset_dir / data_filename(mode)
        if not path.exists():
            continue
        runs, meta = load_runs(path)
        truth = file_labels(path, meta)
        try:
            if preds is not None:
                pred = preds[mode]
            else:
                pred = load_predictions(Path(predictions_dir) / data_filename(mode), len(truth))
        except (AlignmentError, OSError) as exc:
            errors.append(str(exc))
            continue
        f1 = composite_f1(pred, truth)
        rows.append({
            "fault": mode,
            "name": FAULT_NAMES[FaultMode(mode)],
            "runs": len(runs),
            "precision": timewise_precision(pred, truth),
            "recall": eventwise_recall(pred, truth),
            "composite_f1": f1,
            "detected": f1 >= DETECTED_F1,
        })
    result = {"scores": rows, "errors": errors}
    if assignments is not None:
        header, values = read_csv(dataset_dir / data_filename(0))
        ids = ModeIdentifiers(values[:, header.index("UD1")].astype(np.int64),
                              values[:, header.index("UD2")].astype(np.int64))
        a_header, a_values = read_csv(assignments)
        if a_header != ["state"] or len(a_values) != len(values):
            errors.append(f"{assignments}: need one 'state' column with {len(values)} rows")
        else:
            result["purity"] = purity(a_values[:, 0], ids.combined())
    return result


def format_table(result: dict) -> str:
    lines = [f"{'f':>2}  {'fault':<26} {'runs':>4}  {'Pr_t':>6}  {'Rec_e':>6}  {'CompF1':>6}  detected"]
    for r in result["scores"]:
        lines.append(
            f"{r['fault']:>2}  {r['name']:<26} {r['runs']:>4}  {r['precision']:6.3f}  "
            f"{r['recall']:6.3f}  {r['composite_f1']:6.3f}  {'yes' if r['detected'] else 'no'}"
        )
    if "purity" in result:
        lines.append(f"purity: {result['purity']:.4f}")
    for e in result["errors"]:
        lines.append(f"error: {e}")
    return "\n".join(lines)
