"""Equal error rate computation and grouped evaluation reports.

EER convention: candidate thresholds are the distinct observed scores in
ascending order, a trial is accepted when its score >= threshold, so
FAR(t) is the impostor fraction at or above t and FRR(t) the genuine
fraction below t. The reported EER is (FAR + FRR) / 2 at the first
threshold where FRR >= FAR. When no observed threshold reaches that
crossing (every genuine score ties the top impostor scores), the sweep
conceptually ends one step above the maximum score, where FAR = 0 and
FRR = 1, giving an EER of 0.5.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ParseError, UsageError
from .metrics import ScoreSet

GROUPINGS = ("pooled", "intra_by_distance", "by_distance_gap")


@dataclass(frozen=True, slots=True)
class RocPoint:
    """FAR and FRR at one accept-if-score-at-or-above threshold."""

    threshold: float
    far: float
    frr: float


@dataclass(frozen=True, slots=True)
class EvalResult:
    eer: float
    eer_threshold: float
    n_genuine: int
    n_impostor: int
    grouping: str = "all"


def _validated(genuine_scores, impostor_scores) -> tuple[np.ndarray, np.ndarray]:
    g = np.atleast_1d(np.asarray(genuine_scores, dtype=np.float64))
    i = np.atleast_1d(np.asarray(impostor_scores, dtype=np.float64))
    if g.ndim != 1 or i.ndim != 1:
        raise UsageError("scores must be flat sequences")
    if g.size == 0 or i.size == 0:
        raise UsageError("both genuine and impostor scores are required")
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(i))):
        raise DomainError("scores must be finite")
    return g, i


def _sweep(g: np.ndarray, i: np.ndarray):
    thresholds = np.unique(np.concatenate((g, i)))
    g_sorted = np.sort(g)
    i_sorted = np.sort(i)
    far = (i.size - np.searchsorted(i_sorted, thresholds, side="left")) / i.size
    frr = np.searchsorted(g_sorted, thresholds, side="left") / g.size
    return thresholds, far, frr


def roc_curve(genuine_scores, impostor_scores) -> list[RocPoint]:
    """FAR/FRR at every distinct observed score, ascending."""
    g, i = _validated(genuine_scores, impostor_scores)
    thresholds, far, frr = _sweep(g, i)
    return [
        RocPoint(float(t), float(fa), float(fr))
        for t, fa, fr in zip(thresholds, far, frr)
    ]


def compute_eer(genuine_scores, impostor_scores, grouping: str = "all") -> EvalResult:
    g, i = _validated(genuine_scores, impostor_scores)
    thresholds, far, frr = _sweep(g, i)
    crossing = np.nonzero(frr >= far)[0]
    if crossing.size:
        k = int(crossing[0])
        eer = 0.5 * (far[k] + frr[k])
        threshold = float(thresholds[k])
    else:
        # one step above the maximum score: FAR = 0, FRR = 1
        eer = 0.5
        threshold = float(np.nextafter(thresholds[-1], np.inf))
    return EvalResult(float(eer), threshold, int(g.size), int(i.size), grouping)


def relative_change(fused_eer: float, best_individual_eer: float) -> float:
    """Signed percent change of the fused EER against the best individual EER."""
    if not best_individual_eer > 0:
        raise DomainError("relative change needs a positive baseline EER")
    return 100.0 * (fused_eer - best_individual_eer) / best_individual_eer


def group_eval(score_sets: Iterable[ScoreSet], grouping: str) -> list[EvalResult]:
    """One EER per group of a labelled score collection.

    ``intra_by_distance`` buckets same-distance pairs by their distance and
    labels groups ``intra D<d>``; ``by_distance_gap`` buckets cross-distance
    pairs by |di - dj| and labels groups ``gap <g>``; ``pooled`` evaluates
    everything at once under the label ``all``.
    """
    if grouping not in GROUPINGS:
        raise UsageError(f"unknown grouping {grouping!r}, expected one of {GROUPINGS}")
    genuine: dict[int, list[np.ndarray]] = {}
    impostor: dict[int, list[np.ndarray]] = {}
    for ss in score_sets:
        n = len(ss.pairs)
        if n == 0:
            continue
        di = np.fromiter((p.di for p in ss.pairs), dtype=np.int64, count=n)
        dj = np.fromiter((p.dj for p in ss.pairs), dtype=np.int64, count=n)
        is_genuine = ss.genuine_mask()
        if grouping == "pooled":
            buckets = np.zeros(n, dtype=np.int64)
            selected = np.ones(n, dtype=bool)
        elif grouping == "intra_by_distance":
            buckets = di
            selected = di == dj
        else:
            buckets = np.abs(di - dj)
            selected = buckets >= 1
        for b in np.unique(buckets[selected]):
            in_bucket = selected & (buckets == b)
            g = ss.values[in_bucket & is_genuine]
            i = ss.values[in_bucket & ~is_genuine]
            if g.size:
                genuine.setdefault(int(b), []).append(g)
            if i.size:
                impostor.setdefault(int(b), []).append(i)
    labels = {
        "pooled": lambda b: "all",
        "intra_by_distance": lambda b: f"intra D{b}",
        "by_distance_gap": lambda b: f"gap {b}",
    }[grouping]
    keys = sorted(set(genuine) | set(impostor))
    if not keys:
        raise UsageError(f"no scores match grouping {grouping!r}")
    results = []
    for b in keys:
        label = labels(b)
        if b not in genuine:
            raise UsageError(f"group '{label}' has no genuine scores")
        if b not in impostor:
            raise UsageError(f"group '{label}' has no impostor scores")
        results.append(compute_eer(
            np.concatenate(genuine[b]), np.concatenate(impostor[b]), grouping=label))
    return results


# --------------------------------------------------------------------------
# evaluation report files

EVAL_HEADER = ["grouping", "n_genuine", "n_impostor", "eer_percent", "threshold"]


def write_eval_report(results: Sequence[EvalResult], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(EVAL_HEADER)
        for r in results:
            writer.writerow([
                r.grouping, r.n_genuine, r.n_impostor,
                repr(r.eer * 100.0), repr(r.eer_threshold),
            ])


def read_eval_report(path) -> list[EvalResult]:
    results = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty evaluation report", line=1) from None
        if header != EVAL_HEADER:
            raise ParseError(f"expected header {','.join(EVAL_HEADER)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(EVAL_HEADER):
                raise ParseError(
                    f"expected {len(EVAL_HEADER)} columns, got {len(row)}",
                    line=lineno)
            try:
                results.append(EvalResult(
                    eer=float(row[3]) / 100.0,
                    eer_threshold=float(row[4]),
                    n_genuine=int(row[1]),
                    n_impostor=int(row[2]),
                    grouping=row[0],
                ))
            except ValueError:
                raise ParseError("malformed numeric field", line=lineno) from None
    if not results:
        raise ParseError("evaluation report has no rows")
    return results
