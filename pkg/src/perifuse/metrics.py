"""Pairwise comparison metrics with one orientation: higher means more similar.

Cosine similarity is used as-is. The chi-square distance here is
``sum((x - y)^2 / (x + y))`` with no 1/2 factor, and 0/0 terms contribute
zero (pooling-layer activations are frequently exactly zero); it is emitted
negated by :func:`score_pairs` so a single accept-if-score-above-threshold
rule serves both metrics.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import _accel
from .datamodel import TemplateSet
from .errors import AlignmentError, DimensionError, DomainError, ParseError, UsageError
from .protocol import (
    LABEL_GENUINE,
    PROTOCOL_HEADER,
    ComparisonPair,
    ProtocolSet,
    parse_pair_row,
)

METRIC_COSINE = "cosine"
METRIC_CHI2 = "chi2"
METRICS = (METRIC_COSINE, METRIC_CHI2)

SCORES_HEADER = PROTOCOL_HEADER + ["system", "metric", "score"]


def _as_vector_pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1:
        raise DimensionError("metric inputs must be 1-D vectors")
    if x.shape != y.shape:
        raise DimensionError(
            f"metric inputs must share a dimension, got {x.shape[0]} and {y.shape[0]}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DomainError("metric inputs must be finite")
    return x, y


def cosine_similarity(x, y) -> float:
    x, y = _as_vector_pair(x, y)
    nx = float(np.linalg.norm(x))
    ny = float(np.linalg.norm(y))
    if nx == 0.0 or ny == 0.0:
        raise DomainError("cosine similarity is undefined for zero-norm vectors")
    return float(np.clip(np.dot(x, y) / (nx * ny), -1.0, 1.0))


def chi2_distance(x, y) -> float:
    x, y = _as_vector_pair(x, y)
    if np.any(x < 0.0) or np.any(y < 0.0):
        raise DomainError("chi-square distance requires non-negative components")
    num = (x - y) ** 2
    den = x + y
    terms = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 0.0)
    return float(terms.sum())


@dataclass(frozen=True)
class ScoreSet:
    """Scores aligned one-to-one with a comparison pair list."""

    pairs: tuple[ComparisonPair, ...]
    values: np.ndarray
    metric: str
    system: str = ""

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 1 or v.shape[0] != len(self.pairs):
            raise AlignmentError(
                f"got {v.shape} scores for {len(self.pairs)} pairs")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.pairs)

    def genuine_mask(self) -> np.ndarray:
        return np.fromiter(
            (p.label == LABEL_GENUINE for p in self.pairs),
            dtype=bool, count=len(self.pairs))

    def genuine_values(self) -> np.ndarray:
        return self.values[self.genuine_mask()]

    def impostor_values(self) -> np.ndarray:
        return self.values[~self.genuine_mask()]


def score_pairs(
    protocol: ProtocolSet,
    templates: TemplateSet,
    metric: str,
    system: str = "",
    l2_normalize: bool = False,
) -> ScoreSet:
    """Score every pair of one protocol set against one template set.

    ``l2_normalize`` rescales each template to unit L2 norm before the metric
    is applied (a no-op for cosine); the default leaves templates untouched.
    """
    if metric not in METRICS:
        raise UsageError(f"unknown metric {metric!r}, expected one of {METRICS}")
    if len(protocol.pairs) == 0:
        raise UsageError("cannot score an empty protocol set")
    n = len(protocol.pairs)
    probe_rows = np.fromiter(
        (templates.row(p.probe) for p in protocol.pairs), dtype=np.int64, count=n)
    gallery_rows = np.fromiter(
        (templates.row(p.gallery) for p in protocol.pairs), dtype=np.int64, count=n)

    matrix = templates.matrix
    norms = templates.norms
    if metric == METRIC_COSINE or l2_normalize:
        used = np.union1d(probe_rows, gallery_rows)
        zero = used[norms[used] == 0.0]
        if zero.size:
            key = templates[int(zero[0])].key
            raise DomainError(f"template {key} has zero norm")
    if l2_normalize:
        matrix = np.ascontiguousarray(matrix / np.where(norms > 0.0, norms, 1.0)[:, None])
        norms = np.ones_like(norms)

    if metric == METRIC_COSINE:
        values = _accel.cosine_pairs(matrix, norms, probe_rows, gallery_rows)
    else:
        if float(matrix.min()) < 0.0:
            raise DomainError(
                "chi-square scoring requires non-negative template components")
        values = -_accel.chi2_pairs(matrix, probe_rows, gallery_rows)
    return ScoreSet(protocol.pairs, values, metric, system)


# --------------------------------------------------------------------------
# score files


def write_scores(score_sets: Iterable[ScoreSet], path) -> None:
    """Serialize one or more score sets into a single CSV, in order."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCORES_HEADER)
        for ss in score_sets:
            for pair, value in zip(ss.pairs, ss.values):
                writer.writerow([
                    pair.probe.subject_id, pair.probe.session, pair.probe.eye,
                    pair.di,
                    pair.gallery.subject_id, pair.gallery.session,
                    pair.gallery.eye, pair.dj,
                    pair.label, ss.system, ss.metric, repr(float(value)),
                ])


def read_scores(path) -> list[ScoreSet]:
    """Read a score CSV back as one ScoreSet per (system, metric) group.

    Groups keep first-appearance order and each group keeps its row order, so
    a file written by :func:`write_scores` round-trips exactly.
    """
    groups: dict[tuple[str, str], tuple[list[ComparisonPair], list[float]]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty score file", line=1) from None
        if header != SCORES_HEADER:
            raise ParseError(f"expected header {','.join(SCORES_HEADER)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(SCORES_HEADER):
                raise ParseError(
                    f"expected {len(SCORES_HEADER)} columns, got {len(row)}",
                    line=lineno)
            pair = parse_pair_row(row[:9], lineno)
            system, metric, score_text = row[9], row[10], row[11]
            try:
                value = float(score_text)
            except ValueError:
                raise ParseError(
                    f"score must be a decimal number, got {score_text!r}",
                    line=lineno) from None
            pairs, values = groups.setdefault((system, metric), ([], []))
            pairs.append(pair)
            values.append(value)
    if not groups:
        raise ParseError("score file has no rows")
    return [
        ScoreSet(tuple(pairs), np.array(values), metric=metric, system=system)
        for (system, metric), (pairs, values) in groups.items()
    ]
