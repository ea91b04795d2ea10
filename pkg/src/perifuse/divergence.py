"""Distribution distances between relevance maps, and cross-system analysis.

Heatmaps are normalized to probability maps by dividing every pixel by the
map total. Kullback-Leibler divergence uses the natural logarithm, with
0 * log 0 treated as zero and +inf returned when the left map puts mass
where the right map has none. The Jensen-Shannon divergence against the
midpoint M = (P + Q) / 2 is therefore always finite and bounded by ln 2.

A divergence cloud holds, per image, the JSD of every pair of systems'
maps; its axes follow lexicographic system-pair order. Pearson correlation
between axes quantifies whether two system pairs disagree on the same
images, and per-image mean JSD ranks images from most agreed-on to most
disputed.
"""

from __future__ import annotations

import csv
import itertools
import math
import string
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import _accel
from .datamodel import Heatmap, SampleKey
from .errors import (
    CompletenessError,
    DegenerateInputError,
    DomainError,
    ParseError,
    UsageError,
)

LN2 = math.log(2.0)
_BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class ProbabilityMap:
    """Non-negative 2-D grid summing to one, optionally keyed to a sample."""

    values: np.ndarray
    key: SampleKey | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 2 or v.size == 0:
            raise DomainError("probability map must be a non-empty 2-D grid")
        if not np.all(np.isfinite(v)):
            raise DomainError("probability map contains non-finite entries")
        if np.any(v < 0.0):
            raise DomainError("probability map contains negative entries")
        total = float(v.sum())
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"probability map sums to {total}, expected 1")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)


def normalize(heatmap: Heatmap) -> ProbabilityMap:
    """Heatmap to probability map; an all-zero map has no distribution."""
    total = heatmap.total
    if total <= 0.0:
        raise DomainError("cannot normalize an all-zero heatmap")
    return ProbabilityMap(heatmap.values / total, key=heatmap.key)


def _check_shapes(p: ProbabilityMap, q: ProbabilityMap) -> None:
    if p.values.shape != q.values.shape:
        raise UsageError(
            f"maps have different shapes {p.values.shape} and {q.values.shape}")


def kl(p: ProbabilityMap, q: ProbabilityMap) -> float:
    """KL(P || Q) in nats; +inf when P has mass where Q has none."""
    _check_shapes(p, q)
    return float(_accel.kl_flat(p.values.ravel(), q.values.ravel()))


def jsd(p: ProbabilityMap, q: ProbabilityMap) -> float:
    """Jensen-Shannon divergence in nats; finite and within [0, ln 2]."""
    _check_shapes(p, q)
    value = float(_accel.jsd_flat(p.values.ravel(), q.values.ravel()))
    # rounding can push an identical-map comparison a hair below zero
    return max(value, 0.0)


@dataclass(frozen=True)
class DivergencePoint:
    """Pairwise heatmap divergences of one image across systems."""

    key: SampleKey
    values: np.ndarray
    pairs: tuple[tuple[str, str], ...]

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        pair_names = tuple((str(a), str(b)) for a, b in self.pairs)
        if v.ndim != 1 or v.size != len(pair_names):
            raise UsageError(
                f"got {v.shape} divergences for {len(pair_names)} system pairs")
        if not np.all(np.isfinite(v)):
            raise DomainError("divergences must be finite")
        if np.any(v < 0.0) or np.any(v > LN2 + _BOUND_SLACK):
            raise DomainError("divergences must lie within [0, ln 2]")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "pairs", pair_names)

    @property
    def mean(self) -> float:
        return float(self.values.mean())


def pairwise_cloud(
    heatmaps: Mapping[str, Mapping[SampleKey, Heatmap]],
    systems: Sequence[str],
) -> list[DivergencePoint]:
    """One divergence point per image over every pair of the named systems.

    System names are sorted first, so axes follow lexicographic system-pair
    order regardless of the caller's order; points are sorted by sample key.
    """
    if len(systems) < 2:
        raise UsageError("a divergence cloud needs at least two systems")
    if len(set(systems)) != len(systems):
        raise UsageError("system names must be unique")
    names = sorted(str(s) for s in systems)
    keys = sorted({k for name in names for k in heatmaps.get(name, {})})
    if not keys:
        raise UsageError("no heatmaps given for the named systems")
    normalized: dict[tuple[str, SampleKey], ProbabilityMap] = {}
    for name in names:
        table = heatmaps.get(name, {})
        for key in keys:
            if key not in table:
                raise CompletenessError(
                    f"system {name} is missing a heatmap for {key}")
            normalized[(name, key)] = normalize(table[key])
    pair_names = tuple(itertools.combinations(names, 2))
    points = []
    for key in keys:
        values = np.array([
            jsd(normalized[(a, key)], normalized[(b, key)])
            for a, b in pair_names
        ])
        points.append(DivergencePoint(key, values, pair_names))
    return points


def pearson(x, y) -> float:
    """Pearson correlation coefficient of two equal-length sequences."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise UsageError("correlation needs two equal-length vectors")
    if x.size < 2:
        raise UsageError("correlation needs at least two observations")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DomainError("correlation inputs must be finite")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(np.dot(xc, xc))
    sy = float(np.dot(yc, yc))
    if sx == 0.0 or sy == 0.0:
        raise DegenerateInputError("correlation is undefined for constant input")
    return float(np.clip(np.dot(xc, yc) / math.sqrt(sx * sy), -1.0, 1.0))


def average_heatmap(heatmaps: Sequence[Heatmap]) -> Heatmap:
    """Pixelwise mean of same-shape heatmaps (unkeyed)."""
    maps = list(heatmaps)
    if not maps:
        raise UsageError("cannot average an empty heatmap group")
    shape = maps[0].values.shape
    for h in maps[1:]:
        if h.values.shape != shape:
            raise UsageError(
                f"cannot average heatmaps of shapes {shape} and {h.values.shape}")
    return Heatmap(np.mean([h.values for h in maps], axis=0))


def average_by_distance(heatmaps: Sequence[Heatmap]) -> dict[int, Heatmap]:
    """Pixelwise mean per distance index; every map must be keyed."""
    groups: dict[int, list[Heatmap]] = {}
    for h in heatmaps:
        if h.key is None:
            raise UsageError("grouping by distance requires keyed heatmaps")
        groups.setdefault(h.key.distance, []).append(h)
    if not groups:
        raise UsageError("cannot average an empty heatmap group")
    return {d: average_heatmap(group) for d, group in sorted(groups.items())}


def extreme_images(
    cloud: Sequence[DivergencePoint], k: int,
) -> tuple[list[DivergencePoint], list[DivergencePoint]]:
    """(lowest, highest) k points by mean pairwise JSD, ties by sample key."""
    points = list(cloud)
    if k < 0:
        raise UsageError(f"k must be >= 0, got {k}")
    if k > len(points):
        raise UsageError(f"k={k} exceeds the cloud size {len(points)}")
    lowest = sorted(points, key=lambda p: (p.mean, p.key))
    highest = sorted(points, key=lambda p: (-p.mean, p.key))
    return lowest[:k], highest[:k]


# --------------------------------------------------------------------------
# cloud and correlation files


def pair_axis_names(n_systems: int) -> list[str]:
    """Column names for system-pair axes: pair_ab, pair_ac, pair_bc, ...

    Letters stand for the position of each system in sorted name order, so
    three systems always yield pair_ab, pair_ac, pair_bc.
    """
    if n_systems < 2:
        raise UsageError("need at least two systems")
    if n_systems > len(string.ascii_lowercase):
        raise UsageError("pair axis naming supports at most 26 systems")
    letters = string.ascii_lowercase[:n_systems]
    return [f"pair_{a}{b}" for a, b in itertools.combinations(letters, 2)]


def _cloud_header(n_pairs: int) -> list[str]:
    n_systems = int(round((1 + math.isqrt(1 + 8 * n_pairs)) / 2))
    axes = pair_axis_names(n_systems)
    if len(axes) != n_pairs:
        raise UsageError(f"{n_pairs} axes do not form a full system-pair set")
    return ["subject", "session", "eye", "distance"] + axes + ["mean"]


def write_cloud(points: Sequence[DivergencePoint], path) -> None:
    points = list(points)
    if not points:
        raise UsageError("cannot serialize an empty cloud")
    n_pairs = len(points[0].pairs)
    header = _cloud_header(n_pairs)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for p in points:
            if len(p.pairs) != n_pairs:
                raise UsageError("cloud points disagree on the system pairs")
            writer.writerow(
                [p.key.subject_id, p.key.session, p.key.eye, p.key.distance]
                + [repr(float(v)) for v in p.values]
                + [repr(p.mean)])


def read_cloud(path) -> list[DivergencePoint]:
    """Read a cloud CSV; pair axes come back under their positional names."""
    points = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty cloud file", line=1) from None
        n_pairs = len(header) - 5
        if n_pairs < 1 or header != _cloud_header(n_pairs):
            raise ParseError("unexpected cloud header", line=1)
        axis_pairs = tuple(
            (name[len("pair_"):][0], name[len("pair_"):][1])
            for name in header[4:-1])
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} columns, got {len(row)}", line=lineno)
            try:
                key = SampleKey(row[0], int(row[1]), row[2], int(row[3]))
                values = np.array(row[4:-1], dtype=np.float64)
                points.append(DivergencePoint(key, values, axis_pairs))
            except (ValueError, DomainError) as exc:
                raise ParseError(str(exc), line=lineno) from None
    if not points:
        raise ParseError("cloud file has no rows")
    return points


def write_correlation_report(points: Sequence[DivergencePoint], path) -> None:
    """Pearson correlation between every pair of cloud axes."""
    points = list(points)
    if not points:
        raise UsageError("cannot correlate an empty cloud")
    n_pairs = len(points[0].pairs)
    axes = _cloud_header(n_pairs)[4:-1]
    matrix = np.vstack([p.values for p in points])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["axis_x", "axis_y", "pearson"])
        for i, j in itertools.combinations(range(n_pairs), 2):
            writer.writerow(
                [axes[i], axes[j], repr(pearson(matrix[:, i], matrix[:, j]))])
