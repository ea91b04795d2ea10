"""Domain types and file formats for templates, heatmaps, and manifests.

Three text formats are owned by this module:

* template CSV: header ``subject,session,eye,distance,e0,...,e{D-1}``
  followed by one row per sample;
* heatmap matrix: first line ``H <width> <height>`` followed by ``height``
  lines of ``width`` comma-separated reals;
* manifest: flat ``key = value`` lines, lists comma-separated, ``#`` starts
  a comment line.

All files are UTF-8 with LF line endings. Floats are serialized with
``repr``, the shortest decimal text that parses back to the identical
float64, so an ingest/serialize/ingest round trip is bit-exact. All types
here are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import (
    DimensionError,
    DomainError,
    DuplicateKeyError,
    ParseError,
    TemplateLookupError,
    UsageError,
)

EYES = ("L", "R")
SESSIONS = (1, 2)


@dataclass(frozen=True, slots=True, order=True)
class SampleKey:
    """Identity, session, eye, and distance address of one sample.

    Ordering is lexicographic over (subject_id, session, eye, distance),
    which is the tie-break order used wherever samples are ranked.
    """

    subject_id: str
    session: int
    eye: str
    distance: int

    def __post_init__(self):
        if not self.subject_id:
            raise DomainError("subject_id must be non-empty")
        if self.session not in SESSIONS:
            raise DomainError(f"session must be 1 or 2, got {self.session}")
        if self.eye not in EYES:
            raise DomainError(f"eye must be 'L' or 'R', got {self.eye!r}")
        if self.distance < 1:
            raise DomainError(f"distance index must be >= 1, got {self.distance}")

    def __str__(self):
        return f"({self.subject_id}, s{self.session}, {self.eye}, d{self.distance})"


def sample_key_stem(key: SampleKey) -> str:
    """Filename stem for one sample, e.g. ``s001_1_L_3``."""
    return f"{key.subject_id}_{key.session}_{key.eye}_{key.distance}"


def sample_key_from_stem(stem: str) -> SampleKey:
    """Inverse of :func:`sample_key_stem`; subject ids may contain ``_``."""
    parts = stem.rsplit("_", 3)
    if len(parts) != 4:
        raise ParseError(f"cannot parse sample key from {stem!r}")
    subject, session_text, eye, distance_text = parts
    try:
        return SampleKey(subject, int(session_text), eye, int(distance_text))
    except (ValueError, DomainError) as exc:
        raise ParseError(f"cannot parse sample key from {stem!r}: {exc}") from None


@dataclass(frozen=True)
class EmbeddingTemplate:
    """One fixed-length feature vector with its sample address."""

    key: SampleKey
    vector: np.ndarray

    def __post_init__(self):
        v = np.array(self.vector, dtype=np.float64, copy=True)
        if v.ndim != 1 or v.size == 0:
            raise DimensionError("template vector must be 1-D and non-empty")
        if not np.all(np.isfinite(v)):
            raise DomainError(f"template {self.key} has non-finite components")
        v.flags.writeable = False
        object.__setattr__(self, "vector", v)

    @property
    def dim(self) -> int:
        return int(self.vector.shape[0])


class TemplateSet:
    """Ordered template collection with unique-key lookup.

    Row order follows the input; :attr:`matrix` stacks the vectors in that
    order so pair scoring can address templates by row index.
    """

    def __init__(self, templates: Iterable[EmbeddingTemplate]):
        self._templates = tuple(templates)
        if not self._templates:
            raise UsageError("template set must not be empty")
        dim = self._templates[0].dim
        self._rows: dict[SampleKey, int] = {}
        for i, t in enumerate(self._templates):
            if t.dim != dim:
                raise DimensionError(
                    f"template {t.key} has dimension {t.dim}, expected {dim}")
            if t.key in self._rows:
                raise DuplicateKeyError(f"duplicate sample key {t.key}")
            self._rows[t.key] = i
        self._matrix: np.ndarray | None = None
        self._norms: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._templates)

    def __iter__(self) -> Iterator[EmbeddingTemplate]:
        return iter(self._templates)

    def __getitem__(self, index: int) -> EmbeddingTemplate:
        return self._templates[index]

    def __contains__(self, key: SampleKey) -> bool:
        return key in self._rows

    @property
    def dim(self) -> int:
        return self._templates[0].dim

    def get(self, key: SampleKey) -> EmbeddingTemplate:
        try:
            return self._templates[self._rows[key]]
        except KeyError:
            raise TemplateLookupError(f"no template for sample key {key}") from None

    def row(self, key: SampleKey) -> int:
        try:
            return self._rows[key]
        except KeyError:
            raise TemplateLookupError(f"no template for sample key {key}") from None

    def keys(self) -> Iterator[SampleKey]:
        return iter(self._rows)

    def subjects(self) -> list[str]:
        return sorted({k.subject_id for k in self._rows})

    def distances(self) -> list[int]:
        return sorted({k.distance for k in self._rows})

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            m = np.vstack([t.vector for t in self._templates])
            m.flags.writeable = False
            self._matrix = m
        return self._matrix

    @property
    def norms(self) -> np.ndarray:
        if self._norms is None:
            n = np.linalg.norm(self.matrix, axis=1)
            n.flags.writeable = False
            self._norms = n
        return self._norms

    @property
    def min_component(self) -> float:
        return float(self.matrix.min())


@dataclass(frozen=True)
class Heatmap:
    """Rectangular non-negative relevance map, optionally keyed to a sample."""

    values: np.ndarray
    key: SampleKey | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 2 or v.size == 0:
            raise DimensionError("heatmap values must form a non-empty 2-D grid")
        if not np.all(np.isfinite(v)):
            raise DomainError("heatmap contains non-finite entries")
        if np.any(v < 0.0):
            raise DomainError("heatmap contains negative entries")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def total(self) -> float:
        return float(self.values.sum())


@dataclass(frozen=True)
class DatasetManifest:
    """Dataset-level metadata shared by every file of one experiment.

    ``distances`` are labels ordered farthest to closest, so distance index
    1 names the farthest stand-off; ``d_max`` is their count.
    """

    name: str
    embedding_dim: int
    nonnegative: bool
    distances: tuple[str, ...]
    systems: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "distances", tuple(self.distances))
        object.__setattr__(self, "systems", tuple(self.systems))
        if not self.name:
            raise DomainError("manifest name must be non-empty")
        if self.embedding_dim < 1:
            raise DomainError("embedding_dim must be positive")
        if not self.distances:
            raise DomainError("manifest must declare at least one distance")
        if len(set(self.distances)) != len(self.distances):
            raise DomainError("distance labels must be unique")
        if len(set(self.systems)) != len(self.systems):
            raise DomainError("system names must be unique")

    @property
    def d_max(self) -> int:
        return len(self.distances)


# --------------------------------------------------------------------------
# manifest files

_TRUE_WORDS = ("true", "yes", "1")
_FALSE_WORDS = ("false", "no", "0")


def read_manifest(path) -> DatasetManifest:
    entries: dict[str, tuple[str, int]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError("expected 'key = value'", line=lineno)
            key, _, value = line.partition("=")
            key = key.strip()
            if key in entries:
                raise ParseError(f"duplicate manifest key {key!r}", line=lineno)
            entries[key] = (value.strip(), lineno)

    def take(key: str) -> str:
        if key not in entries:
            raise ParseError(f"manifest missing required key {key!r}")
        return entries.pop(key)[0]

    name = take("name")
    dim_text = take("embedding_dim")
    try:
        dim = int(dim_text)
    except ValueError:
        raise ParseError(f"embedding_dim must be an integer, got {dim_text!r}") from None
    flag = take("nonnegative").lower()
    if flag in _TRUE_WORDS:
        nonnegative = True
    elif flag in _FALSE_WORDS:
        nonnegative = False
    else:
        raise ParseError(f"nonnegative must be true or false, got {flag!r}")
    distances = tuple(x.strip() for x in take("distances").split(",") if x.strip())
    systems_text = entries.pop("systems", ("", 0))[0]
    systems = tuple(x.strip() for x in systems_text.split(",") if x.strip())
    if entries:
        key, (_, lineno) = next(iter(entries.items()))
        raise ParseError(f"unknown manifest key {key!r}", line=lineno)
    try:
        return DatasetManifest(name, dim, nonnegative, distances, systems)
    except DomainError as exc:
        raise ParseError(str(exc)) from None


def write_manifest(manifest: DatasetManifest, path) -> None:
    lines = [
        f"name = {manifest.name}",
        f"embedding_dim = {manifest.embedding_dim}",
        f"nonnegative = {'true' if manifest.nonnegative else 'false'}",
        f"distances = {', '.join(manifest.distances)}",
    ]
    if manifest.systems:
        lines.append(f"systems = {', '.join(manifest.systems)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


# --------------------------------------------------------------------------
# template files


def _template_header(dim: int) -> list[str]:
    return ["subject", "session", "eye", "distance"] + [f"e{i}" for i in range(dim)]


def ingest_templates(path, manifest: DatasetManifest) -> TemplateSet:
    """Read one system's template CSV and validate it against the manifest."""
    dim = manifest.embedding_dim
    expected = _template_header(dim)
    templates: list[EmbeddingTemplate] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty template file", line=1) from None
        if header[:4] != expected[:4]:
            raise ParseError(
                "header must start with subject,session,eye,distance", line=1)
        if len(header) != len(expected):
            raise DimensionError(
                f"line 1: header has {len(header) - 4} embedding columns, "
                f"manifest declares {dim}")
        if header != expected:
            raise ParseError("embedding columns must be named e0..e{D-1}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4 + dim:
                raise DimensionError(
                    f"line {lineno}: row has {len(row) - 4} embedding values, "
                    f"expected {dim}")
            subject, session_text, eye, distance_text = row[:4]
            try:
                session = int(session_text)
                distance = int(distance_text)
            except ValueError:
                raise ParseError(
                    "session and distance must be integers", line=lineno) from None
            try:
                key = SampleKey(subject, session, eye, distance)
            except DomainError as exc:
                raise ParseError(str(exc), line=lineno) from None
            if distance > manifest.d_max:
                raise ParseError(
                    f"distance {distance} exceeds the manifest's "
                    f"{manifest.d_max} declared distances", line=lineno)
            try:
                vector = np.array(row[4:], dtype=np.float64)
            except ValueError:
                raise ParseError(
                    "embedding components must be decimal numbers",
                    line=lineno) from None
            if not np.all(np.isfinite(vector)):
                raise DomainError(
                    f"line {lineno}: non-finite embedding component for {key}")
            if manifest.nonnegative and np.any(vector < 0.0):
                raise DomainError(
                    f"line {lineno}: negative embedding component for {key} "
                    f"in a dataset declared nonnegative")
            templates.append(EmbeddingTemplate(key, vector))
    return TemplateSet(templates)


def write_templates(templates: Iterable[EmbeddingTemplate], path) -> None:
    rows = list(templates)
    if not rows:
        raise UsageError("nothing to serialize")
    dim = rows[0].dim
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_template_header(dim))
        for t in rows:
            if t.dim != dim:
                raise DimensionError(
                    f"template {t.key} has dimension {t.dim}, expected {dim}")
            writer.writerow(
                [t.key.subject_id, t.key.session, t.key.eye, t.key.distance]
                + [repr(float(v)) for v in t.vector])


# --------------------------------------------------------------------------
# heatmap files


def ingest_heatmap(path, key: SampleKey | None = None) -> Heatmap:
    with open(path, encoding="utf-8") as fh:
        head = fh.readline().split()
        if len(head) != 3 or head[0] != "H":
            raise ParseError("expected header 'H <width> <height>'", line=1)
        try:
            width = int(head[1])
            height = int(head[2])
        except ValueError:
            raise ParseError("width and height must be integers", line=1) from None
        if width < 1 or height < 1:
            raise ParseError("width and height must be positive", line=1)
        rows = []
        for r in range(height):
            line = fh.readline()
            if not line:
                raise ParseError(
                    f"expected {height} data rows, found {r}", line=r + 1)
            cells = line.strip().split(",")
            if len(cells) != width:
                raise ParseError(
                    f"row {r} has {len(cells)} entries, expected {width}",
                    line=r + 2)
            try:
                rows.append(np.array(cells, dtype=np.float64))
            except ValueError:
                raise ParseError(
                    f"row {r} contains a non-numeric entry", line=r + 2) from None
        if fh.readline().strip():
            raise ParseError(
                f"unexpected data after row {height - 1}", line=height + 2)
    values = np.vstack(rows)
    if not np.all(np.isfinite(values)):
        raise DomainError(f"heatmap {path} contains non-finite entries")
    if np.any(values < 0.0):
        raise DomainError(f"heatmap {path} contains negative entries")
    return Heatmap(values, key=key)


def write_heatmap(heatmap: Heatmap, path) -> None:
    lines = [f"H {heatmap.width} {heatmap.height}"]
    for row in heatmap.values:
        lines.append(",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
