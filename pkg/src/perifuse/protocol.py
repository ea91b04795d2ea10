"""Genuine/impostor comparison pair generation over distance combinations.

For S subjects with complete data (2 sessions x 2 eyes at every distance),
each (di, dj) combination yields:

* intra-distance genuine (di == dj): session-1 eyes vs session-2 eyes per
  subject, 4 S pairs;
* cross-distance genuine (di != dj): session-1 eyes at di vs both-session
  eyes at dj per subject, 8 S pairs;
* impostor (any di, dj): session-1 eyes of each subject at di vs session-2
  eyes of every other subject at dj, ordered subject pairs, 4 S (S - 1).

With D distances there are D intra and D (D - 1) / 2 unordered cross
combinations. Generation is deterministic: pairs are ordered by probe
subject, probe eye (L before R), then gallery subject, gallery eye, gallery
session. Generators only read the template set, so calls for different
combinations may safely run concurrently.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterator

from .datamodel import EYES, SESSIONS, SampleKey, TemplateSet
from .errors import CompletenessError, DomainError, ParseError, UsageError

LABEL_GENUINE = "genuine"
LABEL_IMPOSTOR = "impostor"

PROTOCOL_HEADER = [
    "probe_subject", "probe_session", "probe_eye", "di",
    "gallery_subject", "gallery_session", "gallery_eye", "dj", "label",
]


@dataclass(frozen=True, slots=True)
class ComparisonPair:
    """One probe-vs-gallery trial with its label and distance combination."""

    probe: SampleKey
    gallery: SampleKey
    label: str
    di: int
    dj: int

    def __post_init__(self):
        same_subject = self.probe.subject_id == self.gallery.subject_id
        if self.label == LABEL_GENUINE:
            if not same_subject:
                raise DomainError("genuine pair must share one subject")
        elif self.label == LABEL_IMPOSTOR:
            if same_subject:
                raise DomainError("impostor pair must cross subjects")
        else:
            raise DomainError(f"unknown pair label {self.label!r}")
        if self.probe.distance != self.di or self.gallery.distance != self.dj:
            raise DomainError("pair distances must match the (di, dj) combination")
        if self.probe == self.gallery:
            raise DomainError("a pair must not compare a sample to itself")


@dataclass(frozen=True)
class ProtocolSet:
    """Ordered pair list for one (di, dj) distance combination."""

    pairs: tuple[ComparisonPair, ...]
    di: int
    dj: int

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[ComparisonPair]:
        return iter(self.pairs)


def _samples_by_subject(templates: TemplateSet) -> dict[str, set[tuple[int, str, int]]]:
    out: dict[str, set[tuple[int, str, int]]] = {}
    for key in templates.keys():
        out.setdefault(key.subject_id, set()).add((key.session, key.eye, key.distance))
    return out


def _require_complete(samples: set[tuple[int, str, int]], subject: str, d: int) -> None:
    for session in SESSIONS:
        for eye in EYES:
            if (session, eye, d) not in samples:
                raise CompletenessError(
                    f"subject {subject} is missing session {session} eye {eye} "
                    f"at distance {d}")


def intra_genuine(templates: TemplateSet, d: int) -> ProtocolSet:
    """Same-distance genuine pairs: session 1 against session 2 per subject."""
    by_subject = _samples_by_subject(templates)
    pairs = []
    for subject in sorted(by_subject):
        _require_complete(by_subject[subject], subject, d)
        galleries = [SampleKey(subject, 2, eye, d) for eye in EYES]
        for eye_p in EYES:
            probe = SampleKey(subject, 1, eye_p, d)
            for gallery in galleries:
                pairs.append(ComparisonPair(probe, gallery, LABEL_GENUINE, d, d))
    return ProtocolSet(tuple(pairs), d, d)


def cross_genuine(templates: TemplateSet, di: int, dj: int) -> ProtocolSet:
    """Cross-distance genuine pairs: session-1 eyes at di against both-session
    eyes at dj per subject. Unlike intra pairs these may share a session; the
    distance change already guarantees distinct samples."""
    if di == dj:
        raise UsageError("cross-distance generation requires di != dj")
    by_subject = _samples_by_subject(templates)
    pairs = []
    for subject in sorted(by_subject):
        _require_complete(by_subject[subject], subject, di)
        _require_complete(by_subject[subject], subject, dj)
        galleries = [
            SampleKey(subject, session, eye, dj)
            for eye in EYES
            for session in SESSIONS
        ]
        for eye_p in EYES:
            probe = SampleKey(subject, 1, eye_p, di)
            for gallery in galleries:
                pairs.append(ComparisonPair(probe, gallery, LABEL_GENUINE, di, dj))
    return ProtocolSet(tuple(pairs), di, dj)


def impostors(templates: TemplateSet, di: int, dj: int) -> ProtocolSet:
    """Impostor pairs for one distance combination, over ordered subject pairs."""
    by_subject = _samples_by_subject(templates)
    subjects = sorted(by_subject)
    if len(subjects) < 2:
        raise UsageError("impostor generation requires at least 2 subjects")
    for subject in subjects:
        _require_complete(by_subject[subject], subject, di)
        _require_complete(by_subject[subject], subject, dj)
    gallery_keys = {
        subject: tuple(SampleKey(subject, 2, eye, dj) for eye in EYES)
        for subject in subjects
    }
    pairs = []
    for subject_p in subjects:
        for eye_p in EYES:
            probe = SampleKey(subject_p, 1, eye_p, di)
            for subject_g in subjects:
                if subject_g == subject_p:
                    continue
                for gallery in gallery_keys[subject_g]:
                    pairs.append(
                        ComparisonPair(probe, gallery, LABEL_IMPOSTOR, di, dj))
    return ProtocolSet(tuple(pairs), di, dj)


def distance_combinations(d_max: int) -> list[tuple[int, int]]:
    """Intra combinations in distance order, then unordered cross combinations."""
    if d_max < 1:
        raise UsageError("d_max must be >= 1")
    combos = [(d, d) for d in range(1, d_max + 1)]
    combos += [
        (di, dj)
        for di in range(1, d_max + 1)
        for dj in range(di + 1, d_max + 1)
    ]
    return combos


def full_protocol(templates: TemplateSet, d_max: int) -> list[ProtocolSet]:
    """Every genuine and impostor set over all distance combinations.

    Genuine sets come first (intra in distance order, then cross), impostor
    sets follow in the same combination order.
    """
    combos = distance_combinations(d_max)
    sets = [intra_genuine(templates, d) for d in range(1, d_max + 1)]
    sets += [cross_genuine(templates, di, dj) for di, dj in combos if di != dj]
    sets += [impostors(templates, di, dj) for di, dj in combos]
    return sets


def protocol_totals(sets) -> tuple[int, int]:
    """(genuine, impostor) pair counts over a collection of protocol sets."""
    genuine = 0
    impostor = 0
    for pset in sets:
        for pair in pset.pairs:
            if pair.label == LABEL_GENUINE:
                genuine += 1
            else:
                impostor += 1
    return genuine, impostor


# --------------------------------------------------------------------------
# protocol files


def write_protocol(pset: ProtocolSet, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PROTOCOL_HEADER)
        for p in pset.pairs:
            writer.writerow([
                p.probe.subject_id, p.probe.session, p.probe.eye, p.di,
                p.gallery.subject_id, p.gallery.session, p.gallery.eye, p.dj,
                p.label,
            ])


def parse_pair_row(row: list[str], lineno: int) -> ComparisonPair:
    """One protocol CSV row to a ComparisonPair; shared with the score format."""
    if len(row) < 9:
        raise ParseError(f"expected at least 9 columns, got {len(row)}", line=lineno)
    try:
        probe = SampleKey(row[0], int(row[1]), row[2], int(row[3]))
        gallery = SampleKey(row[4], int(row[5]), row[6], int(row[7]))
        return ComparisonPair(probe, gallery, row[8], int(row[3]), int(row[7]))
    except ValueError:
        raise ParseError("sessions and distances must be integers", line=lineno) from None
    except DomainError as exc:
        raise ParseError(str(exc), line=lineno) from None


def read_protocol(path) -> ProtocolSet:
    pairs: list[ComparisonPair] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty protocol file", line=1) from None
        if header != PROTOCOL_HEADER:
            raise ParseError(
                f"expected header {','.join(PROTOCOL_HEADER)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            pair = parse_pair_row(row, lineno)
            if pairs and (pair.di != pairs[0].di or pair.dj != pairs[0].dj):
                raise ParseError(
                    "protocol file mixes distance combinations", line=lineno)
            pairs.append(pair)
    if not pairs:
        raise ParseError("protocol file has no pairs")
    return ProtocolSet(tuple(pairs), pairs[0].di, pairs[0].dj)
