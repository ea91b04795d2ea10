"""Synthetic dataset and score generators shaped like the evaluation corpus.

Nothing here ships biometric data; the generators exist so protocol counts,
fusion behaviour, and the end-to-end pipeline can be exercised at desk
scale with controllable difficulty. Both generators are pure functions of
their seed.

``synth_dataset`` draws one non-negative embedding per (subject, session,
eye, distance) and system. Each subject gets a per-system class center that
shares a ``correlation`` fraction of variance across systems; samples add
Gaussian noise whose scale is 1/``separation`` and grows toward the far
distances (distance index 1 is the farthest stand-off), then clip at zero
so chi-square scoring applies.

``complementary_scores`` skips embeddings and emits aligned per-system
genuine/impostor score sets where each system sees the same trial through
independent noise, the regime in which score fusion genuinely helps.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .datamodel import (
    EYES,
    SESSIONS,
    DatasetManifest,
    EmbeddingTemplate,
    SampleKey,
    TemplateSet,
    write_manifest,
    write_templates,
)
from .errors import DomainError, UsageError
from .metrics import ScoreSet
from .protocol import LABEL_GENUINE, LABEL_IMPOSTOR, ComparisonPair


def synth_dataset(
    subjects: int = 86,
    distances: int = 5,
    dim: int = 64,
    systems: tuple[str, ...] = ("sysa", "sysb", "sysc"),
    seed: int = 0,
    separation: float = 2.0,
    correlation: float = 0.25,
    name: str = "synth",
) -> tuple[DatasetManifest, dict[str, TemplateSet]]:
    """Complete synthetic dataset: one template set per system plus manifest."""
    if subjects < 1:
        raise UsageError("need at least one subject")
    if distances < 1:
        raise UsageError("need at least one distance")
    if dim < 1:
        raise UsageError("embedding dimension must be positive")
    if not systems:
        raise UsageError("need at least one system name")
    if separation <= 0.0:
        raise DomainError("separation must be positive")
    if not 0.0 <= correlation <= 1.0:
        raise DomainError("correlation must lie in [0, 1]")

    rng = np.random.default_rng(seed)
    subject_ids = [f"s{i:03d}" for i in range(1, subjects + 1)]
    # distance labels run farthest to closest, e.g. 8m..4m for five stand-offs
    labels = tuple(f"{4 + distances - d}m" for d in range(1, distances + 1))
    manifest = DatasetManifest(
        name=name, embedding_dim=dim, nonnegative=True,
        distances=labels, systems=tuple(systems))

    shared_mix = float(np.sqrt(correlation))
    private_mix = float(np.sqrt(1.0 - correlation))
    noise_scale = 1.0 / separation

    shared_centers = rng.normal(size=(subjects, dim))
    centers = {
        system: shared_mix * shared_centers
        + private_mix * rng.normal(size=(subjects, dim))
        for system in systems
    }

    sample_keys = [
        (s, session, eye, d)
        for s in range(subjects)
        for session in SESSIONS
        for eye in EYES
        for d in range(1, distances + 1)
    ]
    n_samples = len(sample_keys)
    shared_noise = rng.normal(size=(n_samples, dim))
    private_noise = {
        system: rng.normal(size=(n_samples, dim)) for system in systems
    }

    def distance_factor(d: int) -> float:
        if distances == 1:
            return 1.0
        # far stand-offs (low index) are noisier
        return 1.0 + 0.5 * (distances - d) / (distances - 1)

    template_sets = {}
    for system in systems:
        templates = []
        for row, (s, session, eye, d) in enumerate(sample_keys):
            noise = shared_mix * shared_noise[row] + private_mix * private_noise[system][row]
            vector = centers[system][s] + noise_scale * distance_factor(d) * noise
            templates.append(EmbeddingTemplate(
                SampleKey(subject_ids[s], session, eye, d),
                np.maximum(vector, 0.0)))
        template_sets[system] = TemplateSet(templates)
    return manifest, template_sets


def write_synth_dataset(out_dir, manifest: DatasetManifest, template_sets) -> None:
    """Write ``manifest.txt`` plus one ``templates_<system>.csv`` per system."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(manifest, out / "manifest.txt")
    for system, tset in template_sets.items():
        write_templates(tset, out / f"templates_{system}.csv")


def complementary_scores(
    n_genuine: int = 2000,
    n_impostor: int = 20000,
    n_systems: int = 3,
    seed: int = 0,
    genuine_mean: float = 2.0,
    shared_noise: float = 0.5,
    system_noise: float = 1.0,
    n_subjects: int = 40,
) -> list[ScoreSet]:
    """Aligned per-system score sets over synthetic labelled trials.

    Genuine trials score ``genuine_mean`` plus noise, impostor trials score
    zero plus noise; the noise splits into a component shared by all systems
    and an independent per-system component, so averaging systems cancels
    the independent part. Trials carry synthetic subject ids (round-robin)
    so subject-disjoint fold splitting applies.
    """
    if n_genuine < 1 or n_impostor < 1:
        raise UsageError("need at least one genuine and one impostor trial")
    if n_systems < 1:
        raise UsageError("need at least one system")
    if n_subjects < 2:
        raise UsageError("need at least two subjects for impostor trials")
    rng = np.random.default_rng(seed)
    subjects = [f"p{i:03d}" for i in range(n_subjects)]

    pairs = []
    for j in range(n_genuine):
        subject = subjects[j % n_subjects]
        pairs.append(ComparisonPair(
            SampleKey(subject, 1, "L", 1), SampleKey(subject, 2, "L", 1),
            LABEL_GENUINE, 1, 1))
    for j in range(n_impostor):
        a = subjects[j % n_subjects]
        offset = 1 + (j // n_subjects) % (n_subjects - 1)
        b = subjects[(j % n_subjects + offset) % n_subjects]
        pairs.append(ComparisonPair(
            SampleKey(a, 1, "L", 1), SampleKey(b, 2, "L", 1),
            LABEL_IMPOSTOR, 1, 1))
    pair_tuple = tuple(pairs)

    n = n_genuine + n_impostor
    base = np.concatenate([
        np.full(n_genuine, float(genuine_mean)), np.zeros(n_impostor)])
    shared = rng.normal(size=n)
    score_sets = []
    for k in range(n_systems):
        independent = rng.normal(size=n)
        values = base + shared_noise * shared + system_noise * independent
        score_sets.append(ScoreSet(
            pair_tuple, values, metric="synth", system=f"sys{k + 1}"))
    return score_sets
