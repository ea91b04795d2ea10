"""Synthetic data generator tests."""

import numpy as np
import pytest

from perifuse.datamodel import ingest_templates, read_manifest
from perifuse.errors import DomainError, UsageError
from perifuse.evaluation import compute_eer
from perifuse.metrics import METRIC_COSINE, score_pairs
from perifuse.protocol import (
    LABEL_IMPOSTOR,
    full_protocol,
    impostors,
    intra_genuine,
    protocol_totals,
)
from perifuse.synth import complementary_scores, synth_dataset, write_synth_dataset


class TestSynthDataset:
    def test_shape_and_completeness(self):
        manifest, sets = synth_dataset(subjects=5, distances=3, dim=16, seed=1)
        assert manifest.embedding_dim == 16
        assert manifest.nonnegative
        assert manifest.distances == ("6m", "5m", "4m")
        assert set(sets) == {"sysa", "sysb", "sysc"}
        for tset in sets.values():
            assert len(tset) == 5 * 2 * 2 * 3
            assert tset.min_component >= 0.0
        # completeness: the full protocol builds without errors
        totals = protocol_totals(full_protocol(sets["sysa"], 3))
        assert totals == (3 * 4 * 5 + 3 * 8 * 5, 6 * 4 * 5 * 4)

    def test_deterministic_and_system_distinct(self):
        _, a = synth_dataset(subjects=3, distances=2, dim=8, seed=7)
        _, b = synth_dataset(subjects=3, distances=2, dim=8, seed=7)
        _, c = synth_dataset(subjects=3, distances=2, dim=8, seed=8)
        assert a["sysa"].matrix.tobytes() == b["sysa"].matrix.tobytes()
        assert a["sysa"].matrix.tobytes() != c["sysa"].matrix.tobytes()
        assert a["sysa"].matrix.tobytes() != a["sysb"].matrix.tobytes()

    def test_separation_controls_difficulty(self):
        def pooled_eer(separation):
            _, sets = synth_dataset(
                subjects=12, distances=2, dim=24, seed=3,
                systems=("solo",), separation=separation)
            templates = sets["solo"]
            scored = [
                score_pairs(ps, templates, METRIC_COSINE)
                for ps in full_protocol(templates, 2)
            ]
            g = np.concatenate([s.genuine_values() for s in scored])
            i = np.concatenate([s.impostor_values() for s in scored])
            return compute_eer(g, i).eer

        assert pooled_eer(4.0) < pooled_eer(0.75)

    def test_far_distance_is_harder(self):
        _, sets = synth_dataset(
            subjects=24, distances=5, dim=24, seed=5, systems=("solo",),
            separation=1.2)
        templates = sets["solo"]

        def intra_eer(d):
            g = score_pairs(intra_genuine(templates, d), templates, METRIC_COSINE)
            i = score_pairs(impostors(templates, d, d), templates, METRIC_COSINE)
            return compute_eer(g.values, i.values).eer

        assert intra_eer(1) > intra_eer(5)

    def test_validation(self):
        with pytest.raises(UsageError):
            synth_dataset(subjects=0)
        with pytest.raises(UsageError):
            synth_dataset(distances=0)
        with pytest.raises(UsageError):
            synth_dataset(systems=())
        with pytest.raises(DomainError):
            synth_dataset(separation=0.0)
        with pytest.raises(DomainError):
            synth_dataset(correlation=1.5)

    def test_write_round_trip(self, tmp_path):
        manifest, sets = synth_dataset(subjects=3, distances=2, dim=8, seed=2)
        write_synth_dataset(tmp_path, manifest, sets)
        back = read_manifest(tmp_path / "manifest.txt")
        assert back == manifest
        for system, tset in sets.items():
            re_read = ingest_templates(tmp_path / f"templates_{system}.csv", back)
            assert re_read.matrix.tobytes() == tset.matrix.tobytes()
            assert list(re_read.keys()) == list(tset.keys())


class TestComplementaryScores:
    def test_alignment_and_counts(self):
        sets = complementary_scores(n_genuine=50, n_impostor=200, n_systems=3)
        assert len(sets) == 3
        assert all(s.pairs is sets[0].pairs for s in sets)
        assert len(sets[0].genuine_values()) == 50
        assert len(sets[0].impostor_values()) == 200
        assert [s.system for s in sets] == ["sys1", "sys2", "sys3"]

    def test_impostor_pairs_never_share_a_subject(self):
        # enough trials to wrap the offset schedule several times
        sets = complementary_scores(n_genuine=5, n_impostor=140, n_subjects=7)
        for p in sets[0].pairs:
            if p.label == LABEL_IMPOSTOR:
                assert p.probe.subject_id != p.gallery.subject_id

    def test_deterministic(self):
        a = complementary_scores(n_genuine=30, n_impostor=60, seed=4)
        b = complementary_scores(n_genuine=30, n_impostor=60, seed=4)
        c = complementary_scores(n_genuine=30, n_impostor=60, seed=5)
        assert a[0].values.tobytes() == b[0].values.tobytes()
        assert a[0].values.tobytes() != c[0].values.tobytes()

    def test_genuine_scores_sit_higher(self):
        sets = complementary_scores(n_genuine=500, n_impostor=2000, seed=1)
        for s in sets:
            assert s.genuine_values().mean() > s.impostor_values().mean() + 1.0

    def test_validation(self):
        with pytest.raises(UsageError):
            complementary_scores(n_genuine=0)
        with pytest.raises(UsageError):
            complementary_scores(n_systems=0)
        with pytest.raises(UsageError):
            complementary_scores(n_subjects=1)
