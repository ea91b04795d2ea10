"""EER sweep tests against a brute-force reference."""

import numpy as np
import pytest

from _helpers import grid_templates
from _oracles import brute_force_eer

from perifuse.errors import DomainError, ParseError, UsageError
from perifuse.evaluation import (
    EvalResult,
    compute_eer,
    group_eval,
    read_eval_report,
    relative_change,
    roc_curve,
    write_eval_report,
)
from perifuse.metrics import METRIC_COSINE, ScoreSet, score_pairs
from perifuse.protocol import full_protocol


class TestComputeEer:
    def test_worked_example(self):
        # at t=0.6: one of four impostors accepted, one of four genuine refused
        result = compute_eer([0.9, 0.8, 0.7, 0.4], [0.6, 0.5, 0.3, 0.2])
        assert result.eer == 0.25
        assert result.eer_threshold == 0.6
        assert result.n_genuine == 4 and result.n_impostor == 4

    def test_separated_scores_give_zero(self):
        result = compute_eer([0.8, 0.9, 1.0], [0.1, 0.2, 0.3])
        assert result.eer == 0.0

    def test_swapped_populations_give_chance_or_worse(self):
        result = compute_eer([0.1, 0.2, 0.3], [0.8, 0.9, 1.0])
        assert result.eer >= 0.5

    def test_degenerate_all_equal(self):
        # FRR never reaches FAR at any observed score, fallback sits past max
        result = compute_eer([1.0, 1.0], [1.0, 1.0, 1.0])
        assert result.eer == 0.5
        assert result.eer_threshold > 1.0

    def test_matches_brute_force_on_random_instances(self):
        rng = np.random.default_rng(99)
        for trial in range(200):
            n_g = int(rng.integers(1, 40))
            n_i = int(rng.integers(1, 60))
            sep = rng.uniform(-1.0, 2.0)
            g = rng.normal(sep, 1.0, size=n_g)
            i = rng.normal(0.0, 1.0, size=n_i)
            if trial % 3 == 0:
                # force heavy ties through quantization
                g = np.round(g * 2) / 2
                i = np.round(i * 2) / 2
            expected_eer, expected_t = brute_force_eer(g, i)
            got = compute_eer(g, i)
            assert got.eer == pytest.approx(expected_eer, abs=1e-12), (
                f"trial {trial}: g={g!r} i={i!r}")
            assert got.eer_threshold == pytest.approx(expected_t, abs=1e-12)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(5)
        g = rng.normal(1.0, 0.8, size=300)
        i = rng.normal(0.0, 1.1, size=900)
        base = compute_eer(g, i).eer
        for transform in (
            lambda s: 3.0 * s + 7.0,
            np.tanh,
            lambda s: np.exp(0.5 * s),
            lambda s: s ** 3,
        ):
            assert compute_eer(transform(g), transform(i)).eer == pytest.approx(
                base, abs=1e-12)

    def test_input_validation(self):
        with pytest.raises(UsageError):
            compute_eer([], [0.1])
        with pytest.raises(UsageError):
            compute_eer([0.1], [])
        with pytest.raises(DomainError):
            compute_eer([0.1, float("nan")], [0.0])
        with pytest.raises(UsageError):
            compute_eer([[0.1, 0.2]], [0.0])


class TestRocCurve:
    def test_thresholds_distinct_and_ascending(self):
        g = [0.9, 0.8, 0.7, 0.4, 0.8]
        i = [0.6, 0.5, 0.3, 0.2]
        points = roc_curve(g, i)
        ts = [p.threshold for p in points]
        assert ts == sorted(set(g) | set(i))

    def test_far_frr_monotone(self):
        rng = np.random.default_rng(3)
        points = roc_curve(rng.normal(1, 1, 100), rng.normal(0, 1, 300))
        fars = [p.far for p in points]
        frrs = [p.frr for p in points]
        assert all(a >= b for a, b in zip(fars, fars[1:]))
        assert all(a <= b for a, b in zip(frrs, frrs[1:]))
        assert fars[0] == 1.0  # lowest threshold accepts everything
        assert frrs[0] == 0.0

    def test_counting_convention(self):
        points = roc_curve([0.9, 0.8, 0.7, 0.4], [0.6, 0.5, 0.3, 0.2])
        by_t = {p.threshold: p for p in points}
        assert by_t[0.6].far == 0.25  # only 0.6 itself is at or above
        assert by_t[0.6].frr == 0.25  # 0.4 falls below


class TestRelativeChange:
    def test_signed_percent(self):
        assert relative_change(1.31, 1.66) == pytest.approx(-21.0843, abs=1e-3)
        assert relative_change(2.0, 1.0) == pytest.approx(100.0)
        assert relative_change(1.0, 1.0) == 0.0

    def test_zero_baseline_rejected(self):
        with pytest.raises(DomainError):
            relative_change(1.0, 0.0)


def scored_full_protocol(n_subjects=4, d_max=3, seed=0):
    templates = grid_templates(n_subjects, d_max, dim=6, seed=seed, nonnegative=True)
    sets = full_protocol(templates, d_max)
    return [score_pairs(ps, templates, METRIC_COSINE, system="x") for ps in sets]


class TestGroupEval:
    def test_pooled_matches_manual_concat(self):
        scored = scored_full_protocol()
        results = group_eval(scored, "pooled")
        assert len(results) == 1 and results[0].grouping == "all"
        g = np.concatenate([s.genuine_values() for s in scored])
        i = np.concatenate([s.impostor_values() for s in scored])
        assert results[0].eer == compute_eer(g, i).eer
        assert results[0].n_genuine == g.size and results[0].n_impostor == i.size

    def test_intra_by_distance_buckets(self):
        scored = scored_full_protocol(d_max=3)
        results = group_eval(scored, "intra_by_distance")
        assert [r.grouping for r in results] == ["intra D1", "intra D2", "intra D3"]
        for d, r in enumerate(results, start=1):
            g = np.concatenate([
                s.values[[p.label == "genuine" and p.di == d and p.dj == d
                          for p in s.pairs]]
                for s in scored])
            i = np.concatenate([
                s.values[[p.label == "impostor" and p.di == d and p.dj == d
                          for p in s.pairs]]
                for s in scored])
            assert r.n_genuine == g.size and r.n_impostor == i.size
            assert r.eer == compute_eer(g, i).eer

    def test_gap_buckets(self):
        scored = scored_full_protocol(d_max=3)
        results = group_eval(scored, "by_distance_gap")
        assert [r.grouping for r in results] == ["gap 1", "gap 2"]
        # gap 1 pools (1,2) and (2,3); gap 2 is (1,3) alone
        n_sub = 4
        assert results[0].n_genuine == 2 * 8 * n_sub
        assert results[1].n_genuine == 1 * 8 * n_sub
        assert results[0].n_impostor == 2 * 4 * n_sub * (n_sub - 1)

    def test_unknown_grouping_and_empty_group(self):
        scored = scored_full_protocol(d_max=1)
        with pytest.raises(UsageError):
            group_eval(scored, "by_moon_phase")
        with pytest.raises(UsageError, match="by_distance_gap"):
            group_eval(scored, "by_distance_gap")  # d_max=1 has no cross pairs

    def test_group_missing_one_side_is_reported(self):
        scored = scored_full_protocol(d_max=2)
        genuine_only = [
            ScoreSet(
                tuple(p for p in s.pairs if p.label == "genuine"),
                s.genuine_values(), s.metric, s.system)
            for s in scored[:3]
        ]
        with pytest.raises(UsageError, match="intra D1"):
            group_eval(genuine_only, "intra_by_distance")


class TestReportFiles:
    def test_round_trip(self, tmp_path):
        scored = scored_full_protocol()
        results = group_eval(scored, "intra_by_distance")
        path = tmp_path / "eval.csv"
        write_eval_report(results, path)
        back = read_eval_report(path)
        assert len(back) == len(results)
        for orig, re_read in zip(results, back):
            assert re_read.grouping == orig.grouping
            assert re_read.n_genuine == orig.n_genuine
            assert re_read.n_impostor == orig.n_impostor
            assert re_read.eer == pytest.approx(orig.eer, abs=1e-15)
            assert re_read.eer_threshold == orig.eer_threshold

    def test_percent_stored(self, tmp_path):
        path = tmp_path / "eval.csv"
        write_eval_report(
            [EvalResult(0.0125, 0.5, 10, 20, "all")], path)
        text = path.read_text(encoding="utf-8").splitlines()
        assert text[1].split(",")[3] == "1.25"

    def test_malformed_rows(self, tmp_path):
        path = tmp_path / "eval.csv"
        path.write_text(
            "grouping,n_genuine,n_impostor,eer_percent,threshold\n"
            "all,10,20,x,0.5\n", encoding="utf-8")
        with pytest.raises(ParseError, match="line 2"):
            read_eval_report(path)
        path.write_text("grouping\n", encoding="utf-8")
        with pytest.raises(ParseError):
            read_eval_report(path)
