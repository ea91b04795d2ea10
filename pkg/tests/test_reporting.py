"""Result table and figure data tests."""

import numpy as np
import pytest

from perifuse.errors import ParseError, UsageError
from perifuse.evaluation import EvalResult
from perifuse.reporting import (
    KIND_FUSION,
    KIND_SYSTEM,
    PANEL_GAP,
    PANEL_INTRA,
    ReportEntry,
    build_report,
    panel_points,
    read_report_entries,
    render_cell,
    render_polyline_svg,
    write_report_csv,
    write_report_markdown,
    write_series_csv,
)


def entry(kind, row, column, eer):
    return ReportEntry(kind, row, column, eer)


TWO_COLUMN_ENTRIES = [
    entry(KIND_SYSTEM, "neta", "cosine", 1.66),
    entry(KIND_SYSTEM, "netb", "cosine", 1.73),
    entry(KIND_FUSION, "neta+netb", "cosine", 1.31),
    entry(KIND_SYSTEM, "neta", "chi2", 1.73),
    entry(KIND_SYSTEM, "netb", "chi2", 1.90),
    entry(KIND_FUSION, "neta+netb", "chi2", 1.33),
]


class TestBuildReport:
    def test_layout_orders_systems_before_fusions(self):
        table = build_report(TWO_COLUMN_ENTRIES)
        assert table.columns == ("cosine", "chi2")
        assert table.rows == (
            (KIND_SYSTEM, "neta"), (KIND_SYSTEM, "netb"),
            (KIND_FUSION, "neta+netb"))

    def test_fusion_change_against_best_individual(self):
        table = build_report(TWO_COLUMN_ENTRIES)
        cos = table.cells[("neta+netb", "cosine")]
        assert cos.change_percent == pytest.approx(
            100.0 * (1.31 - 1.66) / 1.66, abs=1e-12)
        assert cos.change_percent == pytest.approx(-21.0843, abs=1e-3)
        chi = table.cells[("neta+netb", "chi2")]
        assert chi.change_percent == pytest.approx(-23.1214, abs=1e-3)
        assert table.cells[("neta", "cosine")].change_percent is None

    def test_best_flag_per_column(self):
        table = build_report(TWO_COLUMN_ENTRIES)
        assert table.cells[("neta+netb", "cosine")].best
        assert table.cells[("neta+netb", "chi2")].best
        assert not table.cells[("neta", "cosine")].best
        # a column where a system wins
        table2 = build_report([
            entry(KIND_SYSTEM, "neta", "m", 1.0),
            entry(KIND_FUSION, "f", "m", 1.2),
        ])
        assert table2.cells[("neta", "m")].best
        assert not table2.cells[("f", "m")].best
        assert table2.cells[("f", "m")].change_percent == pytest.approx(20.0)

    def test_sparse_cells_allowed(self):
        table = build_report([
            entry(KIND_SYSTEM, "neta", "cosine", 1.5),
            entry(KIND_SYSTEM, "netb", "chi2", 2.0),
        ])
        assert ("neta", "chi2") not in table.cells
        assert table.cells[("neta", "cosine")].best

    def test_validation(self):
        with pytest.raises(UsageError):
            build_report([])
        with pytest.raises(UsageError, match="duplicate"):
            build_report([
                entry(KIND_SYSTEM, "a", "m", 1.0),
                entry(KIND_SYSTEM, "a", "m", 2.0),
            ])
        with pytest.raises(UsageError, match="both kinds"):
            build_report([
                entry(KIND_SYSTEM, "a", "m", 1.0),
                entry(KIND_FUSION, "a", "n", 2.0),
            ])
        with pytest.raises(UsageError, match="baseline"):
            build_report([entry(KIND_FUSION, "f", "m", 1.0)])

    def test_entry_validation(self):
        with pytest.raises(UsageError):
            ReportEntry("mean", "a", "m", 1.0)
        with pytest.raises(UsageError):
            ReportEntry(KIND_SYSTEM, "", "m", 1.0)
        with pytest.raises(UsageError):
            ReportEntry(KIND_SYSTEM, "a", "m", -0.1)
        with pytest.raises(UsageError):
            ReportEntry(KIND_SYSTEM, "a", "m", float("nan"))


class TestRendering:
    def test_cell_text(self):
        table = build_report(TWO_COLUMN_ENTRIES)
        assert render_cell(table.cells[("neta", "cosine")]) == "1.66"
        assert render_cell(table.cells[("neta+netb", "cosine")]) == "**1.31 (-21.08%)**"
        assert render_cell(None) == ""
        positive = build_report([
            entry(KIND_SYSTEM, "s", "m", 1.0),
            entry(KIND_FUSION, "f", "m", 1.5),
        ])
        assert render_cell(positive.cells[("f", "m")]) == "1.50 (+50.00%)"

    def test_markdown_table(self, tmp_path):
        table = build_report(TWO_COLUMN_ENTRIES)
        path = tmp_path / "report.md"
        write_report_markdown(table, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "| network | cosine | chi2 |"
        assert lines[1] == "|---|---|---|"
        assert lines[2] == "| neta | 1.66 | 1.73 |"
        assert lines[4] == "| neta+netb | **1.31 (-21.08%)** | **1.33 (-23.12%)** |"

    def test_csv_table(self, tmp_path):
        table = build_report(TWO_COLUMN_ENTRIES)
        path = tmp_path / "report.csv"
        write_report_csv(table, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "kind,row,column,eer_percent,change_percent,best"
        assert lines[1] == "system,neta,cosine,1.66,,false"
        fusion_rows = [line for line in lines if line.startswith("fusion")]
        assert len(fusion_rows) == 2
        assert fusion_rows[0].endswith(",true")

    def test_deterministic_output(self, tmp_path):
        table = build_report(TWO_COLUMN_ENTRIES)
        a, b = tmp_path / "a.md", tmp_path / "b.md"
        write_report_markdown(table, a)
        write_report_markdown(table, b)
        assert a.read_bytes() == b.read_bytes()


class TestReportInput:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "in.csv"
        path.write_text(
            "kind,row,column,eer_percent\n"
            "system,neta,cosine,1.66\n"
            "fusion,neta+netb,cosine,1.31\n", encoding="utf-8")
        entries = read_report_entries(path)
        assert entries == [
            ReportEntry(KIND_SYSTEM, "neta", "cosine", 1.66),
            ReportEntry(KIND_FUSION, "neta+netb", "cosine", 1.31),
        ]

    def test_errors(self, tmp_path):
        path = tmp_path / "in.csv"
        path.write_text("who\n", encoding="utf-8")
        with pytest.raises(ParseError, match="line 1"):
            read_report_entries(path)
        path.write_text(
            "kind,row,column,eer_percent\nmean,a,m,1.0\n", encoding="utf-8")
        with pytest.raises(ParseError, match="line 2"):
            read_report_entries(path)
        path.write_text(
            "kind,row,column,eer_percent\nsystem,a,m,x\n", encoding="utf-8")
        with pytest.raises(ParseError, match="line 2"):
            read_report_entries(path)


class TestPanelPoints:
    def results(self):
        return [
            EvalResult(0.021, 0.5, 10, 20, "intra D2"),
            EvalResult(0.013, 0.5, 10, 20, "intra D1"),
            EvalResult(0.035, 0.5, 10, 20, "gap 1"),
            EvalResult(0.049, 0.5, 10, 20, "gap 3"),
            EvalResult(0.010, 0.5, 10, 20, "all"),
        ]

    def test_intra_panel_sorted_by_distance(self):
        points = panel_points(self.results(), PANEL_INTRA)
        assert points == [(1, pytest.approx(1.3)), (2, pytest.approx(2.1))]

    def test_gap_panel(self):
        points = panel_points(self.results(), PANEL_GAP)
        assert points == [(1, pytest.approx(3.5)), (3, pytest.approx(4.9))]

    def test_unknown_panel_and_empty(self):
        with pytest.raises(UsageError):
            panel_points(self.results(), "pooled")
        with pytest.raises(UsageError):
            panel_points([EvalResult(0.01, 0.5, 1, 1, "all")], PANEL_INTRA)


class TestSeriesFiles:
    def test_series_csv(self, tmp_path):
        path = tmp_path / "series.csv"
        write_series_csv(
            "distance", [1, 2, 3],
            {"neta": [1.5, 2.0, 2.5], "netb": [1.0, 1.1, 1.2]}, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "distance,neta,netb"
        assert lines[1] == "1,1.5,1.0"
        assert len(lines) == 4

    def test_series_validation(self, tmp_path):
        path = tmp_path / "series.csv"
        with pytest.raises(UsageError):
            write_series_csv("x", [1], {}, path)
        with pytest.raises(UsageError):
            write_series_csv("x", [], {"a": []}, path)
        with pytest.raises(UsageError, match="'a'"):
            write_series_csv("x", [1, 2], {"a": [1.0]}, path)

    def test_svg_deterministic_and_self_contained(self, tmp_path):
        series = {"neta": [1.5, 2.0, 2.5], "netb": [1.0, 1.4, 1.2]}
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        render_polyline_svg("distance", "eer", [1, 2, 3], series, a, title="x")
        render_polyline_svg("distance", "eer", [1, 2, 3], series, b, title="x")
        assert a.read_bytes() == b.read_bytes()
        text = a.read_text(encoding="utf-8")
        assert text.startswith("<svg")
        assert text.count("<polyline") == 2
        assert "neta" in text and "netb" in text
        assert "http://" not in text.replace("http://www.w3.org", "")

    def test_svg_rejects_empty(self, tmp_path):
        with pytest.raises(UsageError):
            render_polyline_svg("x", "y", [], {"a": []}, tmp_path / "c.svg")
