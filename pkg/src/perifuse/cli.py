"""Command-line pipeline over the library: ingestion, protocol generation,
scoring, evaluation, fusion, explanation, divergence analysis, reports, and
synthetic data.

Conventions shared by every command: results go to files or stdout,
diagnostics go to stderr, the exit status is 0 exactly when no error
occurred, and each command that writes outputs also writes a JSON metadata
file next to them (the resolved flags, seeds, and SHA-256 digests of the
inputs; no timestamps, so reruns are byte-identical).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import _accel, divergence, evaluation, fusion, geometry, lime, metrics
from . import protocol as protocol_mod
from . import reporting, synth
from .datamodel import (
    ingest_heatmap,
    ingest_templates,
    read_manifest,
    sample_key_from_stem,
    write_heatmap,
    write_templates,
)
from .errors import ParseError, ToolkitError, UsageError


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_meta(target: Path, args: argparse.Namespace, inputs) -> None:
    """Run metadata next to the output: flags, seeds, and input digests."""
    flags = {}
    for key, value in vars(args).items():
        if key in ("func", "command") or callable(value):
            continue
        if isinstance(value, Path):
            value = str(value)
        if isinstance(value, list):
            value = [str(v) for v in value]
        flags[key] = value
    meta = {
        "command": getattr(args, "command", ""),
        "flags": flags,
        "inputs": {str(p): _sha256(Path(p)) for p in inputs},
    }
    if target.is_dir():
        meta_path = target / "run_meta.json"
    else:
        meta_path = target.with_name(target.name + ".meta.json")
    meta_path.write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_templates(args):
    manifest = read_manifest(args.manifest)
    templates = ingest_templates(args.templates, manifest)
    return manifest, templates


# --------------------------------------------------------------------------
# command handlers


def cmd_ingest(args) -> None:
    manifest, templates = _load_templates(args)
    print(
        f"templates={len(templates)} dim={templates.dim} "
        f"subjects={len(templates.subjects())} "
        f"distances={len(templates.distances())}")
    if args.out:
        write_templates(templates, args.out)
        _write_meta(Path(args.out), args, [args.manifest, args.templates])


def cmd_geometry_crop_box(args) -> None:
    box = geometry.sclera_crop_box(args.center_x, args.center_y, args.radius)
    print(f"center_x={box.center_x!r} center_y={box.center_y!r} side={box.side!r}")


def cmd_geometry_face_valid(args) -> None:
    ok = geometry.face_crop_valid(
        args.inter_eye, args.midpoint_offset, args.nose_offset,
        min_inter_eye=args.min_inter_eye, frontal_ratio=args.frontal_ratio)
    print("valid" if ok else "invalid")


def cmd_protocol(args) -> None:
    manifest, templates = _load_templates(args)
    sets = protocol_mod.full_protocol(templates, manifest.d_max)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for pset in sets:
        label = pset.pairs[0].label
        if label == protocol_mod.LABEL_GENUINE:
            stem = (f"genuine_intra_d{pset.di}" if pset.di == pset.dj
                    else f"genuine_cross_d{pset.di}_d{pset.dj}")
        else:
            stem = f"impostor_d{pset.di}_d{pset.dj}"
        protocol_mod.write_protocol(pset, out / f"{stem}.csv")
    genuine, impostor = protocol_mod.protocol_totals(sets)
    print(f"genuine={genuine} impostor={impostor}")
    _write_meta(out, args, [args.manifest, args.templates])


def cmd_score(args) -> None:
    manifest, templates = _load_templates(args)
    score_sets = []
    for proto_path in args.protocol:
        pset = protocol_mod.read_protocol(proto_path)
        score_sets.append(metrics.score_pairs(
            pset, templates, args.metric, system=args.system,
            l2_normalize=args.l2_normalize))
    metrics.write_scores(score_sets, args.out)
    total = sum(len(ss) for ss in score_sets)
    print(f"scored={total} metric={args.metric} system={args.system}")
    _write_meta(
        Path(args.out), args,
        [args.manifest, args.templates] + list(args.protocol))


def _load_score_sets(paths, system=None, metric=None):
    sets = []
    for path in paths:
        sets.extend(metrics.read_scores(path))
    if system is not None:
        sets = [ss for ss in sets if ss.system == system]
    if metric is not None:
        sets = [ss for ss in sets if ss.metric == metric]
    if not sets:
        raise UsageError("no score sets match the requested system/metric")
    return sets


def cmd_eval(args) -> None:
    sets = _load_score_sets(args.scores, args.system, args.metric)
    identities = {(ss.system, ss.metric) for ss in sets}
    if len(identities) > 1:
        raise UsageError(
            f"scores cover multiple (system, metric) groups {sorted(identities)}; "
            f"narrow with --system/--metric")
    results = evaluation.group_eval(sets, args.grouping)
    evaluation.write_eval_report(results, args.out)
    for r in results:
        print(
            f"{r.grouping}: eer_percent={r.eer * 100.0:.4f} "
            f"threshold={r.eer_threshold:.6g} "
            f"n_genuine={r.n_genuine} n_impostor={r.n_impostor}")
    _write_meta(Path(args.out), args, list(args.scores))


def _one_set_per_file(paths) -> list[metrics.ScoreSet]:
    sets = []
    for path in paths:
        loaded = metrics.read_scores(path)
        if len(loaded) != 1:
            raise UsageError(
                f"{path} holds {len(loaded)} (system, metric) groups; "
                f"fusion inputs need exactly one per file")
        sets.append(loaded[0])
    return sets


def cmd_fuse_train(args) -> None:
    sets = _one_set_per_file(args.scores)
    if args.train_on_all:
        model = fusion.train_fusion(
            sets, prior=args.prior, regularization=args.ridge, trained_on="all")
        fused = fusion.apply_fusion(model, sets)
    else:
        fused = fusion.crossval_fused_scores(
            sets, k=args.folds, prior=args.prior, regularization=args.ridge)
        model = fusion.train_fusion(
            sets, prior=args.prior, regularization=args.ridge,
            trained_on=f"all; reported scores from {args.folds}-fold "
                       f"subject-disjoint CV")
    fusion.write_fusion_model(model, args.out_model)
    _write_meta(Path(args.out_model), args, list(args.scores))
    result = evaluation.compute_eer(
        fused.genuine_values(), fused.impostor_values())
    print(
        f"fused_eer_percent={result.eer * 100.0:.4f} "
        f"separable={'true' if model.separable else 'false'}")
    if args.out_scores:
        metrics.write_scores([fused], args.out_scores)
        _write_meta(Path(args.out_scores), args, list(args.scores))


def cmd_fuse_apply(args) -> None:
    model = fusion.read_fusion_model(args.model)
    sets = _one_set_per_file(args.scores)
    by_name = {ss.system: ss for ss in sets}
    if len(by_name) != len(sets):
        raise UsageError("fusion inputs carry duplicate system names")
    missing = [name for name in model.system_names if name not in by_name]
    if missing:
        raise UsageError(f"no scores given for model systems {missing}")
    ordered = [by_name[name] for name in model.system_names]
    fused = fusion.apply_fusion(model, ordered)
    metrics.write_scores([fused], args.out)
    result = evaluation.compute_eer(fused.genuine_values(), fused.impostor_values())
    print(f"fused_eer_percent={result.eer * 100.0:.4f}")
    _write_meta(Path(args.out), args, [args.model] + list(args.scores))


def cmd_explain(args) -> None:
    grid = lime.SegmentationGrid(
        args.image_w, args.image_h, args.cells_x, args.cells_y)
    config = lime.LimeConfig(
        grid=grid, n_samples=args.samples, keep_prob=args.keep_prob,
        kernel_width=args.kernel_width, ridge=args.ridge, seed=args.seed,
        batch_size=args.batch_size)
    if args.scorer_cmd:
        scorer = lime.ExternalCommandScorer(args.scorer_cmd)
    else:
        weights = np.array([float(x) for x in args.planted_weights.split(",")])
        if weights.size != grid.n_cells:
            raise UsageError(
                f"planted scorer needs {grid.n_cells} weights, got {weights.size}")
        scorer = lime.PlantedLinearScorer(weights)
    try:
        probe_id = sample_key_from_stem(args.probe)
    except ParseError:
        probe_id = args.probe
    outcome = lime.explain_full(probe_id, args.reference, scorer, config)
    write_heatmap(outcome.heatmap, args.out)
    inputs = []
    if args.out_coefficients:
        lines = [f"intercept = {outcome.surrogate.intercept!r}"]
        lines += [
            f"cell.{i} = {float(c)!r}"
            for i, c in enumerate(outcome.surrogate.coefficients)
        ]
        Path(args.out_coefficients).write_text(
            "\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    top = int(np.argmax(outcome.surrogate.coefficients))
    print(
        f"cells={grid.n_cells} samples={args.samples} top_cell={top} "
        f"top_coefficient={outcome.surrogate.coefficients[top]:.6g}")
    _write_meta(Path(args.out), args, inputs)


def cmd_diverge(args) -> None:
    tables = {}
    inputs = []
    for spec_text in args.heatmaps:
        if "=" not in spec_text:
            raise UsageError(
                f"--heatmaps takes SYSTEM=DIR entries, got {spec_text!r}")
        system, _, directory = spec_text.partition("=")
        system = system.strip()
        if not system:
            raise UsageError(f"empty system name in {spec_text!r}")
        if system in tables:
            raise UsageError(f"system {system!r} given twice")
        files = sorted(Path(directory).glob("*.csv"))
        if not files:
            raise UsageError(f"no heatmap files under {directory}")
        table = {}
        for f in files:
            key = sample_key_from_stem(f.stem)
            table[key] = ingest_heatmap(f, key=key)
            inputs.append(f)
        tables[system] = table
    cloud = divergence.pairwise_cloud(tables, sorted(tables))
    divergence.write_cloud(cloud, args.out_cloud)
    _write_meta(Path(args.out_cloud), args, inputs)
    if args.out_correlation:
        divergence.write_correlation_report(cloud, args.out_correlation)
    if args.out_average_dir:
        avg_dir = Path(args.out_average_dir)
        avg_dir.mkdir(parents=True, exist_ok=True)
        for system in sorted(tables):
            averages = divergence.average_by_distance(list(tables[system].values()))
            for d, heatmap in averages.items():
                write_heatmap(heatmap, avg_dir / f"avg_{system}_d{d}.csv")
    if args.extremes:
        if not args.out_extremes:
            raise UsageError("--extremes needs --out-extremes")
        lowest, highest = divergence.extreme_images(cloud, args.extremes)
        with open(args.out_extremes, "w", encoding="utf-8", newline="") as fh:
            fh.write("rank,kind,subject,session,eye,distance,mean_jsd\n")
            for kind, points in (("lowest", lowest), ("highest", highest)):
                for rank, p in enumerate(points, start=1):
                    fh.write(
                        f"{rank},{kind},{p.key.subject_id},{p.key.session},"
                        f"{p.key.eye},{p.key.distance},{p.mean!r}\n")
    n_axes = len(cloud[0].pairs) if cloud else 0
    print(f"images={len(cloud)} systems={len(tables)} pair_axes={n_axes}")


def cmd_report(args) -> None:
    entries = reporting.read_report_entries(args.input)
    table = reporting.build_report(entries)
    if args.out_md:
        reporting.write_report_markdown(table, args.out_md)
        _write_meta(Path(args.out_md), args, [args.input])
    if args.out_csv:
        reporting.write_report_csv(table, args.out_csv)
        _write_meta(Path(args.out_csv), args, [args.input])
    # the markdown rendering always goes to stdout for quick reading
    for _, row in table.rows:
        cells = [
            reporting.render_cell(table.cells.get((row, c)))
            for c in table.columns
        ]
        print(row + ": " + " | ".join(cells))


def cmd_figure_data(args) -> None:
    series = {}
    inputs = []
    for spec_text in args.series:
        if "=" not in spec_text:
            raise UsageError(f"--series takes NAME=EVAL_CSV entries, got {spec_text!r}")
        name, _, path = spec_text.partition("=")
        name = name.strip()
        if not name or name in series:
            raise UsageError(f"bad or duplicate series name in {spec_text!r}")
        results = evaluation.read_eval_report(path)
        series[name] = reporting.panel_points(results, args.panel)
        inputs.append(path)
    x_grid = [x for x, _ in next(iter(series.values()))]
    for name, points in series.items():
        if [x for x, _ in points] != x_grid:
            raise UsageError(f"series {name!r} covers a different x grid")
    columns = {name: [y for _, y in points] for name, points in series.items()}
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    x_label = "distance" if args.panel == reporting.PANEL_INTRA else "gap"
    csv_path = out_dir / f"panel_{args.panel}.csv"
    reporting.write_series_csv(x_label, x_grid, columns, csv_path)
    written = [csv_path]
    if args.svg:
        svg_path = out_dir / f"panel_{args.panel}.svg"
        reporting.render_polyline_svg(
            x_label, "EER (%)", x_grid, columns, svg_path,
            title=args.title or f"EER by {x_label}")
        written.append(svg_path)
    print(" ".join(str(p) for p in written))
    _write_meta(out_dir, args, inputs)


def cmd_synth(args) -> None:
    systems = tuple(s.strip() for s in args.systems.split(",") if s.strip())
    manifest, template_sets = synth.synth_dataset(
        subjects=args.subjects, distances=args.distances, dim=args.dim,
        systems=systems, seed=args.seed, separation=args.separation,
        correlation=args.correlation, name=args.name)
    out = Path(args.out)
    synth.write_synth_dataset(out, manifest, template_sets)
    per_system = len(next(iter(template_sets.values())))
    print(
        f"subjects={args.subjects} distances={args.distances} "
        f"systems={len(systems)} templates_per_system={per_system}")
    _write_meta(out, args, [])


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="perifuse",
        description="verification protocols, score fusion, and heatmap "
                    "divergence for periocular experiments")
    parser.add_argument(
        "--threads", type=int, default=0,
        help="bound the worker thread count of the compiled kernels")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a template CSV against a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--templates", required=True)
    p.add_argument("--out", help="write a normalized copy of the templates")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("geometry", help="crop-region arithmetic")
    geo = p.add_subparsers(dest="geometry_command", required=True)
    g = geo.add_parser("crop-box", help="periocular crop box from eye center and sclera radius")
    g.add_argument("--center-x", type=float, required=True)
    g.add_argument("--center-y", type=float, required=True)
    g.add_argument("--radius", type=float, required=True)
    g.set_defaults(func=cmd_geometry_crop_box)
    g = geo.add_parser("face-valid", help="frontality and size gate for a detected face")
    g.add_argument("--inter-eye", type=float, required=True)
    g.add_argument("--midpoint-offset", type=float, required=True)
    g.add_argument("--nose-offset", type=float, required=True)
    g.add_argument("--min-inter-eye", type=float, default=geometry.DEFAULT_MIN_INTER_EYE)
    g.add_argument("--frontal-ratio", type=float, default=geometry.DEFAULT_FRONTAL_RATIO)
    g.set_defaults(func=cmd_geometry_face_valid)

    p = sub.add_parser("protocol", help="generate all genuine/impostor pair lists")
    p.add_argument("--manifest", required=True)
    p.add_argument("--templates", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_protocol)

    p = sub.add_parser("score", help="score protocol pairs against templates")
    p.add_argument("--manifest", required=True)
    p.add_argument("--templates", required=True)
    p.add_argument("--protocol", action="append", required=True,
                   help="protocol CSV; repeat for several combinations")
    p.add_argument("--metric", choices=metrics.METRICS, required=True)
    p.add_argument("--system", required=True, help="system name stamped on the scores")
    p.add_argument("--l2-normalize", action="store_true",
                   help="rescale each template to unit L2 norm before scoring")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="equal error rates of one score group")
    p.add_argument("--scores", action="append", required=True)
    p.add_argument("--grouping", choices=evaluation.GROUPINGS, default="pooled")
    p.add_argument("--system", help="narrow multi-system files to one system")
    p.add_argument("--metric", help="narrow multi-metric files to one metric")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("fuse", help="train or apply affine score fusion")
    fuse = p.add_subparsers(dest="fuse_command", required=True)
    f = fuse.add_parser("train", help="fit fusion weights on labelled scores")
    f.add_argument("--scores", action="append", required=True,
                   help="one score CSV per system, aligned to one protocol")
    f.add_argument("--prior", type=float, default=0.5)
    f.add_argument("--ridge", type=float, default=fusion.DEFAULT_RIDGE)
    f.add_argument("--folds", type=int, default=2,
                   help="subject-disjoint folds behind the reported scores")
    f.add_argument("--train-on-all", action="store_true",
                   help="skip cross-validation; report resubstitution scores")
    f.add_argument("--out-model", required=True)
    f.add_argument("--out-scores", help="write the fused score CSV")
    f.set_defaults(func=cmd_fuse_train)
    f = fuse.add_parser("apply", help="apply a stored fusion model")
    f.add_argument("--model", required=True)
    f.add_argument("--scores", action="append", required=True)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fuse_apply)

    p = sub.add_parser("explain", help="relevance map of a probe under a black-box scorer")
    p.add_argument("--probe", required=True)
    p.add_argument("--reference", required=True)
    scorer = p.add_mutually_exclusive_group(required=True)
    scorer.add_argument("--scorer-cmd",
                        help="external command invoked per batch with the masks "
                             "path and scores path appended")
    scorer.add_argument("--planted-weights",
                        help="comma-separated cell weights for the in-process "
                             "linear demo scorer")
    p.add_argument("--image-w", type=int, default=113)
    p.add_argument("--image-h", type=int, default=113)
    p.add_argument("--cells-x", type=int, default=8)
    p.add_argument("--cells-y", type=int, default=8)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--keep-prob", type=float, default=0.5)
    p.add_argument("--kernel-width", type=float, default=0.25)
    p.add_argument("--ridge", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--out", required=True, help="heatmap CSV path")
    p.add_argument("--out-coefficients", help="signed surrogate coefficients")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("diverge", help="cross-system heatmap divergence analysis")
    p.add_argument("--heatmaps", action="append", required=True,
                   help="SYSTEM=DIR of heatmap CSVs named <subject>_<session>_<eye>_<distance>.csv")
    p.add_argument("--out-cloud", required=True)
    p.add_argument("--out-correlation")
    p.add_argument("--out-average-dir")
    p.add_argument("--extremes", type=int, default=0,
                   help="also rank the k most/least agreed-on images")
    p.add_argument("--out-extremes")
    p.set_defaults(func=cmd_diverge)

    p = sub.add_parser("report", help="render the fusion results table")
    p.add_argument("--input", required=True,
                   help="CSV of kind,row,column,eer_percent entries")
    p.add_argument("--out-md")
    p.add_argument("--out-csv")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("figure-data", help="per-figure data series from eval reports")
    p.add_argument("--series", action="append", required=True,
                   help="NAME=EVAL_CSV; repeat per line in the figure")
    p.add_argument("--panel", choices=(reporting.PANEL_INTRA, reporting.PANEL_GAP),
                   required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--svg", action="store_true", help="also render an SVG chart")
    p.add_argument("--title", default="")
    p.set_defaults(func=cmd_figure_data)

    p = sub.add_parser("synth", help="write a synthetic dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--subjects", type=int, default=86)
    p.add_argument("--distances", type=int, default=5)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--systems", default="sysa,sysb,sysc")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--separation", type=float, default=2.0)
    p.add_argument("--correlation", type=float, default=0.25)
    p.add_argument("--name", default="synth")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads > 0 and _accel.BACKEND == "numba":
        import numba

        numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
    try:
        args.func(args)
    except (ToolkitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
