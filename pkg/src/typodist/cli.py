"""Command-line front end for batch runs.

Subcommands: ingest, aggregate, distance, audit, coverage, report.

Exit codes: 0 on success, 1 for usage and flag validation problems, 2 for
data problems (malformed files, unknown languages, missing aggregates).
Every run writes a manifest with the config digest and the sha256 of each
input and output file; identical config plus identical inputs reproduce
byte-identical outputs and manifests.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from ._version import __version__
from .aggregate import (
    aggregate_average,
    aggregate_knn,
    aggregate_union,
    ensure_aggregate,
    union_average_equality,
)
from .audit import audit_dataset, best_per_class
from .coverage import (
    coverage_stats,
    family_coverage,
    nonmissing_histogram,
    render_family_svg,
    render_histogram_svg,
    shape_notes,
    subset_coverage,
    write_coverage_csv,
    write_family_csv,
)
from .distance import PairwiseLanguageDistance
from .errors import TypodistError
from .io import (
    atomic_write,
    format_distance,
    load_dataset,
    load_language_list,
    write_feature_matrix,
)
from .manifest import config_digest, header_comment, write_manifest
from .model import TYPOLOGICAL_CLASSES


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this front end reserves 2 for data
    errors, so usage problems exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("dataset", help="dataset directory")
    sub.add_argument("--manifest", default=None,
                     help="manifest path (default: alongside the outputs)")


def _add_knn_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--knn-k", type=int, default=10,
                     help="neighbours per vote (default 10)")
    sub.add_argument("--knn-weights", default=None, metavar="GEN,GEO,FEAT",
                     help="blend weights, three comma-separated numbers")
    sub.add_argument("--tie-value", type=float, default=1.0,
                     help="value used on vote ties (default 1.0)")


def build_parser() -> _Parser:
    parser = _Parser(prog="typodist",
                     description="typological distance toolbox")
    parser.add_argument("--version", action="version",
                        version=f"typodist {__version__}")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    p = subs.add_parser("ingest", parents=[], help="validate a dataset directory")
    _add_common(p)
    p.add_argument("--out", default=None, help="write a JSON ingest report")
    p.set_defaults(func=cmd_ingest)

    p = subs.add_parser("aggregate", help="combine sources into aggregates")
    _add_common(p)
    p.add_argument("--features", action="append",
                   choices=list(TYPOLOGICAL_CLASSES), default=None)
    p.add_argument("--aggregate", choices=["union", "average", "knn"],
                   default="union")
    p.add_argument("--out-dir", default=None,
                   help="default: <dataset>/aggregates")
    _add_knn_flags(p)
    p.set_defaults(func=cmd_aggregate)

    p = subs.add_parser("distance", help="compute pairwise distances")
    _add_common(p)
    p.add_argument("--features", action="append",
                   choices=list(TYPOLOGICAL_CLASSES), default=None)
    p.add_argument("--aggregate", choices=["union", "average", "knn"],
                   default="union")
    p.add_argument("--metric", choices=["cosine", "angular"], default="angular")
    p.add_argument("--regularized", action=argparse.BooleanOptionalAction,
                   default=True)
    p.add_argument("--policy", choices=["paper", "zeros", "nan"],
                   default="paper")
    p.add_argument("--format", choices=["tsv", "csv", "structured"],
                   default="tsv")
    p.add_argument("--layout", choices=["triplet", "dense"], default="triplet")
    p.add_argument("--include-self", action=argparse.BooleanOptionalAction,
                   default=False, help="also emit self-pairs")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True,
                   help="output file, or directory with several --features")
    _add_knn_flags(p)
    p.set_defaults(func=cmd_distance)

    p = subs.add_parser("audit", help="compare against reference distances")
    _add_common(p)
    p.add_argument("--features", action="append",
                   choices=list(TYPOLOGICAL_CLASSES), default=None)
    p.add_argument("--aggregate", action="append",
                   choices=["union", "average", "knn"], default=None,
                   dest="aggregations")
    p.add_argument("--regularized", action=argparse.BooleanOptionalAction,
                   default=True)
    p.add_argument("--policy", choices=["paper", "zeros", "nan"],
                   default="paper")
    p.add_argument("--precision", type=int, default=2)
    p.add_argument("--scope", choices=["all", "nonempty"], default="all")
    p.add_argument("--format", choices=["csv", "structured"], default="csv")
    p.add_argument("--out", default=None, help="table output path")
    p.set_defaults(func=cmd_audit)

    p = subs.add_parser("coverage", help="feature-coverage statistics")
    _add_common(p)
    p.add_argument("--top-families", type=int, default=None)
    p.add_argument("--subset", default=None,
                   help="language list file restricting the report")
    p.add_argument("--format", choices=["csv", "structured"], default="csv")
    p.add_argument("--svg", action="store_true",
                   help="also render SVG charts")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_coverage)

    p = subs.add_parser("report", help="full analysis in one run")
    _add_common(p)
    p.add_argument("--top-families", type=int, default=20)
    p.add_argument("--precision", type=int, default=2)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--svg", action="store_true")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def _run_config(args: argparse.Namespace) -> dict:
    # workers is a run-environment knob, not part of what the outputs mean;
    # keeping it out of the config keeps runs byte-identical at any
    # worker count.
    config = {}
    for key, value in sorted(vars(args).items()):
        if key in ("func", "manifest", "workers"):
            continue
        config[key] = str(value) if isinstance(value, Path) else value
    return config


def _knn_kwargs(args: argparse.Namespace) -> dict:
    weights = (1 / 3, 1 / 3, 1 / 3)
    if getattr(args, "knn_weights", None):
        parts = [float(x) for x in args.knn_weights.split(",")]
        if len(parts) != 3:
            raise TypodistError(
                f"--knn-weights needs three numbers, got {args.knn_weights!r}"
            )
        weights = (parts[0], parts[1], parts[2])
    return {
        "k": getattr(args, "knn_k", 10),
        "weights": weights,
        "tie_value": getattr(args, "tie_value", 1.0),
    }


def _classes(args: argparse.Namespace, dataset) -> list[str]:
    if args.features:
        return list(dict.fromkeys(args.features))
    present = [
        fc for fc in TYPOLOGICAL_CLASSES
        if dataset.sources_for(fc) or any(c == fc for c, _ in dataset.aggregates)
    ]
    if not present:
        raise TypodistError("the dataset has no typological feature data")
    return present


def _finish(args, config, outputs, *, default_dir=None, extra=None) -> None:
    if args.manifest:
        manifest_path = Path(args.manifest)
    elif default_dir is not None:
        manifest_path = Path(default_dir) / "manifest.json"
    elif outputs:
        first = Path(outputs[0])
        manifest_path = first.with_name(first.name + ".manifest.json")
    else:
        manifest_path = Path("typodist-manifest.json")
    write_manifest(
        manifest_path,
        subcommand=args.subcommand,
        config=config,
        input_root=args.dataset,
        outputs=outputs,
        extra=extra,
    )


def cmd_ingest(args) -> int:
    dataset, report = load_dataset(args.dataset)
    config = _run_config(args)
    print(f"files loaded: {report.files_loaded}")
    print(f"languages: {len(dataset.languages)}")
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    outputs = []
    if args.out:
        doc = {
            "files_loaded": report.files_loaded,
            "languages": len(dataset.languages),
            "sources": sorted(
                f"{m.feature_class}/{m.source_id}" for m in dataset.sources
            ),
            "aggregates": sorted(f"{fc}/{agg}" for fc, agg in dataset.aggregates),
            "references": sorted(dataset.references),
            "warnings": list(report.warnings),
            "config_digest": config_digest(config),
        }
        with atomic_write(args.out) as fh:
            fh.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
        outputs.append(args.out)
    _finish(args, config, outputs,
            extra={"languages": len(dataset.languages),
                   "warnings": len(report.warnings)})
    return 0


def cmd_aggregate(args) -> int:
    dataset, _ = load_dataset(args.dataset)
    config = _run_config(args)
    out_dir = Path(args.out_dir) if args.out_dir else Path(args.dataset) / "aggregates"
    out_dir.mkdir(parents=True, exist_ok=True)
    knn = _knn_kwargs(args)
    outputs = []
    for fc in _classes(args, dataset):
        sources = dataset.sources_for(fc)
        if not sources:
            raise TypodistError(f"no {fc} sources in the dataset")
        if args.aggregate == "union":
            matrix = aggregate_union(sources)
        elif args.aggregate == "average":
            matrix = aggregate_average(sources)
        else:
            matrix = aggregate_knn(sources, dataset.languages, **knn)
        path = out_dir / f"{fc}_{args.aggregate}.tsv"
        write_feature_matrix(matrix, path, header_comment(config))
        outputs.append(path)
        print(f"wrote {path} ({matrix.n_languages} languages, "
              f"{matrix.n_features} features)")
    _finish(args, config, outputs, default_dir=out_dir)
    return 0


def _distance_paths(args, classes) -> dict[str, Path]:
    ext = {"tsv": "tsv", "csv": "csv", "structured": "jsonl"}[args.format]
    out = Path(args.out)
    if len(classes) == 1:
        return {classes[0]: out}
    out.mkdir(parents=True, exist_ok=True)
    return {
        fc: out / f"{fc}_{args.aggregate}_{args.metric}.{ext}"
        for fc in classes
    }


def _write_triplets(engine, path, fmt, header, include_self, workers) -> None:
    sep = "\t" if fmt == "tsv" else ","
    with atomic_write(path) as fh:
        fh.write(header + "\n")
        fh.write(f"lang1{sep}lang2{sep}value\n")
        codes = engine.codes_
        for start, values in engine.iter_blocks(workers=workers):
            lines = []
            for local in range(values.shape[0]):
                i = start + local
                row = values[local]
                first = i if include_self else i + 1
                for j in range(first, engine.n_):
                    lines.append(
                        f"{codes[i]}{sep}{codes[j]}{sep}{format_distance(row[j])}"
                    )
            if lines:
                fh.write("\n".join(lines) + "\n")


def _write_dense(engine, path, fmt, header, workers) -> None:
    sep = "\t" if fmt == "tsv" else ","
    with atomic_write(path) as fh:
        fh.write(header + "\n")
        fh.write("language" + sep + sep.join(engine.codes_) + "\n")
        for start, values in engine.iter_blocks(workers=workers):
            lines = []
            for local in range(values.shape[0]):
                cells = sep.join(format_distance(v) for v in values[local])
                lines.append(engine.codes_[start + local] + sep + cells)
            fh.write("\n".join(lines) + "\n")


def _write_structured(engine, path, meta, include_self, workers) -> None:
    with atomic_write(path) as fh:
        fh.write(json.dumps(meta, sort_keys=True) + "\n")
        for rec in engine.iter_records(include_self=include_self,
                                       workers=workers):
            value = None if rec.value != rec.value else rec.value
            fh.write(json.dumps(
                {"lang_a": rec.lang_a, "lang_b": rec.lang_b, "value": value,
                 "meaningful": rec.meaningful},
                sort_keys=True) + "\n")


def cmd_distance(args) -> int:
    dataset, _ = load_dataset(args.dataset)
    config = _run_config(args)
    knn = _knn_kwargs(args)
    classes = _classes(args, dataset)
    paths = _distance_paths(args, classes)
    header = header_comment(config)
    outputs = []
    for fc in classes:
        matrix = ensure_aggregate(dataset, fc, args.aggregate, **knn)
        engine = PairwiseLanguageDistance(
            metric=args.metric, regularized=args.regularized,
            policy=args.policy,
        ).fit(matrix)
        path = paths[fc]
        if args.format == "structured":
            meta = {"tool": "typodist", "version": __version__,
                    "config_digest": config_digest(config),
                    "feature_class": fc, "aggregation": args.aggregate,
                    "metric": args.metric, "regularized": args.regularized,
                    "policy": args.policy}
            _write_structured(engine, path, meta, args.include_self,
                              args.workers)
        elif args.layout == "dense":
            _write_dense(engine, path, args.format, header, args.workers)
        else:
            _write_triplets(engine, path, args.format, header,
                            args.include_self, args.workers)
        outputs.append(path)
        stats = engine.stats
        print(f"wrote {path} ({stats['languages']} languages)")
    _finish(args, config, outputs,
            default_dir=Path(args.out) if len(classes) > 1 else None)
    return 0


def _audit_csv(results, classes, path, header) -> None:
    combos = []
    for r in results:
        key = (r.aggregation, r.metric)
        if key not in combos:
            combos.append(key)
    lines = [header]
    cols = ["aggregation", "metric"]
    for fc in classes:
        cols += [f"{fc}_all", f"{fc}_nonempty"]
    lines.append(",".join(cols))
    table = {(r.aggregation, r.metric, r.feature_class): r for r in results}
    for agg, metric in combos:
        row = [agg, metric]
        for fc in classes:
            r = table.get((agg, metric, fc))
            if r is None:
                row += ["", ""]
            else:
                row += [f"{r.all_pairs.percent:.2f}",
                        f"{r.nonempty_pairs.percent:.2f}"]
        lines.append(",".join(row))
    with atomic_write(path) as fh:
        fh.write("\n".join(lines) + "\n")


def _audit_json(results, best, path, config) -> None:
    doc = {
        "tool": "typodist",
        "version": __version__,
        "config_digest": config_digest(config),
        "best": {fc: list(combo) for fc, combo in best.items()},
        "results": [
            {
                "feature_class": r.feature_class,
                "aggregation": r.aggregation,
                "metric": r.metric,
                "regularized": r.regularized,
                "policy": r.policy,
                "places": r.places,
                "audited_languages": r.audited_languages,
                "all_pairs": {"total": r.all_pairs.total,
                              "matched": r.all_pairs.matched,
                              "percent": r.all_pairs.percent},
                "nonempty_pairs": {"total": r.nonempty_pairs.total,
                                   "matched": r.nonempty_pairs.matched,
                                   "percent": r.nonempty_pairs.percent},
                "unmatched_samples": [
                    {"lang_a": s.lang_a, "lang_b": s.lang_b,
                     "computed": s.computed, "reference": s.reference}
                    for s in r.unmatched_samples
                ],
            }
            for r in results
        ],
    }
    with atomic_write(path) as fh:
        fh.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def cmd_audit(args) -> int:
    dataset, _ = load_dataset(args.dataset)
    config = _run_config(args)
    results = audit_dataset(
        dataset,
        feature_classes=args.features,
        aggregations=args.aggregations,
        regularized=args.regularized,
        policy=args.policy,
        places=args.precision,
    )
    if not results:
        raise TypodistError("nothing to audit: no reference tables found")
    scope = "all_pairs" if args.scope == "all" else "nonempty_pairs"
    best = best_per_class(results, scope)
    for r in results:
        sc = r.scope(scope)
        star = " *" if best.get(r.feature_class) == (r.aggregation, r.metric) else ""
        print(f"{r.feature_class:<10} {r.aggregation:<8} {r.metric:<8} "
              f"{sc.percent:6.2f}% ({sc.matched}/{sc.total}){star}")
    outputs = []
    if args.out:
        classes = list(dict.fromkeys(r.feature_class for r in results))
        if args.format == "csv":
            _audit_csv(results, classes, args.out, header_comment(config))
        else:
            _audit_json(results, best, args.out, config)
        outputs.append(args.out)
    _finish(args, config, outputs,
            extra={fc: f"{best[fc][0]}/{best[fc][1]}" for fc in best})
    return 0


def _with_unions(dataset):
    """Dataset with union aggregates materialized for any class that has
    sources but no stored union; coverage runs on union aggregates."""
    new = {}
    for fc in TYPOLOGICAL_CLASSES:
        if (fc, "union") not in dataset.aggregates and dataset.sources_for(fc):
            new[(fc, "union")] = aggregate_union(dataset.sources_for(fc))
    return dataset.with_aggregates(new) if new else dataset


def _coverage_outputs(dataset, args, out_dir, config) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.subset:
        codes, warnings = load_language_list(args.subset, dataset)
        for warning in warnings:
            print(f"warning: {warning}", file=sys.stderr)
        stats, families = subset_coverage(dataset, codes, args.top_families)
    else:
        stats = coverage_stats(dataset)
        families = family_coverage(dataset, args.top_families)
    outputs = []
    if args.format == "structured":
        doc = {
            "config_digest": config_digest(config),
            "total_languages": stats.total_languages,
            "all_empty": stats.all_empty_count,
            "any_nonempty": stats.any_nonempty_count,
            "per_class": {
                cc.feature_class: {
                    "empty": cc.empty_count,
                    "empty_pct": cc.empty_percentage,
                    "nonempty": cc.nonempty_count,
                }
                for cc in stats.per_class
            },
            "families": [
                {"family": row.family, "total": row.total,
                 "counts": dict(zip(TYPOLOGICAL_CLASSES, row.counts)),
                 "any_class": row.all_features}
                for row in families
            ],
            "notes": shape_notes(dataset),
        }
        path = out_dir / "coverage.json"
        with atomic_write(path) as fh:
            fh.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
        outputs.append(path)
    else:
        stats_path = out_dir / "coverage_stats.csv"
        write_coverage_csv(stats, stats_path)
        families_path = out_dir / "family_coverage.csv"
        write_family_csv(families, families_path)
        outputs += [stats_path, families_path]
    for fc in TYPOLOGICAL_CLASSES:
        if ("union" not in [a for c, a in dataset.aggregates if c == fc]
                and not dataset.sources_for(fc)):
            continue
        try:
            hist = nonmissing_histogram(dataset, fc)
        except TypodistError:
            continue
        path = out_dir / f"{fc}_histogram.csv"
        with atomic_write(path) as fh:
            fh.write("nonmissing,languages\n")
            for count, n in hist.bins:
                fh.write(f"{count},{n}\n")
        outputs.append(path)
        if args.svg:
            svg = out_dir / f"{fc}_histogram.svg"
            render_histogram_svg(hist, svg)
            outputs.append(svg)
    if args.svg and families:
        svg = out_dir / "family_coverage.svg"
        render_family_svg(families, svg)
        outputs.append(svg)
    for note in shape_notes(dataset):
        print(f"note: {note}")
    return outputs


def cmd_coverage(args) -> int:
    dataset, _ = load_dataset(args.dataset)
    dataset = _with_unions(dataset)
    config = _run_config(args)
    out_dir = Path(args.out_dir)
    outputs = _coverage_outputs(dataset, args, out_dir, config)
    stats = (subset_coverage(dataset, load_language_list(args.subset, dataset)[0])[0]
             if args.subset else coverage_stats(dataset))
    for cc in stats.per_class:
        print(f"{cc.feature_class}: {cc.empty_count} empty "
              f"({cc.empty_percentage:.2f}%) of {cc.total}")
    print(f"all classes empty: {stats.all_empty_count} "
          f"({stats.all_empty_percentage:.2f}%)")
    _finish(args, config, outputs, default_dir=out_dir)
    return 0


def cmd_report(args) -> int:
    dataset, ingest_report = load_dataset(args.dataset)
    dataset = _with_unions(dataset)
    config = _run_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary: dict = {"languages": len(dataset.languages)}

    cov_args = argparse.Namespace(
        subset=None, top_families=args.top_families, format="csv",
        svg=args.svg,
    )
    outputs = _coverage_outputs(dataset, cov_args, out_dir, config)
    stats = coverage_stats(dataset)
    summary["all_empty"] = stats.all_empty_count

    equality = {}
    for fc in TYPOLOGICAL_CLASSES:
        if not dataset.sources_for(fc):
            continue
        union = ensure_aggregate(dataset, fc, "union")
        average = ensure_aggregate(dataset, fc, "average")
        equality[fc] = union_average_equality(union, average)
    if equality:
        path = out_dir / "union_average_equality.csv"
        with atomic_write(path) as fh:
            fh.write("feature_class,equal_pct\n")
            for fc, pct in equality.items():
                fh.write(f"{fc},{pct:.2f}\n")
        outputs.append(path)
        summary["union_average_equality"] = {
            fc: round(pct, 2) for fc, pct in equality.items()
        }

    if dataset.references:
        results = audit_dataset(dataset, places=args.precision)
        if results:
            classes = list(dict.fromkeys(r.feature_class for r in results))
            path = out_dir / "audit_table.csv"
            _audit_csv(results, classes, path, header_comment(config))
            outputs.append(path)
            best = best_per_class(results)
            path = out_dir / "audit_details.json"
            _audit_json(results, best, path, config)
            outputs.append(path)
            summary["best_audit"] = {
                fc: f"{agg}/{metric}" for fc, (agg, metric) in best.items()
            }

    summary["warnings"] = len(ingest_report.warnings)
    path = out_dir / "report.json"
    with atomic_write(path) as fh:
        fh.write(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    outputs.append(path)
    print(f"report written to {out_dir}")
    _finish(args, config, outputs, default_dir=out_dir)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except TypodistError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
