"""Command-line front door for the audit coding pipeline.

Exit statuses are a stable scripting contract: 0 success, 1 usage or
configuration problem, 2 data problem (unreadable or invalid inputs).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .concepts import classify_corpus, read_results, write_results
from .config import ConfigError, resolve_config
from .evaluation import (
    EvaluationError,
    StandardKind,
    build_standard,
    format_report,
    other_recode_report,
    score,
)
from .generator import generate_corpus, write_truth
from .lexicon import LexiconError
from .records import (
    STANDARD_CATEGORIES,
    AuditCategory,
    RecordError,
    ingest_admissions,
    write_admissions,
)
from .rules import RuleError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1, not argparse's default 2 (2 means bad data here)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return number


def _rate(value: str) -> float:
    number = float(value)
    if not (0.0 <= number <= 1.0):
        raise argparse.ArgumentTypeError("must be within [0, 1]")
    return number


def cmd_classify(args) -> int:
    config = resolve_config(args.config)
    store = config.load_store()
    rules = config.load_rules()
    records = ingest_admissions(args.input)
    results, summary = classify_corpus(records, store, rules, **config.classify_kwargs())

    labels = config.version_labels()
    for result in results:
        result.versions.update(labels)
    write_results(results, args.out)

    tokens = 0
    unresolved = 0
    for result in results:
        unresolved += len(result.unresolved)
        if result.note is not None:
            tokens += sum(1 for t in result.note.tokens if not t.is_punct)
    rate = (unresolved / tokens * 100) if tokens else 0.0

    print(f"records\t{summary['records']}")
    print(f"failed\t{len(summary['failed'])}")
    print(f"unresolved-token rate\t{rate:.1f}%")
    for category, count in summary["category_counts"].items():
        print(f"category\t{category}\t{count}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    config = resolve_config(args.config)
    table = config.load_code_table()
    store = config.load_store()
    alts = config.load_alternatives()
    approvals = config.load_approvals()
    records = ingest_admissions(args.corpus)
    results = read_results(args.results)

    corpus_ids = {record.admission_id for record in records}
    result_ids = {row["admission_id"] for row in results}
    missing = sorted(corpus_ids - result_ids)
    extra = sorted(result_ids - corpus_ids)
    if missing or extra:
        if missing:
            print(f"error: results missing ids: {', '.join(missing)}", file=sys.stderr)
        if extra:
            print(f"error: results carry unknown ids: {', '.join(extra)}", file=sys.stderr)
        return EXIT_DATA

    kind = StandardKind(args.standard)
    standard = build_standard(records, results, kind, table=table, store=store)
    report = score(standard, results, alts=alts, approvals=approvals)
    print(format_report([report]))
    if kind is StandardKind.C and approvals is not None:
        other = other_recode_report(standard, results, approvals)
        print(
            f"  other-mapped: {other.other_total}; "
            f"specific suggestions: {other.specific_calculated}; "
            f"approved recodes: {other.approved}"
        )
    if args.report_out:
        with open(args.report_out, "w", encoding="utf-8") as fh:
            json.dump(report.row(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def cmd_query(args) -> int:
    try:
        target = AuditCategory.parse(args.category)
    except RecordError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for row in read_results(args.results):
        calculated = [AuditCategory.parse(item["category"]) for item in row["categories"]]
        if any(target.is_prefix_of(c) for c in calculated):
            print(row["admission_id"])
    return EXIT_OK


def cmd_generate(args) -> int:
    records, truths = generate_corpus(args.seed, args.size, args.noise)
    write_admissions(args.out, records)
    write_truth(truths, args.truth)
    perturbed = sum(1 for t in truths if t["perturbation"] is not None)
    print(f"records\t{len(records)}")
    print(f"perturbed\t{perturbed}")
    print(f"corpus\t{args.out}")
    print(f"truth\t{args.truth}")
    return EXIT_OK


def cmd_validate(args) -> int:
    config = resolve_config(args.config)
    errors: list[str] = []
    warnings: list[str] = []

    store = None
    try:
        store = config.load_store()
    except LexiconError as exc:
        errors.append(str(exc))
    rules = None
    try:
        rules = config.load_rules()
    except RuleError as exc:
        errors.append(str(exc))
    table = None
    try:
        table = config.load_code_table()
    except (RecordError, IOError) as exc:
        errors.append(str(exc))
    try:
        config.load_alternatives()
    except (EvaluationError, RecordError) as exc:
        errors.append(str(exc))
    try:
        config.load_approvals()
    except (EvaluationError, RecordError) as exc:
        errors.append(str(exc))

    if rules is not None:
        # extensions are allowed; flag them so drift is a choice, not a surprise
        standard = set(STANDARD_CATEGORIES)
        for rule in rules:
            if rule.category not in standard:
                warnings.append(
                    f"rule {rule.id}: category {rule.category.text} extends the standard set"
                )

    for line in errors:
        print(f"error: {line}")
    for line in warnings:
        print(f"warning: {line}")
    if errors:
        return EXIT_DATA
    counts = []
    if rules is not None:
        counts.append(f"{len(rules)} rules")
    if store is not None:
        counts.append(f"lexicon {store.version}")
    if table is not None:
        counts.append("code table loaded")
    print("OK (" + ", ".join(counts) + ")")
    return EXIT_OK


def cmd_serve(args) -> int:
    # imported lazily so the core CLI works without the service stack
    import uvicorn

    from .service import create_app

    config = resolve_config(args.config)
    records = ingest_admissions(args.input)
    app = create_app(config, records, Path(args.state))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="auditcoder", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="classify an admissions file")
    p.add_argument("--input", required=True, help="admissions file (CSV or TSV)")
    p.add_argument("--config", default=None, help="config file (default: $AUDIT_CONFIG or packaged)")
    p.add_argument("--out", required=True, help="results file to write (one record per line)")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", help="score results against the mapped standard")
    p.add_argument("--results", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--standard", required=True, choices=[k.value for k in StandardKind])
    p.add_argument("--config", default=None)
    p.add_argument("--report-out", default=None, help="also write the report as JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("query", help="ids whose results contain a category or descendant")
    p.add_argument("--results", required=True)
    p.add_argument("--category", required=True)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("generate", help="generate a synthetic corpus with ground truth")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--size", type=_positive, required=True)
    p.add_argument("--noise", type=_rate, default=0.0)
    p.add_argument("--out", required=True, help="corpus file to write")
    p.add_argument("--truth", required=True, help="ground-truth file to write")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("validate", help="compile rules and load every table and lexicon")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("serve", help="launch the review service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--state", required=True, help="journal directory")
    p.add_argument("--input", required=True, help="admissions file to review")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RecordError, LexiconError, RuleError, EvaluationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
