"""Command-line entry point: ``issuesuccess <command> ...``."""
from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from collections import defaultdict
from pathlib import Path

from . import __version__
from .config import DEFAULT_CONFIG_TEXT, RunConfig, load_config
from .corpus import build_corpus, corpus_stats, read_corpus, sample_study_set, write_corpus, write_exclusions
from .errors import IssueSuccessError
from .evaluation import MetricSet, rank_features
from .jira_ingest import ItsEndpoint, JiraClient, dump_raw, read_raw
from .runner import (RANKINGS_FILE, RESULTS_FILE, STATS_COLUMNS, read_rankings, read_results,
                     run_grid, stats_rows)

log = logging.getLogger("issuesuccess")


def _cmd_ingest(args) -> int:
    token = args.token or os.environ.get("ISSUESUCCESS_TOKEN")
    endpoint = ItsEndpoint(args.endpoint, token, args.page_size, args.max_retries, args.interval_ms)
    client = JiraClient(endpoint, max_in_flight=args.max_in_flight)
    projects = args.project or client.fetch_projects()
    n = dump_raw(client, projects, args.out, workers=args.workers, with_comments=not args.no_comments)
    log.info("wrote %d raw records for %d project(s) to %s", n, len(projects), args.out)
    return 0


def _cmd_build_corpus(args) -> int:
    corpus, exclusions = build_corpus(read_raw(args.inp))
    write_corpus(args.out, corpus)
    if args.exclusions:
        write_exclusions(args.exclusions, exclusions)
    log.info("corpus: %d issues, %d comments; %d issues excluded",
             len(corpus.issues), len(corpus.comments), len(exclusions))
    return 0


def _cmd_sample(args) -> int:
    corpus = read_corpus(args.inp)
    sample = sample_study_set(corpus, args.per_cell, args.seed)
    write_corpus(args.out, sample)
    stats = corpus_stats(sample)
    for (itype, label), n in sorted(stats.issues.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)):
        print(f"{itype.value}\t{label.value}\t{n} issues\t{stats.comments[(itype, label)]} comments")
    return 0


def _cmd_init_config(args) -> int:
    if args.out == "-":
        sys.stdout.write(DEFAULT_CONFIG_TEXT)
    else:
        Path(args.out).write_text(DEFAULT_CONFIG_TEXT, encoding="utf-8")
    return 0


def _cmd_run(args) -> int:
    config = load_config(args.config) if args.config else RunConfig()
    if args.workers:
        config = config.restrict(workers=args.workers)
    if args.seed is not None:
        config = config.restrict(seed=args.seed)
    corpus = read_corpus(args.corpus)
    summary = run_grid(config, corpus, args.out)
    print(f"{summary.n_specs} experiments, {summary.n_skipped} skipped; results in {summary.out_dir}")
    return 0


def _cmd_rank(args) -> int:
    records = read_rankings(Path(args.results) / RANKINGS_FILE)
    groups: dict[tuple, list] = defaultdict(list)
    for rec in records:
        key = (rec["issue_type"], rec["class"], rec["weighting"], rec["family"])
        exp_id = f"{rec['issue_type']}/{rec['horizon_days']}/{rec['weighting']}/{rec['family']}"
        groups[key].append((exp_id, rec["ranking"], rec["vocab_size"]))
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["feature", "N", "AR", "class", "issue_type", "weighting", "family"])
        for (itype, label, weighting, family) in sorted(groups):
            exps = groups[(itype, label, weighting, family)]
            entries = rank_features([(e, r) for e, r, _ in exps], args.top_k,
                                    {e: v for e, _, v in exps})
            for entry in entries[:args.limit] if args.limit else entries:
                writer.writerow([entry.feature, entry.n, f"{entry.ar:.2f}", label, itype,
                                 weighting, family])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _markdown(header: list[str], rows: list[list[str]]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(cell or "-" for cell in row) + " |" for row in rows]
    return "\n".join(lines) + "\n"


def _cmd_report(args) -> int:
    rows = read_results(Path(args.results) / RESULTS_FILE)
    header = STATS_COLUMNS
    body = stats_rows(rows)
    if args.metric:
        body = [r for r in body if r[4] in args.metric]
    if args.format == "md":
        # round for readability; csv output keeps full precision
        def short(cell):
            try:
                return f"{float(cell):.3f}" if "." in cell else cell
            except ValueError:
                return cell
        text = _markdown(header, [[short(c) for c in r] for r in body])
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(body)
        text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="issuesuccess",
                                     description="Predict issue success from issue and comment text.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="download projects, issues and comments into a raw dump")
    p.add_argument("--endpoint", required=True, help="tracker base URL")
    p.add_argument("--project", action="append", help="project key (repeatable; default: all)")
    p.add_argument("--out", required=True)
    p.add_argument("--token", help="bearer token (default: $ISSUESUCCESS_TOKEN)")
    p.add_argument("--page-size", type=int, default=50)
    p.add_argument("--max-retries", type=int, default=3)
    p.add_argument("--interval-ms", type=float, default=250.0, help="minimum gap between requests")
    p.add_argument("--max-in-flight", type=int, default=4)
    p.add_argument("--workers", type=int, default=1, help="projects fetched concurrently")
    p.add_argument("--no-comments", action="store_true")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("build-corpus", help="normalize and label a raw dump")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--exclusions", help="CSV of excluded issues and reasons")
    p.set_defaults(func=_cmd_build_corpus)

    p = sub.add_parser("sample", help="draw a balanced study set per (type, label) cell")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--per-cell", type=int, default=5000)
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("init-config", help="write the default experiment configuration")
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_init_config)

    p = sub.add_parser("run", help="run the experiment grid")
    p.add_argument("--config")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="results directory")
    p.add_argument("--workers", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("rank", help="aggregate per-experiment feature rankings into N / AR")
    p.add_argument("--results", required=True)
    p.add_argument("--top-k", type=int, default=100)
    p.add_argument("--limit", type=int, default=0, help="rows per group (0 = all)")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("report", help="descriptive statistics of the results")
    p.add_argument("--results", required=True)
    p.add_argument("--format", choices=("csv", "md"), default="csv")
    p.add_argument("--metric", action="append", choices=MetricSet.field_names())
    p.add_argument("--out")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (IssueSuccessError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
