"""Command-line front end.

Subcommands: analyze (corpus statistics), run (clustering), oracle
(teacher-forcing diagnostics), score (evaluation), synth (synthetic
fixtures). Exit codes: 0 success, 2 parse failure, 3 configuration
conflict, 4 replay shape mismatch, 5 document alignment failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .analytics import (
    corpus_max_active,
    corpus_max_total,
    histogram_rows,
    per_document_stats,
    spread_histogram,
)
from .engine import ClusteringResult, run_document, trace_objs
from .ingest import (
    MentionSpan,
    ParseError,
    detect_format,
    load_conll,
    order_mentions,
    read_corpus,
    write_jsonl,
)
from .metrics import CountAccumulator, ScoreReport
from .oracle import oracle_trace, oracle_trackable_fraction
from .scoring import (
    RecordingScoreProvider,
    ReplayScoreProvider,
    ScoreShapeMismatch,
    StringMatchConfig,
    dump_score_rows,
    gold_scorer,
    propose_top_spans,
    string_match_scorer,
)
from .synth import synthesize_corpus
from .types import (
    ConfigError,
    Document,
    MemoryPolicy,
    PolicyConfig,
    SingletonMode,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_CONFIG = 3
EXIT_REPLAY = 4
EXIT_ALIGN = 5


class DocIdMismatch(ValueError):
    """Gold and prediction files disagree on which documents exist."""


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce a run plus digests of its outputs."""

    version: str
    config: dict
    documents: tuple[dict, ...]

    def to_json(self) -> str:
        return json.dumps(
            {
                "version": self.version,
                "config": self.config,
                "documents": list(self.documents),
            },
            indent=2,
            sort_keys=True,
        )


def _err(message) -> None:
    print(f"error: {message}", file=sys.stderr)


def _resolve_jobs(args) -> int:
    if args.jobs is not None:
        return max(1, args.jobs)
    return max(1, int(os.environ.get("COREF_JOBS", "1")))


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--format",
        choices=("auto", "conll", "jsonl"),
        default="auto",
        help="input format (default: by file extension)",
    )
    sub.add_argument(
        "--jobs",
        type=int,
        default=None,
        help="worker processes (default: COREF_JOBS or 1)",
    )


def _policy_from_args(args) -> PolicyConfig:
    policy = MemoryPolicy(args.policy)
    capacity = args.capacity if policy.bounded else None
    if not policy.bounded and args.capacity is not None:
        raise ConfigError(f"policy {policy.value} does not take a capacity")
    return PolicyConfig(
        policy=policy,
        capacity=capacity,
        singleton_mode=SingletonMode(getattr(args, "singletons", "keep")),
    )


def _document_mentions(doc: Document, ratio: float | None) -> list[MentionSpan]:
    candidates = list(doc.candidate_mentions)
    if not candidates:
        candidates = [(s, 0.0) for s in doc.gold_mentions()]
    if ratio is not None and len(doc) >= 1:
        return propose_top_spans(candidates, ratio, len(doc))
    spans, _ = order_mentions(s for s, _ in candidates)
    return spans


def _make_provider(kind: str, cfg, doc: Document):
    if kind == "gold":
        return gold_scorer(doc)
    if kind == "string-match":
        return string_match_scorer(cfg)
    raise ConfigError(f"unknown scorer {kind!r}")


def _cluster_task(task) -> dict:
    doc, policy, scorer_kind, scorer_cfg, ratio, record = task
    mentions = _document_mentions(doc, ratio)
    provider = _make_provider(scorer_kind, scorer_cfg, doc)
    if record:
        provider = RecordingScoreProvider(provider)
    result = run_document(doc, mentions, provider, policy)
    return {
        "doc_id": doc.doc_id,
        "mentions": mentions,
        "result": result,
        "rows": list(provider.rows) if record else None,
    }


def _parallel_map(worker, tasks, jobs: int) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        return [worker(t) for t in tasks]
    results = [None] * len(tasks)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = {pool.submit(worker, t): i for i, t in enumerate(tasks)}
        for fut in as_completed(futures):
            results[futures[fut]] = fut.result()
    return results


def _parse_scorer(spec: str) -> tuple[str, object]:
    if spec == "gold":
        return ("gold", None)
    if spec == "string-match":
        return ("string-match", None)
    if spec.startswith("replay:"):
        path = spec.split(":", 1)[1]
        if not path:
            raise ConfigError("replay scorer needs a file: --scorer replay:PATH")
        return ("replay", path)
    raise ConfigError(f"unknown scorer {spec!r} (use gold, string-match, or replay:PATH)")


def _clusters_json(result: ClusteringResult) -> list:
    return [[m.as_pair() for m in cluster] for cluster in result.predicted_clusters]


def cmd_run(args) -> int:
    policy = _policy_from_args(args)
    scorer_kind, scorer_arg = _parse_scorer(args.scorer)
    docs = read_corpus(args.inputs, args.format)
    jobs = _resolve_jobs(args)
    record = args.record_scores is not None

    match_cfg = StringMatchConfig(
        lowercase=not args.no_lowercase,
        strip_determiners=args.strip_determiners,
    )

    if scorer_kind == "replay":
        # Replay rows are positional across the corpus, so this path is
        # sequential regardless of --jobs.
        provider = ReplayScoreProvider.from_file(scorer_arg)
        recorder = RecordingScoreProvider(provider) if record else None
        outs = []
        for doc in docs:
            mentions = _document_mentions(doc, args.proposal_ratio)
            result = run_document(doc, mentions, recorder or provider, policy)
            outs.append(
                {"doc_id": doc.doc_id, "mentions": mentions, "result": result}
            )
        recorded_rows = list(recorder.rows) if recorder else None
    else:
        cfg = match_cfg if scorer_kind == "string-match" else None
        tasks = [
            (doc, policy, scorer_kind, cfg, args.proposal_ratio, record)
            for doc in docs
        ]
        outs = _parallel_map(_cluster_task, tasks, jobs)
        recorded_rows = None
        if record:
            recorded_rows = [row for o in outs for row in o["rows"]]

    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for o in outs:
                fh.write(
                    json.dumps(
                        {"doc_id": o["doc_id"], "clusters": _clusters_json(o["result"])}
                    )
                    + "\n"
                )
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            for o in outs:
                fh.write(json.dumps({"doc_id": o["doc_id"]}) + "\n")
                for obj in trace_objs(o["mentions"], o["result"].stats.actions):
                    fh.write(json.dumps(obj) + "\n")
    if record:
        dump_score_rows(recorded_rows, args.record_scores)
    if args.manifest:
        documents = tuple(
            {
                "doc_id": o["doc_id"],
                "digest": hashlib.sha256(
                    json.dumps(_clusters_json(o["result"])).encode()
                ).hexdigest(),
            }
            for o in outs
        )
        manifest = RunManifest(
            version=__version__,
            config={
                "command": "run",
                "policy": policy.policy.value,
                "capacity": policy.capacity,
                "scorer": args.scorer,
                "singletons": policy.singleton_mode.value,
                "proposal_ratio": args.proposal_ratio,
                "format": args.format,
                "inputs": [str(p) for p in args.inputs],
                "seed": None,
            },
            documents=documents,
        )
        Path(args.manifest).write_text(manifest.to_json() + "\n", encoding="utf-8")

    steps = sum(len(o["mentions"]) for o in outs)
    stats = [o["result"].stats for o in outs]
    pooled_avg = (
        sum(s.avg_entities_in_memory * len(o["mentions"]) for s, o in zip(stats, outs))
        / steps
        if steps
        else 0.0
    )
    peak = max((s.max_entities_in_memory for s in stats), default=0)
    capacity_txt = "none" if policy.capacity is None else str(policy.capacity)
    print(f"documents            {len(docs)}")
    print(
        f"policy               {policy.policy.value} "
        f"(capacity {capacity_txt}, singletons {policy.singleton_mode.value})"
    )
    print(f"scorer               {args.scorer}")
    print(f"entities in memory   avg {pooled_avg:.2f}, max {peak}")
    print(f"ignored (capacity)   {sum(s.ignored_capacity_count for s in stats)}")
    print(f"ignored (invalid)    {sum(s.ignored_invalid_count for s in stats)}")
    print(f"evictions            {sum(s.eviction_count for s in stats)}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    docs = read_corpus(args.inputs, args.format)
    rows = per_document_stats(docs)
    counts = spread_histogram(docs, args.buckets, args.exclude_singletons)

    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        with open(outdir / "per_document.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["doc_id", "mae", "total_entities", "doc_len"])
            writer.writerows(rows)
        with open(
            outdir / "spread_histogram.csv", "w", newline="", encoding="utf-8"
        ) as fh:
            writer = csv.writer(fh)
            writer.writerow(["bucket_lo", "bucket_hi", "count"])
            writer.writerows(histogram_rows(counts, args.buckets))

    label_width = 44
    print(f"{'documents':<{label_width}}{len(docs):>6}")
    print(f"{'Max. Total Entity Count':<{label_width}}{corpus_max_total(docs):>6}")
    print(f"{'Max. Active Entity Count':<{label_width}}{corpus_max_active(docs):>6}")
    print(
        f"{'Max. Active Entity Count (no singletons)':<{label_width}}"
        f"{corpus_max_active(docs, exclude_singletons=True):>6}"
    )
    return EXIT_OK


def cmd_oracle(args) -> int:
    policy = _policy_from_args(args)
    docs = read_corpus(args.inputs, args.format)

    ignored = []
    if args.out:
        fh = open(args.out, "w", encoding="utf-8")
    else:
        fh = None
    try:
        for doc in docs:
            mentions, _ = order_mentions(doc.gold_mentions())
            steps = oracle_trace(mentions, doc.gold_clusters, policy)
            ignored.append(
                sum(1 for s in steps if s.action.kind.value == "ignore_cap")
            )
            if fh:
                fh.write(json.dumps({"doc_id": doc.doc_id}) + "\n")
                for mention, stp in zip(mentions, steps):
                    obj = {"mention": mention.as_pair()}
                    obj.update(stp.action.to_obj())
                    obj["remaining"] = stp.remaining
                    fh.write(json.dumps(obj) + "\n")
    finally:
        if fh:
            fh.close()

    fraction = oracle_trackable_fraction(docs, policy)
    mean_ignored = sum(ignored) / len(ignored) if ignored else 0.0
    capacity_txt = "none" if policy.capacity is None else str(policy.capacity)
    print(f"documents            {len(docs)}")
    print(f"policy               {policy.policy.value} (capacity {capacity_txt})")
    print(f"trackable_fraction   {fraction:.6f}")
    print(f"mean_ignored_per_doc {mean_ignored:.3f}")
    return EXIT_OK


def _load_cluster_file(path: str, fmt: str) -> dict[str, list[list[MentionSpan]]]:
    """Read doc_id -> clusters from a cluster file or a corpus file."""
    actual = detect_format(path) if fmt == "auto" else fmt
    if actual == "conll":
        return {
            d.doc_id: [list(c.mentions) for c in d.gold_clusters]
            for d in load_conll(path)
        }
    out: dict[str, list[list[MentionSpan]]] = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"invalid JSON: {e.msg}", path=path, line=line_no)
            if not isinstance(obj, dict) or "doc_id" not in obj:
                raise ParseError("expected an object with doc_id", path=path, line=line_no)
            if "clusters" in obj:
                clusters = [
                    [MentionSpan(int(s), int(e)) for s, e in cluster]
                    for cluster in obj["clusters"]
                ]
            elif "gold_clusters" in obj:
                clusters = [
                    [MentionSpan(int(s), int(e)) for s, e in cluster]
                    for cluster in obj["gold_clusters"]
                ]
            else:
                raise ParseError(
                    "expected clusters or gold_clusters", path=path, line=line_no
                )
            out[obj["doc_id"]] = clusters
    return out


def _report_table(report: ScoreReport) -> str:
    groups = [("MUC", report.muc), ("B3", report.b_cubed), ("CEAF-phi4", report.ceaf_phi4)]
    head1 = " " * 8 + "".join(f"{name:^21}" for name, _ in groups)
    head2 = " " * 8 + "".join(
        f"{h:>7}" for _ in groups for h in ("P", "R", "F1")
    ) + f"{'Avg F1':>9}"
    row = f"{'corpus':<8}" + "".join(
        f"{100 * v:7.1f}"
        for _, prf in groups
        for v in (prf.precision, prf.recall, prf.f1)
    ) + f"{100 * report.conll_f1:9.1f}"
    return "\n".join([head1, head2, row])


def cmd_score(args) -> int:
    gold = _load_cluster_file(args.gold, args.format)
    pred = _load_cluster_file(args.pred, args.format)

    missing_pred = [d for d in gold if d not in pred]
    missing_gold = [d for d in pred if d not in gold]
    if missing_pred or missing_gold:
        parts = []
        if missing_pred:
            parts.append(f"not in predictions: {', '.join(sorted(missing_pred)[:5])}")
        if missing_gold:
            parts.append(f"not in gold: {', '.join(sorted(missing_gold)[:5])}")
        raise DocIdMismatch("; ".join(parts))

    drop = args.singletons == "drop"
    acc = CountAccumulator()
    for doc_id, gold_clusters in gold.items():
        acc.add(gold_clusters, pred[doc_id], drop_singletons=drop)
    report = acc.report()
    print(_report_table(report))
    if args.json:
        payload = {
            "muc": vars(report.muc),
            "b_cubed": vars(report.b_cubed),
            "ceaf_phi4": vars(report.ceaf_phi4),
            "conll_f1": report.conll_f1,
        }
        Path(args.json).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return EXIT_OK


def cmd_synth(args) -> int:
    docs = synthesize_corpus(
        args.seed,
        args.docs,
        max_tokens=args.max_tokens,
        max_entities=args.max_entities,
        max_mentions=args.max_mentions,
        min_entities=args.min_entities,
        extra_candidates=args.extra_candidates,
    )
    write_jsonl(docs, args.out)
    print(f"wrote {len(docs)} documents to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streamcoref",
        description="Bounded-memory incremental coreference clustering.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_analyze = sub.add_parser("analyze", help="corpus entity statistics")
    p_analyze.add_argument("inputs", nargs="+")
    p_analyze.add_argument("--buckets", type=int, default=10)
    p_analyze.add_argument("--exclude-singletons", action="store_true")
    p_analyze.add_argument("--out", help="directory for CSV exports")
    _add_common(p_analyze)
    p_analyze.set_defaults(func=cmd_analyze)

    p_run = sub.add_parser("run", help="cluster a corpus incrementally")
    p_run.add_argument("inputs", nargs="+")
    p_run.add_argument(
        "--policy",
        choices=[p.value for p in MemoryPolicy],
        default="unbounded",
    )
    p_run.add_argument("--capacity", type=int, default=None)
    p_run.add_argument("--scorer", default="gold", help="gold, string-match, or replay:PATH")
    p_run.add_argument("--singletons", choices=("keep", "drop"), default="keep")
    p_run.add_argument("--proposal-ratio", type=float, default=None)
    p_run.add_argument("--no-lowercase", action="store_true")
    p_run.add_argument("--strip-determiners", action="store_true")
    p_run.add_argument("--out", help="predictions JSONL")
    p_run.add_argument("--trace", help="action trace JSONL")
    p_run.add_argument("--record-scores", help="write queried scores as a replay file")
    p_run.add_argument("--manifest", help="write a reproducibility manifest")
    _add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_oracle = sub.add_parser("oracle", help="teacher-forcing action diagnostics")
    p_oracle.add_argument("inputs", nargs="+")
    p_oracle.add_argument(
        "--policy", choices=("unbounded", "lb", "rb"), default="lb"
    )
    p_oracle.add_argument("--capacity", type=int, default=None)
    p_oracle.add_argument("--out", help="oracle trace JSONL")
    _add_common(p_oracle)
    p_oracle.set_defaults(func=cmd_oracle)

    p_score = sub.add_parser("score", help="evaluate predictions against gold")
    p_score.add_argument("gold")
    p_score.add_argument("pred")
    p_score.add_argument("--singletons", choices=("keep", "drop"), default="keep")
    p_score.add_argument("--json", help="write the report as JSON")
    _add_common(p_score)
    p_score.set_defaults(func=cmd_score)

    p_synth = sub.add_parser("synth", help="generate a synthetic corpus")
    p_synth.add_argument("--seed", type=int, required=True)
    p_synth.add_argument("--docs", type=int, default=100)
    p_synth.add_argument("--max-tokens", type=int, default=64)
    p_synth.add_argument("--max-entities", type=int, default=8)
    p_synth.add_argument("--max-mentions", type=int, default=20)
    p_synth.add_argument("--min-entities", type=int, default=1)
    p_synth.add_argument("--extra-candidates", type=int, default=0)
    p_synth.add_argument("--out", required=True)
    _add_common(p_synth)
    p_synth.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as e:
        _err(e)
        return EXIT_PARSE
    except ConfigError as e:
        _err(e)
        return EXIT_CONFIG
    except ScoreShapeMismatch as e:
        _err(e)
        return EXIT_REPLAY
    except DocIdMismatch as e:
        _err(e)
        return EXIT_ALIGN
    except OSError as e:
        _err(e)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
