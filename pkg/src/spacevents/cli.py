"""Command-line pipeline around the library.

Subcommands: ingest, dedup, ner, index, extract, shortlist,
export-annotation, score, stats, errors, validate.  Record output goes
to stdout as JSON lines (the score/stats/errors tables are plain text);
diagnostics go to stderr.  Exit codes: 0 success, 1 input error, 2
internal error.

Every subcommand is a pure function of its inputs and flags, and record
output is fully sorted, so two runs over the same files produce
byte-identical output regardless of ``--workers``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .dedup import DEFAULT_THRESHOLD, DEFAULT_UNSEEN_FRACTION, assign_splits, pool_duplicates
from .documents import (
    parse_conllu,
    parse_jsonl_documents,
    serialize_jsonl_documents,
    validate_corpus,
)
from .errors import InputError, SpaceventsError
from .evaluation import (
    classify_errors,
    corpus_stats,
    read_annotations,
    score_slots,
)
from .gazetteer import compile_gazetteer, ner_layer, read_gazetteer
from .index import build_index, load_index, save_index
from .matching import event_to_dict, extract_events
from .rules import parse_rules
from .schemas import ANNOTATION_HEADER, annotation_task_records, shortlist

MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class RunConfig:
    """Validated knobs shared by the pipeline subcommands."""

    threshold: float = DEFAULT_THRESHOLD
    unseen_fraction: float = DEFAULT_UNSEEN_FRACTION
    sample: dict[str, float] = field(default_factory=dict)
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if not 0.0 < self.threshold <= 1.0:
            raise InputError(f"--threshold must be in (0, 1], got {self.threshold}")
        if not 0.0 < self.unseen_fraction <= 1.0:
            raise InputError(
                f"--unseen-fraction must be in (0, 1], got {self.unseen_fraction}"
            )
        for event_type, fraction in self.sample.items():
            if not 0.0 < fraction <= 1.0:
                raise InputError(
                    f"--sample fraction for {event_type} must be in (0, 1]"
                )
        if not 0 <= self.seed <= MAX_SEED:
            raise InputError(f"--seed must fit in 64 bits, got {self.seed}")
        if self.workers < 1:
            raise InputError(f"--workers must be at least 1, got {self.workers}")


def _parse_sample(pairs: list[str]) -> dict[str, float]:
    sample: dict[str, float] = {}
    for pair in pairs:
        name, sep, value = pair.partition("=")
        if not sep:
            raise InputError(f"--sample expects TYPE=FRACTION, got {pair!r}")
        try:
            fraction = float(value)
        except ValueError:
            raise InputError(f"--sample fraction is not a number: {value!r}")
        sample[name.strip().upper()] = fraction
    return sample


def _config(args: argparse.Namespace) -> RunConfig:
    workers = getattr(args, "workers", None)
    if workers is None:
        workers = os.cpu_count() or 1
    return RunConfig(
        threshold=getattr(args, "threshold", DEFAULT_THRESHOLD),
        unseen_fraction=getattr(args, "unseen_fraction", DEFAULT_UNSEEN_FRACTION),
        sample=_parse_sample(getattr(args, "sample", []) or []),
        seed=getattr(args, "seed", 0),
        workers=workers,
    )


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}")


def _read_documents(path: str, fmt: str | None):
    if fmt is None:
        fmt = "conllu" if path.endswith(".conllu") else "jsonl"
    text = _read_text(path)
    return parse_conllu(text) if fmt == "conllu" else parse_jsonl_documents(text)


def _packaged(name: str) -> str:
    return resources.files("spacevents").joinpath("data", name).read_text("utf-8")


def _load_gazetteer(path: str | None):
    text = _read_text(path) if path else _packaged("gazetteer.tsv")
    return compile_gazetteer(read_gazetteer(text))


def _load_rules(path: str | None):
    text = _read_text(path) if path else _packaged("reference.rules")
    return parse_rules(text)


def _emit(out, record: dict) -> None:
    out.write(json.dumps(record, ensure_ascii=False, separators=(",", ":")))
    out.write("\n")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_ingest(args, out, err) -> int:
    docs = _read_documents(args.corpus, args.format)
    out.write(serialize_jsonl_documents(docs))
    print(f"ingested {len(docs)} documents", file=err)
    return 0


def _cmd_validate(args, out, err) -> int:
    docs = _read_documents(args.corpus, args.format)
    report = validate_corpus(docs)
    for issue in report.issues:
        print(str(issue), file=err)
    if report.ok:
        print(f"corpus ok: {len(docs)} documents", file=err)
        return 0
    print(f"{len(report.issues)} issues found", file=err)
    return 1


def _cmd_dedup(args, out, err) -> int:
    config = _config(args)
    docs = _read_documents(args.corpus, args.format)
    assignment = pool_duplicates(docs, threshold=config.threshold)
    assignment = assign_splits(assignment, docs, unseen_fraction=config.unseen_fraction)
    for doc_id in sorted(assignment.pool_of):
        _emit(
            out,
            {
                "doc_id": doc_id,
                "pool_id": assignment.pool_of[doc_id],
                "split": assignment.split_for(doc_id),
            },
        )
    print(f"{len(assignment.split_of)} pools over {len(assignment.pool_of)} documents", file=err)
    return 0


def _cmd_ner(args, out, err) -> int:
    docs = _read_documents(args.corpus, args.format)
    layer = ner_layer(_load_gazetteer(args.gazetteer))
    for doc in docs:
        for sent in doc.sentences:
            mentions = layer(sent)
            _emit(
                out,
                {
                    "doc_id": doc.id,
                    "sentence_id": sent.id,
                    "mentions": [
                        {
                            "start": m.start,
                            "end": m.end,
                            "type": m.entity_type,
                            "origin": m.origin,
                        }
                        for m in mentions
                    ],
                },
            )
    return 0


def _cmd_index(args, out, err) -> int:
    config = _config(args)
    docs = _read_documents(args.corpus, args.format)
    index = build_index(docs, workers=config.workers)
    save_index(index, args.index)
    n_sentences = sum(len(doc.sentences) for doc in docs)
    print(
        f"indexed {len(docs)} documents / {n_sentences} sentences: "
        f"{len(index)} terms -> {args.index}",
        file=err,
    )
    return 0


def _extract(args):
    config = _config(args)
    docs = _read_documents(args.corpus, args.format)
    rules = _load_rules(args.rules)
    index = load_index(args.index) if getattr(args, "index", None) else None
    layer = ner_layer(_load_gazetteer(args.gazetteer))
    events = extract_events(docs, rules, index=index, ner=layer, workers=config.workers)
    return config, docs, events


def _cmd_extract(args, out, err) -> int:
    _, _, events = _extract(args)
    for event in events:
        _emit(out, event_to_dict(event))
    print(f"{len(events)} events", file=err)
    return 0


def _cmd_shortlist(args, out, err) -> int:
    config, _, events = _extract(args)
    candidates = shortlist(events, sample=config.sample, seed=config.seed)
    for cand in candidates:
        _emit(
            out,
            {
                "doc_id": cand.doc_id,
                "sentence_id": cand.sentence_id,
                "event_type": cand.event_type,
                "sampled": cand.sampled,
                "events": [event_to_dict(ev) for ev in cand.events],
            },
        )
    kept = sum(1 for c in candidates if c.sampled)
    print(f"{kept} of {len(candidates)} candidate sentences sampled", file=err)
    return 0


def _cmd_export_annotation(args, out, err) -> int:
    config, docs, events = _extract(args)
    candidates = shortlist(events, sample=config.sample, seed=config.seed)
    _emit(out, ANNOTATION_HEADER)
    records = annotation_task_records(candidates, docs)
    for record in records:
        _emit(out, record)
    print(f"exported {len(records)} annotation tasks", file=err)
    return 0


def _write_json(args, payload: dict) -> None:
    if getattr(args, "json", None):
        Path(args.json).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )


def _cmd_score(args, out, err) -> int:
    gold = read_annotations(_read_text(args.gold))
    pred = read_annotations(_read_text(args.pred))
    report = score_slots(gold, pred)
    out.write(report.format_table() + "\n")
    _write_json(args, report.to_dict())
    return 0


def _cmd_stats(args, out, err) -> int:
    rows = corpus_stats(read_annotations(_read_text(args.annotations)))
    header = f"{'Event':<18} {'Split':<12} {'Sentences':>10} {'Tagged':>10} {'Tokens':>10}"
    out.write(header + "\n")
    out.write("-" * len(header) + "\n")
    for row in rows:
        out.write(
            f"{row.event_type.title():<18} {row.split:<12} "
            f"{row.sentences:>10} {row.tagged_tokens:>10} {row.total_tokens:>10}\n"
        )
    _write_json(
        args,
        {
            "rows": [
                {
                    "event_type": r.event_type,
                    "split": r.split,
                    "sentences": r.sentences,
                    "tagged_tokens": r.tagged_tokens,
                    "total_tokens": r.total_tokens,
                }
                for r in rows
            ]
        },
    )
    return 0


def _cmd_errors(args, out, err) -> int:
    gold = read_annotations(_read_text(args.gold))
    pred = read_annotations(_read_text(args.pred))
    buckets = classify_errors(gold, pred)
    proportions = buckets.proportions()
    out.write(f"{'Bucket':<16} {'Count':>6} {'Share':>6}\n")
    out.write("-" * 30 + "\n")
    out.write(f"{'exact':<16} {buckets.exact:>6} {'':>6}\n")
    for name in ("span_error", "label_confusion", "spurious", "missed"):
        count = getattr(buckets, name)
        out.write(f"{name:<16} {count:>6} {int(proportions[name] * 100 + 0.5):>5}%\n")
    _write_json(
        args,
        {
            "exact": buckets.exact,
            "span_error": buckets.span_error,
            "label_confusion": buckets.label_confusion,
            "spurious": buckets.spurious,
            "missed": buckets.missed,
            "proportions": proportions,
        },
    )
    return 0


# ---------------------------------------------------------------------------
# wiring


class _Parser(argparse.ArgumentParser):
    # usage problems are input errors (exit 1), not internal ones
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_corpus(sub) -> None:
    sub.add_argument("--corpus", required=True, help="corpus file (.conllu or .jsonl)")
    sub.add_argument("--format", choices=("conllu", "jsonl"), help="override format sniffing")


def _add_extract_inputs(sub) -> None:
    _add_corpus(sub)
    sub.add_argument("--rules", help="rule file (default: packaged reference rules)")
    sub.add_argument("--gazetteer", help="gazetteer TSV (default: packaged gazetteer)")
    sub.add_argument("--index", help="prebuilt index file to narrow the scan")
    sub.add_argument("--workers", type=int, help="worker threads (default: CPU count)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spacevents", description=__doc__.splitlines()[0])
    commands = parser.add_subparsers(dest="command", parser_class=_Parser)
    commands.required = True

    sub = commands.add_parser("ingest", help="normalize a corpus to document JSON lines")
    _add_corpus(sub)
    sub.set_defaults(func=_cmd_ingest)

    sub = commands.add_parser("validate", help="report structural problems in a corpus")
    _add_corpus(sub)
    sub.set_defaults(func=_cmd_validate)

    sub = commands.add_parser("dedup", help="pool near-duplicates and assign splits")
    _add_corpus(sub)
    sub.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    sub.add_argument("--unseen-fraction", type=float, default=DEFAULT_UNSEEN_FRACTION)
    sub.set_defaults(func=_cmd_dedup)

    sub = commands.add_parser("ner", help="tag sentences with the merged NER layer")
    _add_corpus(sub)
    sub.add_argument("--gazetteer", help="gazetteer TSV (default: packaged gazetteer)")
    sub.set_defaults(func=_cmd_ner)

    sub = commands.add_parser("index", help="build and save the inverted index")
    _add_corpus(sub)
    sub.add_argument("--index", required=True, help="output index file")
    sub.add_argument("--workers", type=int, help="worker threads (default: CPU count)")
    sub.set_defaults(func=_cmd_index)

    sub = commands.add_parser("extract", help="run the rules and emit events")
    _add_extract_inputs(sub)
    sub.set_defaults(func=_cmd_extract)

    sub = commands.add_parser("shortlist", help="validated candidate sentences, sampled")
    _add_extract_inputs(sub)
    sub.add_argument("--sample", action="append", metavar="TYPE=FRACTION", default=[])
    sub.add_argument("--seed", type=int, default=0)
    sub.set_defaults(func=_cmd_shortlist)

    sub = commands.add_parser("export-annotation", help="write annotation task records")
    _add_extract_inputs(sub)
    sub.add_argument("--sample", action="append", metavar="TYPE=FRACTION", default=[])
    sub.add_argument("--seed", type=int, default=0)
    sub.set_defaults(func=_cmd_export_annotation)

    sub = commands.add_parser("score", help="span-level P/R/F1 per event type and slot")
    sub.add_argument("--gold", required=True)
    sub.add_argument("--pred", required=True)
    sub.add_argument("--json", help="also write the report as JSON to this file")
    sub.set_defaults(func=_cmd_score)

    sub = commands.add_parser("stats", help="corpus statistics per event type and split")
    sub.add_argument("--annotations", required=True)
    sub.add_argument("--json", help="also write the table as JSON to this file")
    sub.set_defaults(func=_cmd_stats)

    sub = commands.add_parser("errors", help="bucket prediction errors against gold")
    sub.add_argument("--gold", required=True)
    sub.add_argument("--pred", required=True)
    sub.add_argument("--json", help="also write the buckets as JSON to this file")
    sub.set_defaults(func=_cmd_errors)

    return parser


def main(argv=None, stdout=None, stderr=None) -> int:
    out = stdout if stdout is not None else sys.stdout
    err = stderr if stderr is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out, err)
    except InputError as exc:
        print(f"error: {exc}", file=err)
        return 1
    except BrokenPipeError:
        return 0
    except SpaceventsError as exc:
        print(f"internal error: {exc}", file=err)
        return 2
    except Exception as exc:  # pragma: no cover - last-resort guard
        print(f"internal error: {exc!r}", file=err)
        return 2


def console_main() -> None:
    sys.exit(main())
