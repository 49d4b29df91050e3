"""Span-level annotation handling and evaluation.

Everything here works on labeled token spans (half-open, token-indexed).
Included: BIO encoding/decoding with lenient repair, multi-annotator
consensus by strict majority vote, per-annotator agreement, exact-match
precision/recall/F1 per event type and slot with a micro-average over
the generic slots, corpus statistics per event and split, and the
standard error breakdown (exact, span error, label confusion, spurious,
missed).

Scoring counts a (start, end, label) span at most once per sentence, on
both the gold and the predicted side.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import InputError, SchemaError
from .schemas import SCHEMAS, EventSchema

GENERIC_SLOTS = ("Organization", "Date")


@dataclass(frozen=True, slots=True)
class LabeledSpan:
    sentence_id: str
    start: int
    end: int  # exclusive
    label: str

    def __post_init__(self):
        if self.start < 0 or self.end <= self.start:
            raise InputError(
                f"bad span [{self.start}, {self.end}) in sentence {self.sentence_id!r}"
            )

    def overlaps(self, other: "LabeledSpan") -> bool:
        return (
            self.sentence_id == other.sentence_id
            and self.start < other.end
            and other.start < self.end
        )


@dataclass(frozen=True)
class AnnotationLayer:
    annotator_id: str
    spans: tuple[LabeledSpan, ...]

    def __post_init__(self):
        object.__setattr__(self, "spans", tuple(self.spans))


def spans_to_bio(sentence_length: int, spans: Sequence[LabeledSpan]) -> list[str]:
    """Encode non-overlapping spans of one sentence as BIO tags."""
    tags = ["O"] * sentence_length
    owner: list[LabeledSpan | None] = [None] * sentence_length
    for span in sorted(spans, key=lambda s: (s.start, s.end)):
        if span.end > sentence_length:
            raise InputError(
                f"span [{span.start}, {span.end}) exceeds sentence length "
                f"{sentence_length}"
            )
        for i in range(span.start, span.end):
            if owner[i] is not None:
                raise InputError(f"overlapping spans: {owner[i]} and {span}")
            owner[i] = span
        tags[span.start] = f"B-{span.label}"
        for i in range(span.start + 1, span.end):
            tags[i] = f"I-{span.label}"
    return tags


def bio_to_spans(tags: Sequence[str], sentence_id: str = "") -> list[LabeledSpan]:
    """Decode BIO tags, leniently: an orphan I- starts a new span."""
    spans: list[LabeledSpan] = []
    label: str | None = None
    start = 0
    for i, tag in enumerate(tags):
        if tag.startswith("B-"):
            if label is not None:
                spans.append(LabeledSpan(sentence_id, start, i, label))
            label, start = tag[2:], i
        elif tag.startswith("I-"):
            if tag[2:] != label:
                if label is not None:
                    spans.append(LabeledSpan(sentence_id, start, i, label))
                label, start = tag[2:], i
        else:
            if label is not None:
                spans.append(LabeledSpan(sentence_id, start, i, label))
            label = None
    if label is not None:
        spans.append(LabeledSpan(sentence_id, start, len(tags), label))
    return spans


def consensus(layers: Sequence[AnnotationLayer]) -> list[LabeledSpan]:
    """Spans kept by strict majority vote across annotation layers.

    A span counts once per layer it appears in exactly; it survives with
    more than half the layers behind it.  Should surviving spans still
    overlap, the higher vote count wins, then the longer span, then the
    leftmost.
    """
    if len(layers) < 2:
        raise InputError("consensus needs at least two annotation layers")
    votes: Counter[LabeledSpan] = Counter()
    for layer in layers:
        for span in set(layer.spans):
            votes[span] += 1
    majority = [span for span, count in votes.items() if count > len(layers) / 2]
    majority.sort(
        key=lambda s: (
            -votes[s],
            -(s.end - s.start),
            s.sentence_id,
            s.start,
            s.end,
            s.label,
        )
    )
    kept: list[LabeledSpan] = []
    for span in majority:
        if not any(span.overlaps(existing) for existing in kept):
            kept.append(span)
    kept.sort(key=lambda s: (s.sentence_id, s.start, s.end, s.label))
    return kept


def agreement(
    layer: AnnotationLayer, consensus_spans: Sequence[LabeledSpan]
) -> dict[str, float]:
    """Exact-match precision/recall of one annotator against the consensus."""
    mine = set(layer.spans)
    gold = set(consensus_spans)
    tp = len(mine & gold)
    precision = tp / len(mine) if mine else 0.0
    recall = tp / len(gold) if gold else 0.0
    return {"precision": precision, "recall": recall}


# ---------------------------------------------------------------------------
# sentence-level annotation records (gold/pred files, stats input)


@dataclass(frozen=True)
class SentenceAnnotation:
    sentence_id: str
    event_type: str
    spans: tuple[LabeledSpan, ...]
    split: str | None = None
    n_tokens: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "spans", tuple(self.spans))


def read_annotations(source) -> list[SentenceAnnotation]:
    """Read sentence annotation records from JSON lines.

    Required fields: ``sentence_id``, ``event_type``, ``spans`` (each
    with ``start``, ``end``, ``label``).  Optional: ``split`` and either
    ``n_tokens`` or a ``tokens`` list (needed for corpus statistics).
    Spans within one record must not overlap.
    """
    if isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = list(source)
    records: list[SentenceAnnotation] = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"line {line_no}: invalid JSON: {exc}")
        if not isinstance(obj, dict):
            raise SchemaError(f"line {line_no}: record must be an object")
        for key in ("sentence_id", "event_type"):
            if not isinstance(obj.get(key), str):
                raise SchemaError(f"line {line_no}: missing or non-string {key}")
        raw_spans = obj.get("spans")
        if not isinstance(raw_spans, list):
            raise SchemaError(f"line {line_no}: missing spans list")
        spans = []
        for i, raw_span in enumerate(raw_spans):
            if not isinstance(raw_span, dict):
                raise SchemaError(f"line {line_no}: spans[{i}] must be an object")
            try:
                spans.append(
                    LabeledSpan(
                        sentence_id=obj["sentence_id"],
                        start=raw_span["start"],
                        end=raw_span["end"],
                        label=raw_span["label"],
                    )
                )
            except (KeyError, TypeError):
                raise SchemaError(
                    f"line {line_no}: spans[{i}] needs start, end, and label"
                )
            except InputError as exc:
                raise SchemaError(f"line {line_no}: spans[{i}]: {exc}")
        for i, a in enumerate(spans):
            for b in spans[i + 1 :]:
                if a.overlaps(b):
                    raise SchemaError(f"line {line_no}: overlapping spans {a} and {b}")
        n_tokens = obj.get("n_tokens")
        if n_tokens is None and isinstance(obj.get("tokens"), list):
            n_tokens = len(obj["tokens"])
        if n_tokens is not None and (isinstance(n_tokens, bool) or not isinstance(n_tokens, int)):
            raise SchemaError(f"line {line_no}: n_tokens must be an integer")
        split = obj.get("split")
        if split is not None and not isinstance(split, str):
            raise SchemaError(f"line {line_no}: split must be a string")
        records.append(
            SentenceAnnotation(
                sentence_id=obj["sentence_id"],
                event_type=obj["event_type"],
                spans=tuple(spans),
                split=split,
                n_tokens=n_tokens,
            )
        )
    return records


# ---------------------------------------------------------------------------
# scoring


@dataclass(frozen=True)
class SlotScore:
    event_type: str
    slot: str
    tp: int
    fp: int
    fn: int

    @property
    def n_gold(self) -> int:
        return self.tp + self.fn

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[SlotScore, ...]
    micro: tuple[SlotScore, ...]

    def to_dict(self) -> dict:
        def row(score: SlotScore) -> dict:
            return {
                "event_type": score.event_type,
                "slot": score.slot,
                "tp": score.tp,
                "fp": score.fp,
                "fn": score.fn,
                "n_gold": score.n_gold,
                "precision": score.precision,
                "recall": score.recall,
                "f1": score.f1,
            }

        return {"rows": [row(s) for s in self.rows], "micro": [row(s) for s in self.micro]}

    def format_table(self) -> str:
        header = f"{'Event':<18} {'Slot':<16} {'Pr':>4} {'Re':>4} {'F1':>4} {'N':>6}"
        lines = [header, "-" * len(header)]

        def pct(value: float) -> int:
            return int(value * 100 + 0.5)

        for score in self.rows:
            lines.append(
                f"{score.event_type.title():<18} {score.slot:<16} "
                f"{pct(score.precision):>4} {pct(score.recall):>4} "
                f"{pct(score.f1):>4} {score.n_gold:>6}"
            )
        for score in self.micro:
            lines.append(
                f"{'Generic (micro)':<18} {score.slot:<16} "
                f"{pct(score.precision):>4} {pct(score.recall):>4} "
                f"{pct(score.f1):>4} {score.n_gold:>6}"
            )
        return "\n".join(lines)


def _span_sets(
    records: Sequence[SentenceAnnotation],
) -> dict[str, dict[str, set[tuple[int, int, str]]]]:
    out: dict[str, dict[str, set[tuple[int, int, str]]]] = defaultdict(dict)
    for record in records:
        spans = out[record.event_type].setdefault(record.sentence_id, set())
        spans.update((s.start, s.end, s.label) for s in record.spans)
    return out


def _check_universe(gold, pred) -> None:
    for event_type in sorted(set(gold) | set(pred)):
        gold_ids = set(gold.get(event_type, ()))
        pred_ids = set(pred.get(event_type, ()))
        if gold_ids != pred_ids:
            missing_pred = sorted(gold_ids - pred_ids)
            missing_gold = sorted(pred_ids - gold_ids)
            parts = [f"sentence sets differ for {event_type}"]
            if missing_pred:
                parts.append(f"missing from pred: {', '.join(missing_pred)}")
            if missing_gold:
                parts.append(f"missing from gold: {', '.join(missing_gold)}")
            raise InputError("; ".join(parts))


def _tally(
    gold: Sequence[SentenceAnnotation], pred: Sequence[SentenceAnnotation]
) -> dict[tuple[str, str], list[int]]:
    """(event type, label) -> [tp, fp, fn], spans deduplicated per sentence."""
    gold_sets = _span_sets(gold)
    pred_sets = _span_sets(pred)
    _check_universe(gold_sets, pred_sets)
    counts: dict[tuple[str, str], list[int]] = defaultdict(lambda: [0, 0, 0])
    for event_type, by_sentence in gold_sets.items():
        for sentence_id, gold_spans in by_sentence.items():
            pred_spans = pred_sets[event_type][sentence_id]
            for start, end, label in gold_spans & pred_spans:
                counts[(event_type, label)][0] += 1
            for start, end, label in pred_spans - gold_spans:
                counts[(event_type, label)][1] += 1
            for start, end, label in gold_spans - pred_spans:
                counts[(event_type, label)][2] += 1
    return counts


def score_slots(
    gold: Sequence[SentenceAnnotation],
    pred: Sequence[SentenceAnnotation],
    schemas: Mapping[str, EventSchema] | None = None,
) -> EvalReport:
    """Exact-match span scores per (event type, slot), plus the generic micro rows.

    Gold and pred must cover the same sentences per event type; supply
    empty span lists for sentences without predictions.
    """
    schemas = dict(schemas) if schemas is not None else SCHEMAS
    counts = _tally(gold, pred)

    def slot_order(event_type: str, label: str) -> tuple[int, str]:
        schema = schemas.get(event_type)
        if schema is not None and label in schema.slot_names():
            return (schema.slot_names().index(label), "")
        return (len(schemas.get(event_type, EventSchema(event_type, ())).slots), label)

    def event_order(event_type: str) -> tuple[int, str]:
        known = list(schemas)
        if event_type in known:
            return (known.index(event_type), "")
        return (len(known), event_type)

    keys = sorted(
        counts, key=lambda k: (event_order(k[0]), slot_order(k[0], k[1]))
    )
    rows = tuple(
        SlotScore(event_type, label, *counts[(event_type, label)])
        for event_type, label in keys
    )
    micro = []
    for slot in GENERIC_SLOTS:
        tp = sum(c[0] for (et, lb), c in counts.items() if lb == slot)
        fp = sum(c[1] for (et, lb), c in counts.items() if lb == slot)
        fn = sum(c[2] for (et, lb), c in counts.items() if lb == slot)
        micro.append(SlotScore("ALL", slot, tp, fp, fn))
    return EvalReport(rows=rows, micro=tuple(micro))


def micro_average(
    gold: Sequence[SentenceAnnotation],
    pred: Sequence[SentenceAnnotation],
    slots: Sequence[str] = GENERIC_SLOTS,
) -> dict[str, SlotScore]:
    """Pool TP/FP/FN across event types for the given slots."""
    counts = _tally(gold, pred)
    out: dict[str, SlotScore] = {}
    for slot in slots:
        tp = sum(c[0] for (et, lb), c in counts.items() if lb == slot)
        fp = sum(c[1] for (et, lb), c in counts.items() if lb == slot)
        fn = sum(c[2] for (et, lb), c in counts.items() if lb == slot)
        out[slot] = SlotScore("ALL", slot, tp, fp, fn)
    return out


# ---------------------------------------------------------------------------
# corpus statistics


@dataclass(frozen=True)
class StatsRow:
    event_type: str
    split: str
    sentences: int
    tagged_tokens: int
    total_tokens: int


_SPLIT_ORDER = {name: i for i, name in enumerate(("train", "dev", "test", "unseen", "unassigned"))}


def corpus_stats(annotations: Sequence[SentenceAnnotation]) -> list[StatsRow]:
    """Sentences, tagged tokens, and total tokens per (event type, split)."""
    sentences: dict[tuple[str, str], set[str]] = defaultdict(set)
    tagged: Counter[tuple[str, str]] = Counter()
    total: Counter[tuple[str, str]] = Counter()
    for record in annotations:
        if record.n_tokens is None:
            raise InputError(
                f"record for sentence {record.sentence_id!r} has no token count"
            )
        key = (record.event_type, record.split or "unassigned")
        sentences[key].add(record.sentence_id)
        tagged[key] += sum(s.end - s.start for s in record.spans)
        total[key] += record.n_tokens
    rows = [
        StatsRow(
            event_type=event_type,
            split=split,
            sentences=len(ids),
            tagged_tokens=tagged[(event_type, split)],
            total_tokens=total[(event_type, split)],
        )
        for (event_type, split), ids in sentences.items()
    ]
    rows.sort(key=lambda r: (r.event_type, _SPLIT_ORDER.get(r.split, 99), r.split))
    return rows


# ---------------------------------------------------------------------------
# error buckets


@dataclass(frozen=True)
class ErrorBuckets:
    exact: int
    span_error: int
    label_confusion: int
    spurious: int
    missed: int

    @property
    def total_errors(self) -> int:
        return self.span_error + self.label_confusion + self.spurious + self.missed

    def proportions(self) -> dict[str, float]:
        total = self.total_errors
        if total == 0:
            return {"span_error": 0.0, "label_confusion": 0.0, "spurious": 0.0, "missed": 0.0}
        return {
            "span_error": self.span_error / total,
            "label_confusion": self.label_confusion / total,
            "spurious": self.spurious / total,
            "missed": self.missed / total,
        }


def classify_errors(
    gold: Sequence[SentenceAnnotation], pred: Sequence[SentenceAnnotation]
) -> ErrorBuckets:
    """Bucket disagreements between gold and predicted spans.

    Unmatched predictions land in exactly one bucket: partial overlap
    with a same-label gold span is a span error, exact boundaries with a
    different label is label confusion, anything else (including partial
    overlap with only differently-labeled gold) is spurious.  Gold spans
    no prediction touches are missed.
    """
    gold_sets = _span_sets(gold)
    pred_sets = _span_sets(pred)
    exact = span_error = label_confusion = spurious = missed = 0
    all_keys = {
        (event_type, sentence_id)
        for sets in (gold_sets, pred_sets)
        for event_type, by_sentence in sets.items()
        for sentence_id in by_sentence
    }
    for event_type, sentence_id in sorted(all_keys):
        g = gold_sets.get(event_type, {}).get(sentence_id, set())
        p = pred_sets.get(event_type, {}).get(sentence_id, set())
        exact += len(g & p)

        def overlap(a: tuple[int, int, str], b: tuple[int, int, str]) -> bool:
            return a[0] < b[1] and b[0] < a[1]

        for span in p - g:
            if any(t[2] == span[2] and overlap(span, t) for t in g):
                span_error += 1
            elif any(t[:2] == span[:2] and t[2] != span[2] for t in g):
                label_confusion += 1
            else:
                spurious += 1
        for span in g - p:
            if not any(overlap(span, t) for t in p):
                missed += 1
    return ErrorBuckets(
        exact=exact,
        span_error=span_error,
        label_confusion=label_confusion,
        spurious=spurious,
        missed=missed,
    )
