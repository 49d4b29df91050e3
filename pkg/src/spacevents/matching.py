"""Rule matching over dependency-parsed sentences.

Trigger token patterns are matched against contiguous token runs; slot
patterns then walk labeled dependency edges out from the trigger and
turn the tokens they reach into slot fillers.  A filler is either the
whole typed mention containing the reached token (entity fillers) or
the maximal noun-phrase chunk around it (chunk fillers), never the bare
token, so "the Hubble Space Telescope" comes out in one piece.

Path traversal works on frontier sets.  Each step maps the current
frontier to the set of tokens reachable over one matching edge
(``out`` follows head-to-dependent edges, ``in`` the dependent-to-head
edge); an optional step keeps the unstepped frontier as well.  The
start token is dropped from the final frontier, so an all-optional
path cannot fill a slot with the trigger itself.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .documents import ROOT, Document, Sentence
from .errors import InputError
from .gazetteer import Mention
from .index import InvertedIndex, candidate_sentences
from .rules import DepPathStep, Rule, SlotPattern, TokenPattern

# POS tags the fallback chunker treats as noun-phrase material; covers the
# universal tagset and the Penn Treebank equivalents.
CHUNKABLE_POS = frozenset(
    {
        "DET", "ADJ", "NOUN", "PROPN", "NUM",
        "DT", "JJ", "JJR", "JJS", "NN", "NNS", "NNP", "NNPS", "CD", "HYPH",
    }
)

NerLayer = Callable[[Sentence], Sequence[Mention]]


@dataclass(frozen=True)
class EventMention:
    event_type: str
    doc_id: str
    sentence_id: str
    trigger: tuple[int, int]  # token span, end exclusive
    slots: Mapping[str, tuple[Mention, ...]]
    rule_name: str
    tier: str


def traverse_path(
    sentence: Sentence, start: int, path: Sequence[DepPathStep]
) -> set[int]:
    """Token indices reached by walking ``path`` from ``start``.

    The result is the final frontier minus the start token itself.
    """
    if not 0 <= start < len(sentence.tokens):
        raise InputError(f"start token {start} out of range")
    frontier = {start}
    for step in path:
        stepped: set[int] = set()
        if step.direction == "out":
            for node in frontier:
                for dep, label in sentence.dependents_of[node]:
                    if label in step.labels:
                        stepped.add(dep)
        else:
            for node in frontier:
                head, label = sentence.head_of[node]
                if head != ROOT and label in step.labels:
                    stepped.add(head)
        frontier = (frontier | stepped) if step.optional else stepped
        if not frontier:
            break
    frontier.discard(start)
    return frontier


def chunk_span(sentence: Sentence, index: int) -> tuple[int, int]:
    """The maximal noun-phrase chunk containing ``index``.

    Uses the input chunk layer (BIO tags) when the token carries one,
    repairing an orphan I- by treating it as a begin.  Without a chunk
    tag, falls back to the maximal run of noun-phrase-like POS tags
    around the token; a token that is not chunkable stands alone.
    """
    tokens = sentence.tokens
    n = len(tokens)
    tag = tokens[index].chunk
    if tag and len(tag) > 2 and tag[:2] in ("B-", "I-"):
        label = tag[2:]
        lo = index
        while tokens[lo].chunk == f"I-{label}" and lo > 0:
            prev = tokens[lo - 1].chunk
            if prev in (f"B-{label}", f"I-{label}"):
                lo -= 1
            else:
                break
        hi = index
        while hi + 1 < n and tokens[hi + 1].chunk == f"I-{label}":
            hi += 1
        return lo, hi + 1
    if tokens[index].pos not in CHUNKABLE_POS:
        return index, index + 1
    lo = index
    while lo > 0 and tokens[lo - 1].pos in CHUNKABLE_POS:
        lo -= 1
    hi = index
    while hi + 1 < n and tokens[hi + 1].pos in CHUNKABLE_POS:
        hi += 1
    return lo, hi + 1


def _entity_type_at(mentions: Sequence[Mention], n: int) -> list[str | None]:
    types: list[str | None] = [None] * n
    for mention in mentions:
        for i in range(max(mention.start, 0), min(mention.end, n)):
            types[i] = mention.entity_type
    return types


def _atom_matches(atom, token, ner_types) -> bool:
    if atom.field == "surface":
        value: str | None = token.surface
    elif atom.field == "lemma":
        value = token.lemma
    elif atom.field == "pos":
        value = token.pos
    else:
        value = ner_types[token.index]
    hit = value is not None and value in atom.values
    return hit != atom.negated


def _pattern_matches(pattern: TokenPattern, token, ner_types) -> bool:
    for branch in pattern.branches:
        if all(_atom_matches(atom, token, ner_types) for atom in branch):
            return True
    return False


def find_trigger_spans(
    sentence: Sentence, trigger: Sequence[TokenPattern], ner_types: Sequence[str | None]
) -> list[tuple[int, int]]:
    tokens = sentence.tokens
    width = len(trigger)
    spans = []
    for i in range(len(tokens) - width + 1):
        if all(
            _pattern_matches(trigger[j], tokens[i + j], ner_types)
            for j in range(width)
        ):
            spans.append((i, i + width))
    return spans


def trigger_anchor(sentence: Sentence, span: tuple[int, int]) -> int:
    """The trigger span's syntactic head: leftmost token whose head is outside."""
    start, end = span
    for i in range(start, end):
        head = sentence.head_of[i][0]
        if head == ROOT or not start <= head < end:
            return i
    return start


def _mention_containing(
    mentions: Sequence[Mention], index: int, allowed: Sequence[str]
) -> Mention | None:
    for mention in mentions:
        if mention.start <= index < mention.end and mention.entity_type in allowed:
            return mention
    return None


def match_rule(
    rule: Rule,
    sentence: Sentence,
    mentions: Sequence[Mention],
    doc_id: str = "",
) -> list[EventMention]:
    """All events ``rule`` produces on one sentence.

    Every trigger occurrence is tried independently; a trigger
    occurrence yields an event only if all required slots fill.
    """
    ner_types = _entity_type_at(mentions, len(sentence.tokens))
    events: list[EventMention] = []
    for span in find_trigger_spans(sentence, rule.trigger, ner_types):
        anchor = trigger_anchor(sentence, span)
        slots: dict[str, tuple[Mention, ...]] = {}
        satisfied = True
        for slot in rule.slots:
            targets = traverse_path(sentence, anchor, slot.path)
            fillers: list[Mention] = []
            seen: set[tuple[int, int, str, str]] = set()
            for target in sorted(targets):
                if slot.entity_types is None:
                    lo, hi = chunk_span(sentence, target)
                    mention = Mention(sentence.id, lo, hi, "NP", "chunk")
                else:
                    found = _mention_containing(mentions, target, slot.entity_types)
                    if found is None:
                        continue
                    mention = found
                key = (mention.start, mention.end, mention.entity_type, mention.origin)
                if key not in seen:
                    seen.add(key)
                    fillers.append(mention)
            if fillers:
                fillers.sort(key=lambda m: (m.start, m.end))
                slots[slot.name] = tuple(fillers)
            elif slot.required:
                satisfied = False
                break
        if satisfied:
            events.append(
                EventMention(
                    event_type=rule.event_type,
                    doc_id=doc_id,
                    sentence_id=sentence.id,
                    trigger=span,
                    slots=slots,
                    rule_name=rule.name,
                    tier=rule.tier,
                )
            )
    return events


def _tier_filter(events: list[EventMention]) -> list[EventMention]:
    """Drop backoff events whose trigger span a high-tier event already claimed."""
    claimed = {
        (ev.event_type, ev.trigger) for ev in events if ev.tier == "high"
    }
    return [
        ev
        for ev in events
        if ev.tier == "high" or (ev.event_type, ev.trigger) not in claimed
    ]


def _event_order(ev: EventMention):
    return (ev.doc_id, ev.sentence_id, ev.rule_name, ev.trigger, ev.event_type)


def extract_events(
    docs: Sequence[Document],
    rules: Sequence[Rule],
    index: InvertedIndex | None = None,
    ner: NerLayer | None = None,
    workers: int = 1,
) -> list[EventMention]:
    """Run every rule over the corpus and return events in canonical order.

    With ``index`` the rules only visit their candidate sentences; the
    result is identical to the full scan because candidate sets are
    supersets of the matching sentences.  The NER layer is evaluated
    once per visited sentence.  Output order is (doc id, sentence id,
    rule name, trigger span), so worker count cannot change the result.
    """
    rules = list(rules)
    ner_fn: NerLayer = ner if ner is not None else (lambda sentence: ())
    plan: dict[str, dict[str, list[Rule]]] | None = None
    if index is not None:
        plan = {}
        for rule in rules:
            for doc_id, sent_id in candidate_sentences(index, rule):
                plan.setdefault(doc_id, {}).setdefault(sent_id, []).append(rule)

    def run_doc(doc: Document) -> list[EventMention]:
        doc_plan = plan.get(doc.id) if plan is not None else None
        if plan is not None and not doc_plan:
            return []
        events: list[EventMention] = []
        for sent in doc.sentences:
            todo = rules if doc_plan is None else doc_plan.get(sent.id, [])
            if not todo:
                continue
            mentions = list(ner_fn(sent))
            found: list[EventMention] = []
            for rule in todo:
                found.extend(match_rule(rule, sent, mentions, doc_id=doc.id))
            events.extend(_tier_filter(found))
        return events

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_doc = list(pool.map(run_doc, docs))
    else:
        per_doc = [run_doc(doc) for doc in docs]
    events = [ev for chunk in per_doc for ev in chunk]
    events.sort(key=_event_order)
    return events


def event_to_dict(event: EventMention) -> dict:
    return {
        "doc_id": event.doc_id,
        "sentence_id": event.sentence_id,
        "event_type": event.event_type,
        "rule": event.rule_name,
        "tier": event.tier,
        "trigger": [event.trigger[0], event.trigger[1]],
        "slots": {
            name: [[m.start, m.end] for m in mentions]
            for name, mentions in event.slots.items()
        },
    }
