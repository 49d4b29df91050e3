"""Near-duplicate pooling and leak-free corpus splits.

Wire stories get reprinted with light edits, so the corpus is grouped
into pools of near-duplicates before any split is drawn.  Documents are
compared by cosine similarity over raw lowercased unigram counts
(punctuation-only tokens dropped); any pair whose similarity strictly
exceeds the threshold is forced into one pool, transitively, and a pool
always lands in a single split.  That makes memorizing a training
near-duplicate useless on dev or test.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .documents import Document
from .errors import InputError

DEFAULT_THRESHOLD = 0.90
DEFAULT_UNSEEN_FRACTION = 0.41


@dataclass(frozen=True)
class TermVector:
    doc_id: str
    counts: Mapping[str, int]


def unigram_vector(doc: Document) -> TermVector:
    """Raw lowercased unigram counts for one document.

    Tokens without a single alphanumeric character (bare punctuation)
    are not counted; a document with nothing countable is an error
    because cosine similarity would be undefined for it.
    """
    counts: Counter[str] = Counter()
    for sent in doc.sentences:
        for tok in sent.tokens:
            term = tok.surface.lower()
            if any(ch.isalnum() for ch in term):
                counts[term] += 1
    if not counts:
        raise InputError(f"document {doc.id!r} has no countable tokens")
    return TermVector(doc_id=doc.id, counts=dict(counts))


def cosine_similarity(a: TermVector, b: TermVector) -> float:
    if not a.counts or not b.counts:
        raise InputError("cosine similarity of an empty term vector is undefined")
    small, large = (a.counts, b.counts) if len(a.counts) <= len(b.counts) else (b.counts, a.counts)
    dot = sum(count * large.get(term, 0) for term, count in small.items())
    if dot == 0:
        return 0.0
    norm_a = math.sqrt(sum(c * c for c in a.counts.values()))
    norm_b = math.sqrt(sum(c * c for c in b.counts.values()))
    return dot / (norm_a * norm_b)


@dataclass(frozen=True)
class PoolAssignment:
    """Pool membership and, once drawn, the pool-level split assignment."""

    pool_of: Mapping[str, str]  # doc id -> pool id (lowest member doc id)
    split_of: Mapping[str, str]  # pool id -> split name
    threshold: float

    def split_for(self, doc_id: str, default: str = "unassigned") -> str:
        pool = self.pool_of.get(doc_id)
        if pool is None:
            return default
        return self.split_of.get(pool, default)

    def pools(self) -> dict[str, list[str]]:
        members: dict[str, list[str]] = defaultdict(list)
        for doc_id, pool_id in self.pool_of.items():
            members[pool_id].append(doc_id)
        return {pool: sorted(ids) for pool, ids in sorted(members.items())}


def pool_duplicates(
    docs: Sequence[Document], threshold: float = DEFAULT_THRESHOLD
) -> PoolAssignment:
    """Group documents into near-duplicate pools (transitive closure).

    Candidate pairs are restricted to documents sharing at least one
    term, which prunes nothing semantically: a pair with no shared term
    has similarity 0 and can never exceed the threshold.
    """
    if not 0.0 < threshold <= 1.0:
        raise InputError(f"threshold must be in (0, 1], got {threshold}")
    vectors = [unigram_vector(doc) for doc in docs]
    ids = [v.doc_id for v in vectors]
    if len(set(ids)) != len(ids):
        raise InputError("duplicate document ids in corpus")

    parent = list(range(len(vectors)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int) -> None:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[rj] = ri

    by_term: dict[str, list[int]] = defaultdict(list)
    for i, vec in enumerate(vectors):
        for term in vec.counts:
            by_term[term].append(i)

    for i, vec in enumerate(vectors):
        candidates: set[int] = set()
        for term in vec.counts:
            candidates.update(by_term[term])
        for j in candidates:
            if j <= i or find(i) == find(j):
                continue
            if cosine_similarity(vec, vectors[j]) > threshold:
                union(i, j)

    groups: dict[int, list[str]] = defaultdict(list)
    for i, doc_id in enumerate(ids):
        groups[find(i)].append(doc_id)
    pool_of = {}
    for members in groups.values():
        pool_id = min(members)
        for doc_id in members:
            pool_of[doc_id] = pool_id
    return PoolAssignment(pool_of=pool_of, split_of={}, threshold=threshold)


def assign_splits(
    assignment: PoolAssignment,
    docs: Sequence[Document],
    unseen_fraction: float = DEFAULT_UNSEEN_FRACTION,
) -> PoolAssignment:
    """Assign every pool to train/dev/test, newest pools held out.

    Pools are ordered by their newest member, keyed on collected_at
    (ISO order) with the document id as fallback, so the held-out data
    is drawn from the most recently collected material.  Walking from
    the newest pool down, whole pools are held out until they cover
    round(unseen_fraction * corpus size) documents; held-out pools then
    alternate dev, test, dev, ... and the rest is train.
    """
    if not 0.0 < unseen_fraction <= 1.0:
        raise InputError(f"unseen fraction must be in (0, 1], got {unseen_fraction}")
    docs_by_id = {doc.id: doc for doc in docs}

    def doc_key(doc_id: str) -> tuple[str, str]:
        doc = docs_by_id.get(doc_id)
        collected = ""
        if doc is not None and doc.collected_at is not None:
            collected = doc.collected_at.isoformat()
        return (collected, doc_id)

    members: dict[str, list[str]] = defaultdict(list)
    for doc_id, pool_id in assignment.pool_of.items():
        members[pool_id].append(doc_id)
    ordered = sorted(members, key=lambda p: max(doc_key(d) for d in members[p]))

    total = sum(len(m) for m in members.values())
    target = math.floor(total * unseen_fraction + 0.5)
    split_of: dict[str, str] = {}
    held_out: list[str] = []
    covered = 0
    for pool_id in reversed(ordered):  # newest first
        if covered < target:
            held_out.append(pool_id)
            covered += len(members[pool_id])
        else:
            split_of[pool_id] = "train"
    for k, pool_id in enumerate(held_out):
        split_of[pool_id] = "dev" if k % 2 == 0 else "test"
    return PoolAssignment(
        pool_of=assignment.pool_of, split_of=split_of, threshold=assignment.threshold
    )
