"""Field-tagged inverted index over sentences, with a small binary file format.

Terms are ``surface:<lowercased form>`` and ``lemma:<lemma as written>``;
postings are sorted, duplicate-free tuples of (document id, sentence id).
Because a rule trigger must keep a positive surface or lemma atom in
every alternative, intersecting/uniting the postings those atoms imply
yields a superset of the sentences the trigger can match, which is what
lets extraction skip almost the whole corpus.

On-disk layout, all integers little-endian:

    magic    6 bytes   b"SEVIDX"
    version  u16       currently 1
    n_refs   u32
    refs     n_refs x (u16 + utf-8 doc id, u16 + utf-8 sentence id)
    n_terms  u32
    terms    n_terms x (u16 + utf-8 term, u32 count, count x u32 ref index)

Refs are sorted by (doc id, sentence id) and terms are sorted, so the
same corpus always serializes to the same bytes.
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .documents import Document
from .errors import InputError, RuleError
from .rules import Rule

MAGIC = b"SEVIDX"
VERSION = 1

Ref = tuple[str, str]  # (doc id, sentence id)


@dataclass(frozen=True)
class InvertedIndex:
    postings: Mapping[str, tuple[Ref, ...]]

    def refs(self, term: str) -> tuple[Ref, ...]:
        return self.postings.get(term, ())

    def __len__(self) -> int:
        return len(self.postings)


def _doc_terms(doc: Document) -> set[tuple[str, str]]:
    pairs: set[tuple[str, str]] = set()
    for sent in doc.sentences:
        for tok in sent.tokens:
            pairs.add((f"surface:{tok.surface.lower()}", sent.id))
            pairs.add((f"lemma:{tok.lemma}", sent.id))
    return pairs


def build_index(docs: Sequence[Document], workers: int = 1) -> InvertedIndex:
    """Index every token's lowercased surface and lemma, per sentence."""
    raw: dict[str, list[Ref]] = {}
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_doc = list(pool.map(_doc_terms, docs))
    else:
        per_doc = [_doc_terms(doc) for doc in docs]
    for doc, pairs in zip(docs, per_doc):
        for term, sent_id in pairs:
            raw.setdefault(term, []).append((doc.id, sent_id))
    postings = {term: tuple(sorted(set(refs))) for term, refs in raw.items()}
    return InvertedIndex(postings=postings)


def candidate_sentences(index: InvertedIndex, rule: Rule) -> set[Ref]:
    """A guaranteed superset of the sentences whose tokens can match the trigger.

    Each bracket of the trigger narrows the candidate set (a matching
    sentence must contain a token for every bracket); within a bracket,
    alternatives widen it and each alternative contributes the postings
    of its positive surface/lemma atoms.
    """
    result: set[Ref] | None = None
    for pattern in rule.trigger:
        pattern_refs: set[Ref] = set()
        for branch in pattern.branches:
            branch_refs: set[Ref] | None = None
            for atom in branch:
                if atom.negated or atom.field not in ("surface", "lemma"):
                    continue
                atom_refs: set[Ref] = set()
                for literal in atom.values:
                    if atom.field == "surface":
                        term = f"surface:{literal.lower()}"
                    else:
                        term = f"lemma:{literal}"
                    atom_refs.update(index.refs(term))
                branch_refs = (
                    atom_refs if branch_refs is None else branch_refs & atom_refs
                )
            if branch_refs is None:
                raise RuleError(
                    f"rule {rule.name!r}: trigger alternative has no indexable atom"
                )
            pattern_refs |= branch_refs
        result = pattern_refs if result is None else result & pattern_refs
    return result if result is not None else set()


def save_index(index: InvertedIndex, path) -> None:
    refs = sorted({ref for postings in index.postings.values() for ref in postings})
    ref_ids = {ref: i for i, ref in enumerate(refs)}
    chunks: list[bytes] = [MAGIC, struct.pack("<H", VERSION)]
    chunks.append(struct.pack("<I", len(refs)))
    for doc_id, sent_id in refs:
        for part in (doc_id, sent_id):
            data = part.encode("utf-8")
            if len(data) > 0xFFFF:
                raise InputError(f"identifier too long to serialize: {part[:40]!r}...")
            chunks.append(struct.pack("<H", len(data)))
            chunks.append(data)
    terms = sorted(index.postings)
    chunks.append(struct.pack("<I", len(terms)))
    for term in terms:
        data = term.encode("utf-8")
        if len(data) > 0xFFFF:
            raise InputError(f"term too long to serialize: {term[:40]!r}...")
        postings = index.postings[term]
        chunks.append(struct.pack("<H", len(data)))
        chunks.append(data)
        chunks.append(struct.pack("<I", len(postings)))
        chunks.append(struct.pack(f"<{len(postings)}I", *(ref_ids[r] for r in postings)))
    Path(path).write_bytes(b"".join(chunks))


class _Reader:
    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    def take(self, count: int) -> bytes:
        if self._pos + count > len(self._data):
            raise InputError("index file is truncated")
        chunk = self._data[self._pos : self._pos + count]
        self._pos += count
        return chunk

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def string(self) -> str:
        return self.take(self.u16()).decode("utf-8")

    def done(self) -> bool:
        return self._pos == len(self._data)


def load_index(path) -> InvertedIndex:
    data = Path(path).read_bytes()
    reader = _Reader(data)
    if reader.take(len(MAGIC)) != MAGIC:
        raise InputError(f"{path}: not an index file (bad magic)")
    version = reader.u16()
    if version != VERSION:
        raise InputError(f"{path}: unsupported index version {version}")
    refs = [(reader.string(), reader.string()) for _ in range(reader.u32())]
    postings: dict[str, tuple[Ref, ...]] = {}
    for _ in range(reader.u32()):
        term = reader.string()
        count = reader.u32()
        ref_ids = struct.unpack(f"<{count}I", reader.take(4 * count))
        try:
            postings[term] = tuple(refs[i] for i in ref_ids)
        except IndexError:
            raise InputError(f"{path}: posting references unknown ref")
    if not reader.done():
        raise InputError(f"{path}: trailing bytes after index data")
    return InvertedIndex(postings=postings)
