"""Dependency-parsed documents: the data model and its two interchange formats.

Documents arrive already tokenized, lemmatized, tagged, and parsed; this
module only loads, validates, and re-serializes them.  Two formats are
supported and round-trip through each other:

* CoNLL-U with ``# newdoc id`` / ``# sent_id`` comments (plus optional
  ``# split``, ``# source``, ``# collected_at``) and ``Ner=`` / ``Chunk=``
  pairs in the MISC column.
* JSON lines, one document object per line; see ``parse_jsonl_documents``.

Every loaded sentence is checked for structural sanity: exactly one edge
per token, exactly one root, no cycles.  Edges are kept in a canonical
order (by dependent) so that equal sentences compare equal regardless of
the order edges appeared in the input.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date
from functools import cached_property
from typing import Iterable, Iterator

from .errors import ParseError, SchemaError, StructureError

ROOT = -1

SPLITS = ("train", "dev", "test", "unseen", "unassigned")


@dataclass(frozen=True, slots=True)
class Token:
    index: int
    surface: str
    lemma: str
    pos: str
    generic_ner: str | None = None
    chunk: str | None = None


@dataclass(frozen=True, slots=True)
class DepEdge:
    head: int  # token index, or ROOT (-1)
    dependent: int
    label: str


@dataclass(frozen=True)
class Sentence:
    id: str
    tokens: tuple[Token, ...]
    edges: tuple[DepEdge, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(
            self, "edges", tuple(sorted(self.edges, key=lambda e: e.dependent))
        )

    def __len__(self) -> int:
        return len(self.tokens)

    def text(self) -> str:
        return " ".join(tok.surface for tok in self.tokens)

    @cached_property
    def head_of(self) -> tuple[tuple[int, str], ...]:
        """Per token: (head index or ROOT, edge label)."""
        arr: list[tuple[int, str]] = [(ROOT, "")] * len(self.tokens)
        for edge in self.edges:
            if 0 <= edge.dependent < len(arr):
                arr[edge.dependent] = (edge.head, edge.label)
        return tuple(arr)

    @cached_property
    def dependents_of(self) -> tuple[tuple[tuple[int, str], ...], ...]:
        """Per token: ((dependent index, edge label), ...) for outgoing edges."""
        out: list[list[tuple[int, str]]] = [[] for _ in self.tokens]
        for edge in self.edges:
            if 0 <= edge.head < len(out):
                out[edge.head].append((edge.dependent, edge.label))
        return tuple(tuple(deps) for deps in out)


@dataclass(frozen=True)
class Document:
    id: str
    sentences: tuple[Sentence, ...]
    source: str | None = None
    collected_at: date | None = None
    split: str = "unassigned"

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))


def sentence_issues(sentence: Sentence) -> list[str]:
    """All structural problems of one sentence, as human-readable strings.

    An empty list means the sentence is a well-formed dependency tree:
    every token has exactly one incoming edge, exactly one edge points at
    the artificial root, and following head links never loops.
    """
    issues: list[str] = []
    n = len(sentence.tokens)
    if n == 0:
        return ["sentence has no tokens"]
    for i, tok in enumerate(sentence.tokens):
        if not tok.surface:
            issues.append(f"token {i} has an empty surface form")
        if tok.index != i:
            issues.append(f"token at position {i} carries index {tok.index}")
    heads: dict[int, int] = {}
    root_count = 0
    for edge in sentence.edges:
        if not 0 <= edge.dependent < n:
            issues.append(f"edge dependent {edge.dependent} out of range")
            continue
        if edge.head != ROOT and not 0 <= edge.head < n:
            issues.append(f"head {edge.head} of token {edge.dependent} out of range")
            continue
        if edge.dependent in heads:
            issues.append(f"token {edge.dependent} has more than one head")
            continue
        heads[edge.dependent] = edge.head
        if edge.head == ROOT:
            root_count += 1
    for i in range(n):
        if i not in heads:
            issues.append(f"token {i} has no incoming edge (orphan)")
    if root_count != 1:
        issues.append(f"expected exactly one root edge, found {root_count}")
    if issues:
        return issues
    # With one head per token the head links form a functional graph; walk
    # each chain once to rule out cycles.
    state = [0] * n  # 0 unvisited, 1 on current chain, 2 known good
    for start in range(n):
        if state[start]:
            continue
        chain = []
        node = start
        while True:
            if state[node] == 1:
                issues.append(f"dependency cycle through token {node}")
                break
            if state[node] == 2:
                break
            state[node] = 1
            chain.append(node)
            head = heads[node]
            if head == ROOT:
                break
            node = head
        for visited in chain:
            state[visited] = 2
        if issues:
            break
    return issues


@dataclass(frozen=True)
class Issue:
    doc_id: str | None
    sentence_id: str | None
    message: str

    def __str__(self) -> str:
        where = []
        if self.doc_id is not None:
            where.append(f"doc {self.doc_id}")
        if self.sentence_id is not None:
            where.append(f"sentence {self.sentence_id}")
        prefix = " ".join(where)
        return f"{prefix}: {self.message}" if prefix else self.message


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[Issue, ...]

    @property
    def ok(self) -> bool:
        return not self.issues


def validate_corpus(docs: Iterable[Document]) -> ValidationReport:
    """Report-only validation of an already constructed corpus.

    Unlike the parsers, which refuse broken input outright, this walks
    everything and collects issues: duplicate document or sentence ids,
    bad split names, and any structural problem ``sentence_issues`` finds.
    """
    issues: list[Issue] = []
    seen_docs: set[str] = set()
    for doc in docs:
        if doc.id in seen_docs:
            issues.append(Issue(doc.id, None, f"duplicate document id: {doc.id}"))
        seen_docs.add(doc.id)
        if doc.split not in SPLITS:
            issues.append(Issue(doc.id, None, f"unknown split {doc.split!r}"))
        seen_sents: set[str] = set()
        for sent in doc.sentences:
            if sent.id in seen_sents:
                issues.append(
                    Issue(doc.id, sent.id, f"duplicate sentence id: {sent.id}")
                )
            seen_sents.add(sent.id)
            for message in sentence_issues(sent):
                issues.append(Issue(doc.id, sent.id, message))
    return ValidationReport(issues=tuple(issues))


def _lines(source) -> Iterator[str]:
    if isinstance(source, str):
        return iter(source.splitlines())
    return iter(source)


def _parse_date(value: str, line: int) -> date:
    try:
        return date.fromisoformat(value)
    except ValueError:
        raise ParseError(f"collected_at is not an ISO date: {value!r}", line=line)


# ---------------------------------------------------------------------------
# CoNLL-U


def parse_conllu(source) -> list[Document]:
    """Parse CoNLL-U text (a string or a line iterable) into documents.

    Multiword-token ranges (``1-2``) and empty nodes (``1.1``) are
    rejected; the corpus contract is one syntactic token per line.
    """
    docs: list[Document] = []
    doc_meta: dict | None = None
    sentences: list[Sentence] = []
    sent_ids: set[str] = set()
    sent_id: str | None = None
    sent_line = 0
    tokens: list[Token] = []
    edges: list[DepEdge] = []
    last_line = 0

    def close_sentence() -> None:
        nonlocal sent_id, tokens, edges
        if sent_id is None and not tokens:
            return
        if doc_meta is None:
            raise ParseError(
                "sentence outside any '# newdoc id' block", line=sent_line
            )
        if sent_id is None:
            raise ParseError("sentence is missing a '# sent_id' comment", line=sent_line)
        if not tokens:
            raise ParseError(f"sentence {sent_id!r} has no tokens", line=sent_line)
        if sent_id in sent_ids:
            raise ParseError(
                f"duplicate sentence id {sent_id!r} in document {doc_meta['id']!r}",
                line=sent_line,
            )
        sent = Sentence(id=sent_id, tokens=tuple(tokens), edges=tuple(edges))
        problems = sentence_issues(sent)
        if problems:
            raise StructureError(f"sentence {sent_id!r}: " + "; ".join(problems))
        sent_ids.add(sent_id)
        sentences.append(sent)
        sent_id = None
        tokens = []
        edges = []

    def close_doc() -> None:
        nonlocal doc_meta, sentences, sent_ids
        if doc_meta is None:
            return
        docs.append(
            Document(
                id=doc_meta["id"],
                sentences=tuple(sentences),
                source=doc_meta["source"],
                collected_at=doc_meta["collected_at"],
                split=doc_meta["split"],
            )
        )
        doc_meta = None
        sentences = []
        sent_ids = set()

    for line_no, raw in enumerate(_lines(source), start=1):
        last_line = line_no
        line = raw.rstrip("\r\n")
        if not line.strip():
            close_sentence()
            continue
        if line.startswith("#"):
            if tokens:
                raise ParseError("comment lines must precede token lines", line=line_no)
            key, sep, value = line[1:].partition("=")
            key = key.strip()
            value = value.strip()
            if not sep:
                continue  # free-form comment
            if key == "newdoc id":
                close_sentence()
                close_doc()
                doc_meta = {
                    "id": value,
                    "source": None,
                    "collected_at": None,
                    "split": "unassigned",
                }
            elif key == "sent_id":
                sent_id = value
                sent_line = line_no
            elif key in ("split", "source", "collected_at"):
                if doc_meta is None:
                    raise ParseError(f"'# {key}' comment outside a document", line=line_no)
                if key == "split":
                    if value not in SPLITS:
                        raise ParseError(f"unknown split {value!r}", line=line_no)
                    doc_meta["split"] = value
                elif key == "source":
                    doc_meta["source"] = value
                else:
                    doc_meta["collected_at"] = _parse_date(value, line_no)
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ParseError(
                f"expected 10 tab-separated columns, got {len(cols)}", line=line_no
            )
        tid, form, lemma, upos, xpos, _feats, head, deprel, _deps, misc = cols
        if "-" in tid:
            raise ParseError("multiword token ranges are not supported", line=line_no)
        if "." in tid:
            raise ParseError("empty nodes are not supported", line=line_no)
        try:
            index1 = int(tid)
        except ValueError:
            raise ParseError(f"malformed token id {tid!r}", line=line_no)
        if not tokens:
            sent_line = sent_line or line_no
        expected = len(tokens) + 1
        if index1 != expected:
            raise ParseError(
                f"token id {index1} out of sequence (expected {expected})", line=line_no
            )
        if not form:
            raise ParseError("empty FORM column", line=line_no)
        try:
            head1 = int(head)
        except ValueError:
            raise ParseError(f"malformed head {head!r}", line=line_no)
        if head1 < 0:
            raise ParseError(f"negative head {head1}", line=line_no)
        ner = chunk = None
        if misc and misc != "_":
            for part in misc.split("|"):
                k, _, v = part.partition("=")
                if k == "Ner":
                    ner = v
                elif k == "Chunk":
                    chunk = v
        pos = upos if upos != "_" else xpos
        tokens.append(
            Token(
                index=index1 - 1,
                surface=form,
                lemma=lemma if lemma != "_" else form,
                pos=pos,
                generic_ner=ner,
                chunk=chunk,
            )
        )
        edges.append(
            DepEdge(
                head=head1 - 1 if head1 > 0 else ROOT,
                dependent=index1 - 1,
                label=deprel,
            )
        )

    sent_line = sent_line or last_line
    close_sentence()
    close_doc()
    return docs


def serialize_conllu(docs: Iterable[Document]) -> str:
    out: list[str] = []
    for doc in docs:
        out.append(f"# newdoc id = {doc.id}")
        if doc.source is not None:
            out.append(f"# source = {doc.source}")
        if doc.collected_at is not None:
            out.append(f"# collected_at = {doc.collected_at.isoformat()}")
        if doc.split != "unassigned":
            out.append(f"# split = {doc.split}")
        for sent in doc.sentences:
            out.append(f"# sent_id = {sent.id}")
            by_dep = {edge.dependent: edge for edge in sent.edges}
            for tok in sent.tokens:
                edge = by_dep[tok.index]
                misc_parts = []
                if tok.generic_ner is not None:
                    misc_parts.append(f"Ner={tok.generic_ner}")
                if tok.chunk is not None:
                    misc_parts.append(f"Chunk={tok.chunk}")
                out.append(
                    "\t".join(
                        (
                            str(tok.index + 1),
                            tok.surface,
                            tok.lemma,
                            tok.pos,
                            "_",
                            "_",
                            str(edge.head + 1) if edge.head != ROOT else "0",
                            edge.label,
                            "_",
                            "|".join(misc_parts) or "_",
                        )
                    )
                )
            out.append("")
    return "\n".join(out) + ("\n" if out else "")


# ---------------------------------------------------------------------------
# JSON lines


def _require(obj: dict, key: str, kinds, line: int, path: str):
    if key not in obj:
        raise SchemaError(f"line {line}: missing required field {path}{key}")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, kinds):
        raise SchemaError(f"line {line}: field {path}{key} has the wrong type")
    return value


def _optional_str(obj: dict, key: str, line: int, path: str) -> str | None:
    if key not in obj:
        return None
    value = obj[key]
    if not isinstance(value, str):
        raise SchemaError(f"line {line}: field {path}{key} must be a string")
    return value


def _doc_from_dict(obj, line: int) -> Document:
    if not isinstance(obj, dict):
        raise SchemaError(f"line {line}: document record must be an object")
    doc_id = _require(obj, "id", str, line, "")
    source = _optional_str(obj, "source", line, "")
    collected_raw = _optional_str(obj, "collected_at", line, "")
    collected = _parse_date(collected_raw, line) if collected_raw is not None else None
    split = _optional_str(obj, "split", line, "") or "unassigned"
    if split not in SPLITS:
        raise SchemaError(f"line {line}: unknown split {split!r}")
    raw_sentences = _require(obj, "sentences", list, line, "")
    sentences: list[Sentence] = []
    seen: set[str] = set()
    for i, raw_sent in enumerate(raw_sentences):
        path = f"sentences[{i}]."
        if not isinstance(raw_sent, dict):
            raise SchemaError(f"line {line}: sentences[{i}] must be an object")
        sent_id = _require(raw_sent, "id", str, line, path)
        raw_tokens = _require(raw_sent, "tokens", list, line, path)
        raw_edges = _require(raw_sent, "edges", list, line, path)
        tokens: list[Token] = []
        for j, raw_tok in enumerate(raw_tokens):
            tpath = f"{path}tokens[{j}]."
            if not isinstance(raw_tok, dict):
                raise SchemaError(f"line {line}: {path}tokens[{j}] must be an object")
            tokens.append(
                Token(
                    index=j,
                    surface=_require(raw_tok, "surface", str, line, tpath),
                    lemma=_require(raw_tok, "lemma", str, line, tpath),
                    pos=_require(raw_tok, "pos", str, line, tpath),
                    generic_ner=_optional_str(raw_tok, "ner", line, tpath),
                    chunk=_optional_str(raw_tok, "chunk", line, tpath),
                )
            )
        edges: list[DepEdge] = []
        for j, raw_edge in enumerate(raw_edges):
            epath = f"{path}edges[{j}]."
            if not isinstance(raw_edge, dict):
                raise SchemaError(f"line {line}: {path}edges[{j}] must be an object")
            edges.append(
                DepEdge(
                    head=_require(raw_edge, "head", int, line, epath),
                    dependent=_require(raw_edge, "dep", int, line, epath),
                    label=_require(raw_edge, "label", str, line, epath),
                )
            )
        sent = Sentence(id=sent_id, tokens=tuple(tokens), edges=tuple(edges))
        problems = sentence_issues(sent)
        if problems:
            raise StructureError(
                f"line {line}: sentence {sent_id!r}: " + "; ".join(problems)
            )
        if sent_id in seen:
            raise SchemaError(
                f"line {line}: duplicate sentence id {sent_id!r} in document {doc_id!r}"
            )
        seen.add(sent_id)
        sentences.append(sent)
    return Document(
        id=doc_id,
        sentences=tuple(sentences),
        source=source,
        collected_at=collected,
        split=split,
    )


def parse_jsonl_documents(source) -> list[Document]:
    """Parse JSON-lines text (a string or a line iterable) into documents."""
    docs: list[Document] = []
    for line_no, raw in enumerate(_lines(source), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"line {line_no}: invalid JSON: {exc}")
        docs.append(_doc_from_dict(obj, line_no))
    return docs


def document_to_dict(doc: Document) -> dict:
    record: dict = {"id": doc.id}
    if doc.source is not None:
        record["source"] = doc.source
    if doc.collected_at is not None:
        record["collected_at"] = doc.collected_at.isoformat()
    if doc.split != "unassigned":
        record["split"] = doc.split
    record["sentences"] = []
    for sent in doc.sentences:
        tokens = []
        for tok in sent.tokens:
            t: dict = {"surface": tok.surface, "lemma": tok.lemma, "pos": tok.pos}
            if tok.generic_ner is not None:
                t["ner"] = tok.generic_ner
            if tok.chunk is not None:
                t["chunk"] = tok.chunk
            tokens.append(t)
        edges = [
            {"head": e.head, "dep": e.dependent, "label": e.label} for e in sent.edges
        ]
        record["sentences"].append({"id": sent.id, "tokens": tokens, "edges": edges})
    return record


def serialize_jsonl_documents(docs: Iterable[Document]) -> str:
    lines = [
        json.dumps(document_to_dict(doc), ensure_ascii=False, separators=(",", ":"))
        for doc in docs
    ]
    return "\n".join(lines) + ("\n" if lines else "")
