"""Event extraction for space-domain news over dependency parses.

The pipeline: parse documents (CoNLL-U or JSON lines), pool
near-duplicates into train/dev/test splits, tag entity mentions from a
gazetteer, index trigger terms, run declarative trigger + dependency
path rules, and score the results span by span.
"""

from .dedup import (
    DEFAULT_THRESHOLD,
    DEFAULT_UNSEEN_FRACTION,
    PoolAssignment,
    TermVector,
    assign_splits,
    cosine_similarity,
    pool_duplicates,
    unigram_vector,
)
from .documents import (
    ROOT,
    SPLITS,
    DepEdge,
    Document,
    Sentence,
    Token,
    parse_conllu,
    parse_jsonl_documents,
    serialize_conllu,
    serialize_jsonl_documents,
    validate_corpus,
)
from .errors import InputError, ParseError, RuleError, SchemaError, SpaceventsError, StructureError
from .evaluation import (
    AnnotationLayer,
    ErrorBuckets,
    EvalReport,
    LabeledSpan,
    SentenceAnnotation,
    SlotScore,
    agreement,
    bio_to_spans,
    classify_errors,
    consensus,
    corpus_stats,
    micro_average,
    read_annotations,
    score_slots,
    spans_to_bio,
)
from .gazetteer import (
    ENTITY_TYPES,
    GazetteerEntry,
    GazetteerMatcher,
    Mention,
    compile_gazetteer,
    generic_mentions,
    merge_ner,
    ner_layer,
    read_gazetteer,
    tag_sentence,
)
from .index import InvertedIndex, build_index, candidate_sentences, load_index, save_index
from .matching import (
    EventMention,
    chunk_span,
    event_to_dict,
    extract_events,
    find_trigger_spans,
    match_rule,
    traverse_path,
    trigger_anchor,
)
from .rules import Atom, DepPathStep, Rule, SlotPattern, TokenPattern, parse_rules
from .schemas import (
    ANCHOR_SLOTS,
    ANNOTATION_HEADER,
    EVENT_TYPES,
    SCHEMAS,
    CandidateSentence,
    EventSchema,
    SlotSpec,
    ValidationResult,
    annotation_task_records,
    shortlist,
    validate_event,
)

__version__ = "0.1.0"

__all__ = [
    "ANCHOR_SLOTS",
    "ANNOTATION_HEADER",
    "AnnotationLayer",
    "Atom",
    "CandidateSentence",
    "DEFAULT_THRESHOLD",
    "DEFAULT_UNSEEN_FRACTION",
    "DepEdge",
    "DepPathStep",
    "Document",
    "ErrorBuckets",
    "ENTITY_TYPES",
    "EVENT_TYPES",
    "EvalReport",
    "EventMention",
    "EventSchema",
    "GazetteerEntry",
    "GazetteerMatcher",
    "InputError",
    "InvertedIndex",
    "LabeledSpan",
    "Mention",
    "ParseError",
    "PoolAssignment",
    "ROOT",
    "Rule",
    "RuleError",
    "SCHEMAS",
    "SPLITS",
    "SchemaError",
    "Sentence",
    "SentenceAnnotation",
    "SlotPattern",
    "SlotScore",
    "SlotSpec",
    "SpaceventsError",
    "StructureError",
    "TermVector",
    "Token",
    "TokenPattern",
    "ValidationResult",
    "agreement",
    "annotation_task_records",
    "assign_splits",
    "bio_to_spans",
    "build_index",
    "candidate_sentences",
    "chunk_span",
    "classify_errors",
    "compile_gazetteer",
    "consensus",
    "corpus_stats",
    "cosine_similarity",
    "event_to_dict",
    "extract_events",
    "find_trigger_spans",
    "generic_mentions",
    "load_index",
    "match_rule",
    "merge_ner",
    "micro_average",
    "ner_layer",
    "parse_conllu",
    "parse_jsonl_documents",
    "parse_rules",
    "pool_duplicates",
    "read_annotations",
    "read_gazetteer",
    "save_index",
    "score_slots",
    "serialize_conllu",
    "serialize_jsonl_documents",
    "shortlist",
    "spans_to_bio",
    "tag_sentence",
    "traverse_path",
    "trigger_anchor",
    "unigram_vector",
    "validate_corpus",
    "validate_event",
]
