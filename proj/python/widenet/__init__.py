"""Python bindings for the WideNet corpus-selection engine."""

from ._widenet import (
    Api,
    CorpusIndex,
    KnowledgeGraph,
    Period,
    Session,
    TemporalClass,
    TemporalClues,
    WidenetError,
    classify_entity,
    compute_features,
    extract_clues,
    generate_fixture,
    load_graph,
    parse_corpus,
    prune_categories,
    candidate_set,
    write_corpus,
)

__all__ = [
    "Api",
    "CorpusIndex",
    "KnowledgeGraph",
    "Period",
    "Session",
    "TemporalClass",
    "TemporalClues",
    "WidenetError",
    "candidate_set",
    "classify_entity",
    "compute_features",
    "extract_clues",
    "generate_fixture",
    "load_graph",
    "parse_corpus",
    "prune_categories",
    "write_corpus",
]
