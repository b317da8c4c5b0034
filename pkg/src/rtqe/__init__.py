"""Reference-free machine translation quality estimation.

Estimates translation quality without references by translating MT output
back to the source language and comparing the round trip against the
original sentence, with lexical metrics (BLEU, chrF, TER, term-frequency
cosine) and embedding cosine similarity, then correlating every metric
against human direct-assessment scores.
"""
from .analysis import (
    CorrelationReport,
    FailureFlags,
    GroupedDistribution,
    ZSeries,
    correlate,
    detect_code_switch,
    detect_failed_forward,
    failure_flags,
    group_distribution,
    pearson_r,
    z_normalize,
)
from .dataset import (
    QEDataset,
    QERecord,
    ValidationReport,
    load_qe_tsv,
    parse_qe_tsv,
    serialize_qe_tsv,
    validate_dataset,
)
from .embeddings import (
    EmbeddingBackend,
    EmbeddingVector,
    SimilarityScore,
    cosine_similarity,
    embed_batch,
    load_embedding_store,
    save_embedding_store,
)
from .errors import ConfigError, DataError, RtqeError, TransportError
from .metrics import (
    BleuConfig,
    ChrfConfig,
    MetricScore,
    chrf,
    sentence_bleu,
    ter,
    tf_cosine,
)
from .pipeline import PipelineConfig, RunManifest, load_config, run_pipeline
from .roundtrip import (
    MTClient,
    RoundTripResult,
    TranslationCache,
    round_trip,
    translate_batch,
)
from .textprep import (
    ScriptProfile,
    TokenSequence,
    char_ngrams,
    detect_scripts,
    english_stopwords,
    remove_stopwords,
    term_vectors,
    tokenize,
)

__version__ = "0.1.0"

__all__ = [
    "BleuConfig",
    "ChrfConfig",
    "ConfigError",
    "CorrelationReport",
    "DataError",
    "EmbeddingBackend",
    "EmbeddingVector",
    "FailureFlags",
    "GroupedDistribution",
    "MTClient",
    "MetricScore",
    "PipelineConfig",
    "QEDataset",
    "QERecord",
    "RoundTripResult",
    "RtqeError",
    "RunManifest",
    "ScriptProfile",
    "SimilarityScore",
    "TokenSequence",
    "TransportError",
    "TranslationCache",
    "ValidationReport",
    "ZSeries",
    "char_ngrams",
    "chrf",
    "correlate",
    "cosine_similarity",
    "detect_code_switch",
    "detect_failed_forward",
    "embed_batch",
    "english_stopwords",
    "failure_flags",
    "group_distribution",
    "load_config",
    "load_embedding_store",
    "load_qe_tsv",
    "parse_qe_tsv",
    "pearson_r",
    "remove_stopwords",
    "round_trip",
    "run_pipeline",
    "save_embedding_store",
    "sentence_bleu",
    "serialize_qe_tsv",
    "ter",
    "term_vectors",
    "tf_cosine",
    "tokenize",
    "translate_batch",
    "validate_dataset",
    "z_normalize",
]
