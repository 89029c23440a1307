"""Cross-app bug recommendation from user reviews via text embeddings."""

__version__ = "0.1.0"

from .corpus import (
    AppDescriptor,
    AppReview,
    BugReport,
    CorpusStore,
    load_store,
    save_store,
)
from .embedding import (
    Embedder,
    EmbedderConfig,
    EmbeddingVector,
    cosine,
    embed,
    embed_corpus,
    hash_embed,
)
from .matcher import (
    GroundTruthPair,
    MatchConfig,
    Recommendation,
    ReviewMatch,
    build_ground_truth,
    duplicate_check,
    lead_time_stats,
    rank_reviews,
    recommend,
    recommend_batch,
    temporal_review_filter,
)
from .metrics import (
    EvalReport,
    HitProfile,
    OverlapMatrix,
    acc_at_n,
    evaluate_ground_truth,
    mrr_at_n,
    overlap_matrix,
    overlap_rate,
)
from .textprep import (
    CleanedText,
    WordSet,
    clean_for_analysis,
    clean_for_embedding,
    frequent_above,
    top_k_frequent,
)

__all__ = [
    "AppDescriptor",
    "AppReview",
    "BugReport",
    "CleanedText",
    "CorpusStore",
    "Embedder",
    "EmbedderConfig",
    "EmbeddingVector",
    "EvalReport",
    "GroundTruthPair",
    "HitProfile",
    "MatchConfig",
    "OverlapMatrix",
    "Recommendation",
    "ReviewMatch",
    "WordSet",
    "acc_at_n",
    "build_ground_truth",
    "clean_for_analysis",
    "clean_for_embedding",
    "cosine",
    "duplicate_check",
    "embed",
    "embed_corpus",
    "evaluate_ground_truth",
    "frequent_above",
    "hash_embed",
    "lead_time_stats",
    "load_store",
    "mrr_at_n",
    "overlap_matrix",
    "overlap_rate",
    "rank_reviews",
    "recommend",
    "recommend_batch",
    "save_store",
    "temporal_review_filter",
    "top_k_frequent",
]
