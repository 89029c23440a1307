"""Review matching and recommendation.

Exhaustive cosine scan of a target app's reviews against a source bug
report title, threshold gating, duplicate suppression against the
target's own tracker, ground-truth pair construction, and lead-time
statistics.
"""

from __future__ import annotations

import json
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Iterable, Sequence

import numpy as np

from .corpus import AppReview, BugReport, CorpusStore, format_timestamp
from .embedding import Embedder
from .errors import EmptyCorpus, NoDecidedRecommendations, UnknownApp

# Similarities are compared on a 1e-9 grid when ordering, so that scan
# results are identical across chunkings, thread counts, and the
# independent full-precision oracle; real ties fall through to the
# (created_at desc, id asc) tie-break.
SIM_DECIMALS = 9


@dataclass(frozen=True)
class MatchConfig:
    recommend_threshold: float = 0.9
    ground_truth_threshold: float = 0.91
    duplicate_threshold: float = 0.91
    top_n: int = 3

    def __post_init__(self):
        # Thresholds normally live in (0, 1]; out-of-range values are legal
        # knobs (> 1 disables matching, <= 0 disables the gate).
        for name in ("recommend_threshold", "ground_truth_threshold", "duplicate_threshold"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
        if self.top_n < 1:
            raise ValueError("top_n must be >= 1")


@dataclass(frozen=True)
class ReviewMatch:
    review_id: str
    similarity: float
    rank: int


@dataclass(frozen=True)
class Recommendation:
    source_app: str
    source_report: str
    target_app: str
    decided: bool
    matches: tuple[ReviewMatch, ...] = ()
    duplicate_of: tuple[str, float] | None = None

    def to_json(self) -> str:
        """Stable field order; similarities at 6 decimal places."""
        record = {
            "source_app": self.source_app,
            "source_report": self.source_report,
            "target_app": self.target_app,
            "decided": self.decided,
            "duplicate_of": (
                None
                if self.duplicate_of is None
                else {
                    "report_id": self.duplicate_of[0],
                    "similarity": float(f"{self.duplicate_of[1]:.6f}"),
                }
            ),
            "matches": [
                {
                    "rank": m.rank,
                    "review_id": m.review_id,
                    "similarity": float(f"{m.similarity:.6f}"),
                }
                for m in self.matches
            ],
        }
        return json.dumps(record, sort_keys=False, separators=(", ", ": "))


@dataclass
class GroundTruthPair:
    report_a: tuple[str, str]  # (app_id, report_id)
    report_b: tuple[str, str]
    pair_similarity: float
    hit_rank: int | None = None


@dataclass
class ReviewIndex:
    """Pre-embedded reviews of one app, ready for repeated dot-product scans."""

    app_id: str
    reviews: tuple[AppReview, ...]
    matrix: np.ndarray = field(repr=False)  # float64, rows unit-norm
    ids: np.ndarray = field(repr=False)  # review_id strings, for tie-breaks
    timestamps: np.ndarray = field(repr=False)  # created_at epoch seconds

    @classmethod
    def build(
        cls,
        store: CorpusStore,
        app_id: str,
        embedder: Embedder,
        reviews: Sequence[AppReview] | None = None,
    ) -> "ReviewIndex":
        if app_id not in store.apps:
            raise UnknownApp(f"app {app_id!r} is not registered")
        if reviews is None:
            reviews = store.reviews[app_id]
        reviews = tuple(reviews)
        if reviews:
            vectors = embedder.embed_many([r.text for r in reviews])
            matrix = np.stack([v.values for v in vectors]).astype(np.float64)
        else:
            matrix = np.zeros((0, embedder.cfg.dim), dtype=np.float64)
        return cls(
            app_id=app_id,
            reviews=reviews,
            matrix=matrix,
            ids=np.array([r.review_id for r in reviews], dtype=np.str_),
            timestamps=np.array(
                [r.created_at.timestamp() for r in reviews], dtype=np.float64
            ),
        )


def _scan_similarities(matrix: np.ndarray, query: np.ndarray, workers: int) -> np.ndarray:
    """Row-wise dot products, chunked; identical output for any worker count."""
    query = query.astype(np.float64)
    n = matrix.shape[0]
    if n == 0:
        return np.zeros(0)
    if workers <= 1 or n < 2 * workers:
        return matrix @ query
    bounds = np.linspace(0, n, workers + 1, dtype=int)
    chunks = [(int(bounds[i]), int(bounds[i + 1])) for i in range(workers)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda se: matrix[se[0] : se[1]] @ query, chunks))
    return np.concatenate(parts)


def _ranked_review_order(sims: np.ndarray, index: ReviewIndex) -> np.ndarray:
    """Indices sorted by similarity desc, created_at desc, review_id asc.

    np.lexsort sorts by the last key first; all keys are vectorized so a
    100k-review scan stays within the per-query latency budget.
    """
    rounded = np.round(sims, SIM_DECIMALS)
    return np.lexsort((index.ids, -index.timestamps, -rounded))


def rank_reviews(
    report: BugReport,
    target: str,
    store: CorpusStore,
    embedder: Embedder,
    cfg: MatchConfig,
    *,
    index: ReviewIndex | None = None,
    workers: int = 1,
) -> list[ReviewMatch]:
    """Exhaustively rank the target app's reviews against the report title.

    Sorted by similarity descending (created_at desc, review_id asc on
    ties), truncated to cfg.top_n, entries below the recommend threshold
    excluded.
    """
    if index is None:
        index = ReviewIndex.build(store, target, embedder)
    elif index.app_id != target:
        raise ValueError(f"index is for {index.app_id!r}, not {target!r}")
    query = embedder.embed(report.title)
    sims = _scan_similarities(index.matrix, query.values, workers)
    order = _ranked_review_order(sims, index)
    matches = []
    for rank, i in enumerate(order[: cfg.top_n], start=1):
        sim = float(sims[i])
        if sim < cfg.recommend_threshold:
            break
        matches.append(
            ReviewMatch(review_id=index.reviews[i].review_id, similarity=sim, rank=rank)
        )
    return matches


def duplicate_check(
    report: BugReport,
    target: str,
    store: CorpusStore,
    embedder: Embedder,
    cfg: MatchConfig,
) -> tuple[str, float] | None:
    """Max-similarity existing target report at or above the duplicate threshold."""
    if target not in store.apps:
        raise UnknownApp(f"app {target!r} is not registered")
    candidates = [
        r
        for r in store.reports[target]
        if not (r.app_id == report.app_id and r.report_id == report.report_id)
    ]
    embeddable: list[BugReport] = []
    vectors = []
    for r in candidates:
        try:
            vectors.append(embedder.embed(r.title))
            embeddable.append(r)
        except Exception:
            continue
    if not embeddable:
        return None
    query = embedder.embed(report.title)
    matrix = np.stack([v.values for v in vectors]).astype(np.float64)
    sims = matrix @ query.values.astype(np.float64)
    best = min(
        range(len(embeddable)),
        key=lambda i: (
            -round(float(sims[i]), SIM_DECIMALS),
            embeddable[i].report_id,
        ),
    )
    if float(sims[best]) >= cfg.duplicate_threshold:
        return embeddable[best].report_id, float(sims[best])
    return None


def recommend(
    report: BugReport,
    target: str,
    store: CorpusStore,
    embedder: Embedder,
    cfg: MatchConfig,
    *,
    index: ReviewIndex | None = None,
    workers: int = 1,
) -> Recommendation:
    """Duplicate gate first; only then match reviews and decide."""
    duplicate = duplicate_check(report, target, store, embedder, cfg)
    if duplicate is not None:
        return Recommendation(
            source_app=report.app_id,
            source_report=report.report_id,
            target_app=target,
            decided=False,
            matches=(),
            duplicate_of=duplicate,
        )
    matches = tuple(
        rank_reviews(report, target, store, embedder, cfg, index=index, workers=workers)
    )
    decided = bool(matches) and matches[0].similarity >= cfg.recommend_threshold
    return Recommendation(
        source_app=report.app_id,
        source_report=report.report_id,
        target_app=target,
        decided=decided,
        matches=matches,
        duplicate_of=None,
    )


def recommend_batch(
    reports: Sequence[BugReport],
    target: str,
    store: CorpusStore,
    embedder: Embedder,
    cfg: MatchConfig,
    *,
    workers: int = 1,
) -> list[Recommendation]:
    """Recommend many reports against one target, sharing one review index."""
    index = ReviewIndex.build(store, target, embedder)
    return [
        recommend(r, target, store, embedder, cfg, index=index, workers=workers)
        for r in reports
    ]


def build_ground_truth(
    reports_a: Sequence[BugReport],
    reports_b: Sequence[BugReport],
    embedder: Embedder,
    cfg: MatchConfig,
) -> list[GroundTruthPair]:
    """Best B-report per A-report at or above the ground-truth threshold.

    Unembeddable titles on either side are skipped (counted via the
    returned pairs being fewer than len(reports_a)).
    """
    if not reports_a or not reports_b:
        raise EmptyCorpus("both report lists must be non-empty")

    def embed_side(reports):
        kept, vecs = [], []
        for r in reports:
            try:
                vecs.append(embedder.embed(r.title))
                kept.append(r)
            except Exception:
                continue
        return kept, vecs

    kept_a, vecs_a = embed_side(reports_a)
    kept_b, vecs_b = embed_side(reports_b)
    if not kept_a or not kept_b:
        raise EmptyCorpus("no embeddable titles on one side")
    matrix_b = np.stack([v.values for v in vecs_b]).astype(np.float64)
    pairs: list[GroundTruthPair] = []
    for ra, va in zip(kept_a, vecs_a):
        sims = matrix_b @ va.values.astype(np.float64)
        best = min(
            range(len(kept_b)),
            key=lambda i: (
                -round(float(sims[i]), SIM_DECIMALS),
                -kept_b[i].created_at.timestamp(),
                kept_b[i].report_id,
            ),
        )
        if float(sims[best]) >= cfg.ground_truth_threshold:
            pairs.append(
                GroundTruthPair(
                    report_a=(ra.app_id, ra.report_id),
                    report_b=(kept_b[best].app_id, kept_b[best].report_id),
                    pair_similarity=float(sims[best]),
                )
            )
    return pairs


def temporal_review_filter(
    reviews: Iterable[AppReview], cutoff: datetime
) -> list[AppReview]:
    """Reviews created strictly before the cutoff instant."""
    return [r for r in reviews if r.created_at < cutoff]


def lead_time_stats(
    recommendations: Sequence[Recommendation],
    store: CorpusStore,
    run_date: datetime,
) -> dict:
    """Days between each decided recommendation's top review and run_date."""
    items = []
    for rec in recommendations:
        if not rec.decided or not rec.matches:
            continue
        top = rec.matches[0]
        by_id = {r.review_id: r for r in store.reviews.get(rec.target_app, ())}
        review = by_id.get(top.review_id)
        if review is None:
            continue
        days = max(0.0, (run_date - review.created_at).total_seconds() / 86400.0)
        items.append(
            {
                "source_app": rec.source_app,
                "source_report": rec.source_report,
                "target_app": rec.target_app,
                "review_id": top.review_id,
                "review_created_at": format_timestamp(review.created_at),
                "days": days,
            }
        )
    if not items:
        raise NoDecidedRecommendations("no decided recommendations with matches")
    days = [item["days"] for item in items]
    return {
        "mean_days": statistics.fmean(days),
        "median_days": statistics.median(days),
        "per_item": items,
    }


def eval_match_config(cfg: MatchConfig, top_n: int) -> MatchConfig:
    """Variant used during evaluation: no similarity gate, wider top_n."""
    return replace(cfg, recommend_threshold=-1.0, top_n=top_n)
