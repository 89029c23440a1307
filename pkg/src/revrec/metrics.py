"""Evaluation mathematics: overlap rate, Acc@N, MRR@N, overlap matrices,
and the ground-truth evaluation harness."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import CorpusStore
from .embedding import Embedder
from .errors import EmptyCorpus, EmptySet, MissingLabels
from .matcher import (
    GroundTruthPair,
    MatchConfig,
    _ranked_review_order,
    _scan_similarities,
    ReviewIndex,
    temporal_review_filter,
)
from .textprep import WordSet, top_k_frequent

DEFAULT_K_VALUES = tuple(range(100, 1001, 100))


@dataclass(frozen=True)
class HitProfile:
    """Hit ranks over a ground truth of a given length; absent index = miss."""

    length: int
    hit_ranks: Mapping[int, int]

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("length must be >= 1")
        if len(self.hit_ranks) > self.length:
            raise ValueError("more hits than ground-truth entries")
        for idx, rank in self.hit_ranks.items():
            if rank < 1:
                raise ValueError(f"rank must be >= 1, got {rank} at index {idx}")


@dataclass
class EvalReport:
    acc: dict[int, float]
    mrr: dict[int, float]
    n_values: list[int]

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_values": self.n_values,
                "acc": {str(n): self.acc[n] for n in self.n_values},
                "mrr": {str(n): self.mrr[n] for n in self.n_values},
            },
            indent=2,
        )

    def to_table(self) -> str:
        """Aligned plain-text table: one column per N, Acc and MRR rows in %."""
        header = ["Metric"] + [f"N={n}" for n in self.n_values]
        acc_row = ["Acc@N(%)"] + [f"{self.acc[n] * 100:.2f}" for n in self.n_values]
        mrr_row = ["MRR@N(%)"] + [f"{self.mrr[n] * 100:.2f}" for n in self.n_values]
        widths = [
            max(len(row[i]) for row in (header, acc_row, mrr_row))
            for i in range(len(header))
        ]
        lines = []
        for row in (header, acc_row, mrr_row):
            lines.append("  ".join(cell.rjust(w) for cell, w in zip(row, widths)))
        return "\n".join(lines)


@dataclass
class OverlapMatrix:
    apps: list[str]
    k_values: list[int]
    cells: dict[tuple[str, str, int], float]

    def to_csv(self, path: str | Path) -> None:
        """Rows are app pairs, columns are K values."""
        with Path(path).open("w", newline="", encoding="utf-8") as fp:
            writer = csv.writer(fp)
            writer.writerow(["app_x", "app_y"] + [f"K={k}" for k in self.k_values])
            for x in self.apps:
                for y in self.apps:
                    if x == y:
                        continue
                    writer.writerow(
                        [x, y] + [f"{self.cells[(x, y, k)]:.6f}" for k in self.k_values]
                    )


def overlap_rate(x: WordSet, y: WordSet) -> float:
    """|x ∩ y| / |x|."""
    if len(x.words) == 0:
        raise EmptySet("overlap rate is undefined for an empty reference set")
    xs = set(x.words)
    ys = set(y.words)
    return len(xs & ys) / len(xs)


def overlap_matrix(
    store: CorpusStore,
    app_ids: Sequence[str],
    k_values: Sequence[int] = DEFAULT_K_VALUES,
) -> OverlapMatrix:
    """Pairwise Top-K frequent-word overlap over bug-report text."""
    if not k_values:
        raise ValueError("k_values must be non-empty")
    docs_by_app = {}
    for app_id in app_ids:
        reports = store.reports.get(app_id, [])
        if not reports:
            raise EmptyCorpus(f"app {app_id!r} has no bug reports")
        docs_by_app[app_id] = [
            r.title if r.body is None else f"{r.title} {r.body}" for r in reports
        ]
    word_sets = {
        (app_id, k): top_k_frequent(docs_by_app[app_id], k)
        for app_id in app_ids
        for k in k_values
    }
    cells = {
        (x, y, k): overlap_rate(word_sets[(x, k)], word_sets[(y, k)])
        for x in app_ids
        for y in app_ids
        for k in k_values
    }
    return OverlapMatrix(apps=list(app_ids), k_values=list(k_values), cells=cells)


def acc_at_n(profile: HitProfile, n: int) -> float:
    """Fraction of ground-truth entries hit within the top n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    hits = sum(1 for rank in profile.hit_ranks.values() if rank <= n)
    return hits / profile.length


def mrr_at_n(profile: HitProfile, n: int) -> float:
    """Mean reciprocal rank over the ground truth; misses contribute zero."""
    if n < 1:
        raise ValueError("n must be >= 1")
    total = sum(1.0 / rank for rank in profile.hit_ranks.values() if rank <= n)
    return total / profile.length


def report_from_profile(profile: HitProfile, n_values: Sequence[int]) -> EvalReport:
    return EvalReport(
        acc={n: acc_at_n(profile, n) for n in n_values},
        mrr={n: mrr_at_n(profile, n) for n in n_values},
        n_values=list(n_values),
    )


def load_labels(path: str | Path) -> dict[tuple[str, str], set[str]]:
    """JSONL of {"pair": [a_report_id, b_report_id], "relevant_review_ids": [...]}."""
    labels: dict[tuple[str, str], set[str]] = {}
    with Path(path).open("r", encoding="utf-8") as fp:
        for line in fp:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            a_id, b_id = record["pair"]
            labels[(a_id, b_id)] = set(record["relevant_review_ids"])
    return labels


def evaluate_ground_truth(
    pairs: Sequence[GroundTruthPair],
    store: CorpusStore,
    embedder: Embedder,
    cfg: MatchConfig,
    n_values: Sequence[int],
    labels: Mapping[tuple[str, str], set[str]],
) -> EvalReport:
    """Rank each pair's target reviews and judge hits against the labels.

    For pair (A, B): reviews of B's app that precede B's creation time are
    ranked against A's title; the hit rank is the best rank of a labelled
    relevant review. Fills pair.hit_rank in place.
    """
    if not pairs:
        raise EmptyCorpus("no ground-truth pairs to evaluate")
    max_n = max(max(n_values), cfg.top_n)
    reports_by_key = {
        (r.app_id, r.report_id): r
        for app_id in store.reports
        for r in store.reports[app_id]
    }
    hit_ranks: dict[int, int] = {}
    for i, pair in enumerate(pairs):
        key = (pair.report_a[1], pair.report_b[1])
        if key not in labels:
            raise MissingLabels(f"no relevance labels for pair {key}")
        relevant = labels[key]
        report_a = reports_by_key[pair.report_a]
        report_b = reports_by_key[pair.report_b]
        target_app = pair.report_b[0]
        eligible = temporal_review_filter(
            store.reviews.get(target_app, []), report_b.created_at
        )
        if not eligible:
            pair.hit_rank = None
            continue
        index = ReviewIndex.build(store, target_app, embedder, reviews=eligible)
        query = embedder.embed(report_a.title)
        sims = _scan_similarities(index.matrix, query.values, workers=1)
        order = _ranked_review_order(sims, index)
        pair.hit_rank = None
        for rank, idx in enumerate(order[:max_n], start=1):
            if index.reviews[idx].review_id in relevant:
                pair.hit_rank = rank
                break
        if pair.hit_rank is not None:
            hit_ranks[i] = pair.hit_rank
    profile = HitProfile(length=len(pairs), hit_ranks=hit_ranks)
    return report_from_profile(profile, n_values)
