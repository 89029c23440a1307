"""Shared fixtures and independent oracles.

The oracle helpers here deliberately avoid the library's numpy scan path:
cosine is recomputed with plain-Python full-precision arithmetic so that
ranking tests check the optimized implementation against an independent
route.
"""

from __future__ import annotations

import json
import math
from datetime import datetime, timezone

import pytest

from revrec.corpus import AppDescriptor, AppReview, BugReport, CorpusStore


def utc(year, month, day, hour=0, minute=0, second=0):
    return datetime(year, month, day, hour, minute, second, tzinfo=timezone.utc)


def oracle_cosine(a, b) -> float:
    """Full-precision cosine over raw sequences, independent of numpy."""
    num = math.fsum(float(x) * float(y) for x, y in zip(a, b))
    na = math.sqrt(math.fsum(float(x) ** 2 for x in a))
    nb = math.sqrt(math.fsum(float(x) ** 2 for x in b))
    return num / (na * nb)


def oracle_rank(query_vec, review_vecs, reviews, top_n, threshold):
    """Exhaustive ranking oracle mirroring the documented ordering contract:
    similarity desc on a 1e-9 grid, created_at desc, review_id asc."""
    sims = [oracle_cosine(query_vec, v) for v in review_vecs]
    order = sorted(
        range(len(reviews)),
        key=lambda i: (
            -round(sims[i], 9),
            -reviews[i].created_at.timestamp(),
            reviews[i].review_id,
        ),
    )
    out = []
    for rank, i in enumerate(order[:top_n], start=1):
        if sims[i] < threshold:
            break
        out.append((reviews[i].review_id, sims[i], rank))
    return out


def make_store(apps=None) -> CorpusStore:
    store = CorpusStore()
    for app in apps or []:
        store.register_app(app)
    return store


def make_review(app_id, review_id, text, created_at=None, helpful=0, rating=None):
    return AppReview(
        review_id=review_id,
        app_id=app_id,
        text=text,
        created_at=created_at or utc(2022, 6, 1),
        rating=rating,
        helpful_count=helpful,
    )


def make_report(app_id, report_id, title, created_at=None, body=None):
    return BugReport(
        report_id=report_id,
        app_id=app_id,
        title=title,
        body=body,
        created_at=created_at or utc(2022, 1, 1),
    )


@pytest.fixture
def two_app_store():
    """Two same-category browser apps with a handful of reports and reviews."""
    store = make_store(
        [
            AppDescriptor("firefox", "Firefox", "web browser", "mozilla/firefox"),
            AppDescriptor("brave", "Brave", "web browser", "brave/brave-browser"),
        ]
    )
    store.reports["firefox"] = [
        make_report("firefox", "fx-1", "cannot sync with qr code", utc(2021, 3, 1)),
        make_report("firefox", "fx-2", "browser crashes when opening large pdf files",
                    utc(2021, 4, 2)),
        make_report("firefox", "fx-3", "dark mode text unreadable on settings page",
                    utc(2021, 5, 3)),
    ]
    store.reports["brave"] = [
        make_report("brave", "br-1", "browser crashes when opening large pdf files quickly",
                    utc(2021, 6, 1)),
        make_report("brave", "br-2", "video playback stutters on long pages",
                    utc(2021, 7, 1)),
    ]
    store.reviews["brave"] = [
        make_review("brave", "rv-1", "cannot sync with qr code ever",
                    utc(2021, 2, 10), helpful=5),
        make_review("brave", "rv-2", "great app love it five stars plus more words",
                    utc(2021, 2, 11), helpful=9),
        make_review("brave", "rv-3", "dark mode text unreadable on settings page sadly",
                    utc(2021, 2, 12), helpful=2),
    ]
    return store


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fp:
        for record in records:
            fp.write(json.dumps(record) + "\n")
    return path
