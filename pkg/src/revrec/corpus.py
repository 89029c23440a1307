"""Document data model, JSON-lines ingestion, and on-disk persistence.

A store is a directory holding ``manifest.json`` (format version plus the
registered apps), ``reports.jsonl`` and ``reviews.jsonl``. Stores are built
single-threaded, then treated as immutable by downstream modules.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .errors import SchemaViolation, UnknownApp, VersionMismatch
from .textprep import clean_for_embedding

log = logging.getLogger(__name__)

FORMAT_VERSION = 1

# Admissible review length in whitespace-delimited words, inclusive.
MIN_REVIEW_WORDS = 10
MAX_REVIEW_WORDS = 200


def parse_timestamp(value: str) -> datetime:
    """Parse an RFC 3339 timestamp and normalize it to UTC."""
    if not isinstance(value, str) or not value:
        raise ValueError(f"not a timestamp: {value!r}")
    text = value.replace("Z", "+00:00") if value.endswith("Z") else value
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


@dataclass(frozen=True)
class AppDescriptor:
    app_id: str
    name: str
    category: str
    repo: str | None = None

    def __post_init__(self):
        if not self.app_id:
            raise ValueError("app_id must be non-empty")
        if not self.category:
            raise ValueError("category must be non-empty")


@dataclass(frozen=True)
class BugReport:
    report_id: str
    app_id: str
    title: str
    created_at: datetime
    body: str | None = None
    labels: tuple[str, ...] = ()


@dataclass(frozen=True)
class AppReview:
    review_id: str
    app_id: str
    text: str
    created_at: datetime
    rating: int | None = None
    helpful_count: int = 0

    def __post_init__(self):
        if self.helpful_count < 0:
            raise ValueError("helpful_count must be >= 0")
        if self.rating is not None and not 1 <= self.rating <= 5:
            raise ValueError(f"rating out of range: {self.rating}")


def review_sort_key(review: AppReview):
    """Helpful-count descending, created_at descending, review_id ascending."""
    return (-review.helpful_count, -review.created_at.timestamp(), review.review_id)


@dataclass
class IngestResult:
    accepted: int = 0
    warnings: int = 0
    skipped: int = 0  # length-gated or duplicate records (valid but dropped)


class CorpusStore:
    """In-memory corpus of apps, their bug reports and their reviews."""

    def __init__(self):
        self.apps: dict[str, AppDescriptor] = {}
        self.reports: dict[str, list[BugReport]] = {}
        self.reviews: dict[str, list[AppReview]] = {}
        # normalized review texts per app, for dedup across ingests
        self._review_texts: dict[str, set[str]] = {}

    def __eq__(self, other) -> bool:
        if not isinstance(other, CorpusStore):
            return NotImplemented
        return (
            self.apps == other.apps
            and self.reports == other.reports
            and self.reviews == other.reviews
        )

    def register_app(self, app: AppDescriptor) -> None:
        if app.app_id in self.apps and self.apps[app.app_id] != app:
            raise ValueError(f"app {app.app_id!r} already registered differently")
        self.apps[app.app_id] = app
        self.reports.setdefault(app.app_id, [])
        self.reviews.setdefault(app.app_id, [])
        self._review_texts.setdefault(app.app_id, set())

    def _require_app(self, app_id: str) -> None:
        if app_id not in self.apps:
            raise UnknownApp(f"app {app_id!r} is not registered")

    # -- ingestion ---------------------------------------------------------

    def ingest_reports(self, path: str | Path, app_id: str) -> IngestResult:
        """Ingest a JSONL file of bug reports for a registered app.

        Malformed lines are counted as warnings, not fatal; a file that is
        more than half malformed raises SchemaViolation.
        """
        self._require_app(app_id)
        result = IngestResult()
        seen_ids = {r.report_id for r in self.reports[app_id]}
        now = datetime.now(timezone.utc)
        accepted: list[BugReport] = []
        total_lines = 0
        for line_no, record in _iter_jsonl(Path(path)):
            total_lines += 1
            if record is None:
                result.warnings += 1
                continue
            try:
                report = _parse_report(record, app_id, now)
            except (KeyError, TypeError, ValueError) as exc:
                log.warning("%s:%d: bad report record: %s", path, line_no, exc)
                result.warnings += 1
                continue
            if report.report_id in seen_ids:
                result.skipped += 1
                continue
            seen_ids.add(report.report_id)
            accepted.append(report)
            result.accepted += 1
        _check_malformed_ratio(path, result.warnings, total_lines)
        self.reports[app_id].extend(accepted)
        return result

    def ingest_reviews(self, path: str | Path, app_id: str) -> IngestResult:
        """Ingest a JSONL file of app reviews.

        Applies the 10..200-word length gate, drops exact duplicates of
        normalized text, and keeps reviews in helpful-score order.
        """
        self._require_app(app_id)
        result = IngestResult()
        seen_ids = {r.review_id for r in self.reviews[app_id]}
        seen_texts = self._review_texts[app_id]
        now = datetime.now(timezone.utc)
        accepted: list[AppReview] = []
        total_lines = 0
        for line_no, record in _iter_jsonl(Path(path)):
            total_lines += 1
            if record is None:
                result.warnings += 1
                continue
            try:
                review = _parse_review(record, app_id, now)
            except (KeyError, TypeError, ValueError) as exc:
                log.warning("%s:%d: bad review record: %s", path, line_no, exc)
                result.warnings += 1
                continue
            words = len(review.text.split())
            if not MIN_REVIEW_WORDS <= words <= MAX_REVIEW_WORDS:
                result.skipped += 1
                continue
            normalized = clean_for_embedding(review.text).cleaned
            if review.review_id in seen_ids or normalized in seen_texts:
                result.skipped += 1
                continue
            seen_ids.add(review.review_id)
            seen_texts.add(normalized)
            accepted.append(review)
            result.accepted += 1
        _check_malformed_ratio(path, result.warnings, total_lines)
        self.reviews[app_id].extend(accepted)
        self.reviews[app_id].sort(key=review_sort_key)
        return result


def _iter_jsonl(path: Path):
    """Yield (line_no, record-or-None) pairs; None marks undecodable lines."""
    with path.open("r", encoding="utf-8") as fp:
        for line_no, line in enumerate(fp, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                if not isinstance(record, dict):
                    raise ValueError("not an object")
            except ValueError:
                log.warning("%s:%d: undecodable line", path, line_no)
                yield line_no, None
                continue
            yield line_no, record


def _check_malformed_ratio(path, warnings: int, total: int) -> None:
    if total > 0 and warnings * 2 > total:
        raise SchemaViolation(
            f"{path}: {warnings}/{total} lines malformed; wrong file or schema?"
        )


def _parse_report(record: dict, app_id: str, now: datetime) -> BugReport:
    created_at = parse_timestamp(record["created_at"])
    if created_at > now:
        raise ValueError(f"created_at is in the future: {record['created_at']}")
    title = record["title"]
    if not isinstance(title, str) or not title:
        raise ValueError("title must be a non-empty string")
    body = record.get("body")
    if body is not None and not isinstance(body, str):
        raise ValueError("body must be a string or null")
    labels = record.get("labels", [])
    if not isinstance(labels, list) or any(not isinstance(x, str) for x in labels):
        raise ValueError("labels must be a list of strings")
    return BugReport(
        report_id=str(record["id"]),
        app_id=app_id,
        title=title,
        body=body,
        created_at=created_at,
        labels=tuple(labels),
    )


def _parse_review(record: dict, app_id: str, now: datetime) -> AppReview:
    created_at = parse_timestamp(record["created_at"])
    if created_at > now:
        raise ValueError(f"created_at is in the future: {record['created_at']}")
    text = record["text"]
    if not isinstance(text, str) or not text:
        raise ValueError("text must be a non-empty string")
    rating = record.get("rating")
    helpful = record.get("helpful_count", 0)
    if not isinstance(helpful, int):
        raise ValueError("helpful_count must be an integer")
    return AppReview(
        review_id=str(record["id"]),
        app_id=app_id,
        text=text,
        created_at=created_at,
        rating=rating,
        helpful_count=helpful,
    )


# -- persistence -----------------------------------------------------------


def save_store(store: CorpusStore, path: str | Path) -> None:
    """Write the store to a directory: manifest.json + two JSONL files."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": FORMAT_VERSION,
        "apps": [
            {
                "app_id": a.app_id,
                "name": a.name,
                "category": a.category,
                "repo": a.repo,
            }
            for a in sorted(store.apps.values(), key=lambda a: a.app_id)
        ],
    }
    (root / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    with (root / "reports.jsonl").open("w", encoding="utf-8") as fp:
        for app_id in sorted(store.reports):
            for r in store.reports[app_id]:
                fp.write(
                    json.dumps(
                        {
                            "app_id": r.app_id,
                            "id": r.report_id,
                            "title": r.title,
                            "body": r.body,
                            "created_at": format_timestamp(r.created_at),
                            "labels": list(r.labels),
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
    with (root / "reviews.jsonl").open("w", encoding="utf-8") as fp:
        for app_id in sorted(store.reviews):
            for r in store.reviews[app_id]:
                fp.write(
                    json.dumps(
                        {
                            "app_id": r.app_id,
                            "id": r.review_id,
                            "text": r.text,
                            "created_at": format_timestamp(r.created_at),
                            "rating": r.rating,
                            "helpful_count": r.helpful_count,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )


def load_store(path: str | Path) -> CorpusStore:
    """Load a store directory; never returns a partially-built store."""
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"no store manifest at {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise VersionMismatch(f"unreadable store manifest: {exc}") from exc
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"unknown store format version: {version!r}")

    store = CorpusStore()
    try:
        for app in manifest["apps"]:
            store.register_app(
                AppDescriptor(
                    app_id=app["app_id"],
                    name=app["name"],
                    category=app["category"],
                    repo=app.get("repo"),
                )
            )
        for _, record in _iter_jsonl(root / "reports.jsonl"):
            if record is None:
                raise VersionMismatch(f"corrupt reports.jsonl in {root}")
            app_id = record["app_id"]
            if app_id not in store.apps:
                raise VersionMismatch(f"report for unregistered app {app_id!r}")
            store.reports[app_id].append(
                _parse_report(record, app_id, datetime.now(timezone.utc))
            )
        for _, record in _iter_jsonl(root / "reviews.jsonl"):
            if record is None:
                raise VersionMismatch(f"corrupt reviews.jsonl in {root}")
            app_id = record["app_id"]
            if app_id not in store.apps:
                raise VersionMismatch(f"review for unregistered app {app_id!r}")
            review = _parse_review(record, app_id, datetime.now(timezone.utc))
            store.reviews[app_id].append(review)
            store._review_texts[app_id].add(clean_for_embedding(review.text).cleaned)
    except (KeyError, TypeError, ValueError) as exc:
        raise VersionMismatch(f"corrupt store at {root}: {exc}") from exc
    return store
