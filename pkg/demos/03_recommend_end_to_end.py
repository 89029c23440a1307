"""End-to-end recommendation: a source app's bug report matched against a
same-category target app's user reviews.

Run: python3 demos/03_recommend_end_to_end.py
"""

from datetime import datetime, timezone

from revrec import (
    AppDescriptor,
    AppReview,
    BugReport,
    CorpusStore,
    Embedder,
    EmbedderConfig,
    MatchConfig,
    recommend,
)


def utc(*args):
    return datetime(*args, tzinfo=timezone.utc)


store = CorpusStore()
store.register_app(AppDescriptor("firefox", "Firefox", "web browser", "mozilla/firefox"))
store.register_app(AppDescriptor("brave", "Brave", "web browser", "brave/brave-browser"))

report = BugReport(
    report_id="fx-42",
    app_id="firefox",
    title="cannot sync with qr code",
    body=None,
    created_at=utc(2022, 1, 10),
)
store.reports["firefox"] = [report]
store.reviews["brave"] = [
    AppReview("rv-1", "brave", "cannot sync with qr code ever since updating yesterday",
              utc(2022, 2, 1), 1, 5),
    AppReview("rv-2", "brave", "the ad blocking works great and pages load very fast",
              utc(2022, 2, 2), 5, 9),
]

embedder = Embedder(EmbedderConfig(backend="hash", dim=256))
cfg = MatchConfig(recommend_threshold=0.5, top_n=3)

rec = recommend(report, "brave", store, embedder, cfg)
print("decided:", rec.decided)
for m in rec.matches:
    print(f"  rank {m.rank}: {m.review_id}  sim={m.similarity:.6f}")
print()
print(rec.to_json())
