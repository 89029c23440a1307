"""Command-line orchestration of the pipeline.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 embedding
backend unavailable. Every output file starts with a manifest line
carrying tool version, config hash, and seed.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import click

from . import __version__
from .corpus import (
    AppDescriptor,
    CorpusStore,
    load_store,
    parse_timestamp,
    save_store,
)
from .embedding import Embedder, EmbedderConfig
from .errors import RevrecError, SidecarUnavailable
from .matcher import (
    GroundTruthPair,
    MatchConfig,
    build_ground_truth,
    lead_time_stats,
    recommend_batch,
)
from .metrics import (
    DEFAULT_K_VALUES,
    HitProfile,
    evaluate_ground_truth,
    load_labels,
    overlap_matrix,
    report_from_profile,
)

DEFAULT_N_VALUES = (1, 2, 3)


@dataclass
class RunConfig:
    """Resolved settings for one command invocation."""

    store_path: str | None = None
    embedder: EmbedderConfig = field(default_factory=EmbedderConfig)
    match: MatchConfig = field(default_factory=MatchConfig)
    n_values: tuple[int, ...] = DEFAULT_N_VALUES
    k_values: tuple[int, ...] = DEFAULT_K_VALUES
    output_path: str | None = None
    seed: int = 42

    def config_hash(self) -> str:
        blob = json.dumps(
            {
                "embedder": asdict(self.embedder),
                "match": asdict(self.match),
                "n_values": list(self.n_values),
                "k_values": list(self.k_values),
                "seed": self.seed,
            },
            sort_keys=True,
            default=str,
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def manifest_line(cfg: RunConfig, command: str) -> str:
    return json.dumps(
        {
            "manifest": {
                "tool": "revrec",
                "version": __version__,
                "command": command,
                "config_hash": cfg.config_hash(),
                "seed": cfg.seed,
            }
        }
    )


def _embedder_options(fn):
    fn = click.option("--embedder", "backend", type=click.Choice(["hash", "sidecar"]),
                      default="hash", show_default=True,
                      help="Embedding backend.")(fn)
    fn = click.option("--dim", type=int, default=256, show_default=True,
                      help="Vector dimension (hash backend).")(fn)
    fn = click.option("--endpoint", envvar="REVREC_ENDPOINT", default="",
                      help="Sidecar address, host:port or stdio:<cmd> "
                           "[env: REVREC_ENDPOINT].")(fn)
    fn = click.option("--seed", type=int, default=42, show_default=True,
                      help="Hash backend seed.")(fn)
    fn = click.option("--cache", "cache_path", type=click.Path(), default=None,
                      help="Embedding cache file.")(fn)
    return fn


def _store_option(fn):
    return click.option("--store", "store_path", envvar="REVREC_STORE", required=True,
                        type=click.Path(), help="Store directory [env: REVREC_STORE].")(fn)


def _build_run_config(store_path, backend, dim, endpoint, seed, cache_path,
                      threshold=0.9, gt_threshold=0.91, dup_threshold=0.91,
                      top_n=3, n_values=DEFAULT_N_VALUES, k_values=DEFAULT_K_VALUES,
                      out=None) -> RunConfig:
    embedder = EmbedderConfig(backend=backend, dim=dim, endpoint=endpoint,
                              cache_path=cache_path, seed=seed)
    match = MatchConfig(recommend_threshold=threshold,
                        ground_truth_threshold=gt_threshold,
                        duplicate_threshold=dup_threshold, top_n=top_n)
    return RunConfig(store_path=store_path, embedder=embedder, match=match,
                     n_values=tuple(n_values), k_values=tuple(k_values),
                     output_path=out, seed=seed)


@click.group()
@click.version_option(__version__)
def cli():
    """Recommend historical bug reports to same-category apps via review matching."""


@cli.command("ingest")
@_store_option
@click.option("--app-id", required=True, help="App to ingest into.")
@click.option("--name", default=None, help="Display name (registers the app).")
@click.option("--category", default=None, help="Category label (registers the app).")
@click.option("--repo", default=None, help="Source repository identifier.")
@click.option("--reports", "reports_path", type=click.Path(exists=True), default=None,
              help="Bug-report JSONL file.")
@click.option("--reviews", "reviews_path", type=click.Path(exists=True), default=None,
              help="Review JSONL file.")
def cmd_ingest(store_path, app_id, name, category, repo, reports_path, reviews_path):
    """Ingest bug reports and/or reviews into a store directory."""
    if Path(store_path, "manifest.json").exists():
        store = load_store(store_path)
    else:
        store = CorpusStore()
    if app_id not in store.apps:
        if not (name and category):
            raise click.UsageError(
                f"app {app_id!r} is not registered; pass --name and --category"
            )
        store.register_app(AppDescriptor(app_id=app_id, name=name,
                                         category=category, repo=repo))
    if reports_path:
        result = store.ingest_reports(reports_path, app_id)
        click.echo(
            f"reports: accepted {result.accepted}, warnings {result.warnings}, "
            f"skipped {result.skipped}", err=True)
    if reviews_path:
        result = store.ingest_reviews(reviews_path, app_id)
        click.echo(
            f"reviews: accepted {result.accepted}, warnings {result.warnings}, "
            f"skipped {result.skipped}", err=True)
    save_store(store, store_path)
    click.echo(f"store saved to {store_path}", err=True)


@cli.command("embed")
@_store_option
@_embedder_options
def cmd_embed(store_path, backend, dim, endpoint, seed, cache_path):
    """Embed every report title and review text into the cache."""
    if not cache_path:
        raise click.UsageError("embed needs --cache to be useful")
    cfg = _build_run_config(store_path, backend, dim, endpoint, seed, cache_path)
    store = load_store(store_path)
    embedder = Embedder(cfg.embedder)
    texts = []
    for app_id in sorted(store.apps):
        texts.extend(r.title for r in store.reports[app_id])
        texts.extend(r.text for r in store.reviews[app_id])
    embedded = 0
    for text in texts:
        try:
            embedder.embed(text)
            embedded += 1
        except RevrecError:
            continue
    embedder.close()
    click.echo(f"embedded {embedded}/{len(texts)} texts into {cache_path}", err=True)


@cli.command("recommend")
@_store_option
@_embedder_options
@click.option("--source-app", required=True)
@click.option("--target-app", required=True)
@click.option("--threshold", type=float, default=0.9, show_default=True,
              help="Recommendation similarity threshold.")
@click.option("--dup-threshold", type=float, default=0.91, show_default=True,
              help="Duplicate-report similarity threshold.")
@click.option("--top-n", type=int, default=3, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Output JSONL path.")
def cmd_recommend(store_path, backend, dim, endpoint, seed, cache_path,
                  source_app, target_app, threshold, dup_threshold, top_n, out):
    """Match one app's bug reports against another app's reviews."""
    cfg = _build_run_config(store_path, backend, dim, endpoint, seed, cache_path,
                            threshold=threshold, dup_threshold=dup_threshold,
                            top_n=top_n, out=out)
    store = load_store(store_path)
    for app in (source_app, target_app):
        if app not in store.apps:
            raise RevrecError(f"app {app!r} is not registered in {store_path}")
    embedder = Embedder(cfg.embedder)
    recs = recommend_batch(store.reports[source_app], target_app, store,
                           embedder, cfg.match)
    embedder.close()
    lines = [manifest_line(cfg, "recommend")] + [r.to_json() for r in recs]
    _write_lines(lines, out)
    decided = sum(r.decided for r in recs)
    click.echo(f"{decided}/{len(recs)} reports recommended to {target_app}", err=True)


@cli.command("ground-truth")
@_store_option
@_embedder_options
@click.option("--app-a", required=True)
@click.option("--app-b", required=True)
@click.option("--gt-threshold", type=float, default=0.91, show_default=True)
@click.option("--out", type=click.Path(), default=None)
def cmd_ground_truth(store_path, backend, dim, endpoint, seed, cache_path,
                     app_a, app_b, gt_threshold, out):
    """Build report pairs whose titles match above the ground-truth threshold."""
    cfg = _build_run_config(store_path, backend, dim, endpoint, seed, cache_path,
                            gt_threshold=gt_threshold, out=out)
    store = load_store(store_path)
    embedder = Embedder(cfg.embedder)
    pairs = build_ground_truth(store.reports.get(app_a, []),
                               store.reports.get(app_b, []),
                               embedder, cfg.match)
    embedder.close()
    lines = [manifest_line(cfg, "ground-truth")]
    for p in pairs:
        lines.append(json.dumps({
            "report_a": list(p.report_a),
            "report_b": list(p.report_b),
            "pair_similarity": float(f"{p.pair_similarity:.6f}"),
        }))
    _write_lines(lines, out)
    click.echo(f"{len(pairs)} ground-truth pairs", err=True)


@cli.command("eval")
@click.option("--store", "store_path", envvar="REVREC_STORE", type=click.Path(),
              default=None, help="Store directory [env: REVREC_STORE].")
@_embedder_options
@click.option("--pairs", "pairs_path", type=click.Path(exists=True), default=None,
              help="Ground-truth pairs JSONL (from the ground-truth command).")
@click.option("--labels", "labels_path", type=click.Path(exists=True), default=None,
              help="Relevance labels JSONL.")
@click.option("--profile", "profile_path", type=click.Path(exists=True), default=None,
              help="Precomputed hit-profile JSON; skips ranking.")
@click.option("--n", "n_values", type=int, multiple=True,
              help="Cutoff N; repeatable. Defaults to 1 2 3.")
@click.option("--top-n", type=int, default=3, show_default=True)
@click.option("--out", type=click.Path(), default=None)
def cmd_eval(store_path, backend, dim, endpoint, seed, cache_path,
             pairs_path, labels_path, profile_path, n_values, top_n, out):
    """Compute Acc@N / MRR@N, from a hit profile or the full pipeline."""
    n_values = tuple(n_values) or DEFAULT_N_VALUES
    cfg = _build_run_config(store_path, backend, dim, endpoint, seed, cache_path,
                            top_n=top_n, n_values=n_values, out=out)
    if profile_path:
        raw = json.loads(Path(profile_path).read_text(encoding="utf-8"))
        profile = HitProfile(
            length=raw["length"],
            hit_ranks={int(k): int(v) for k, v in raw["hit_ranks"].items()},
        )
        report = report_from_profile(profile, n_values)
    else:
        if not (store_path and pairs_path and labels_path):
            raise click.UsageError("eval needs --profile, or --store/--pairs/--labels")
        store = load_store(store_path)
        pairs = _load_pairs(pairs_path)
        labels = load_labels(labels_path)
        embedder = Embedder(cfg.embedder)
        report = evaluate_ground_truth(pairs, store, embedder, cfg.match,
                                       n_values, labels)
        embedder.close()
    click.echo(report.to_table())
    if out:
        Path(out).write_text(
            manifest_line(cfg, "eval") + "\n" + report.to_json() + "\n",
            encoding="utf-8")


@cli.command("overlap")
@_store_option
@click.option("--k", "k_values", type=int, multiple=True,
              help="Top-K size; repeatable. Defaults to 100..1000.")
@click.option("--apps", "app_ids", multiple=True,
              help="Apps to compare; defaults to all registered apps.")
@click.option("--out", type=click.Path(), default=None, help="CSV output path.")
def cmd_overlap(store_path, k_values, app_ids, out):
    """Pairwise Top-K frequent-word overlap of bug-report corpora."""
    k_values = tuple(k_values) or DEFAULT_K_VALUES
    store = load_store(store_path)
    app_ids = tuple(app_ids) or tuple(sorted(store.apps))
    matrix = overlap_matrix(store, app_ids, k_values)
    if out:
        matrix.to_csv(out)
        click.echo(f"overlap matrix written to {out}", err=True)
    else:
        for x in app_ids:
            for y in app_ids:
                if x == y:
                    continue
                row = "  ".join(
                    f"K={k}:{matrix.cells[(x, y, k)]:.4f}" for k in k_values)
                click.echo(f"{x} vs {y}  {row}")


@cli.command("stats")
@_store_option
@click.option("--recommendations", "recs_path", type=click.Path(exists=True),
              required=True, help="Recommendation JSONL from the recommend command.")
@click.option("--run-date", default=None,
              help="RFC3339 reference instant; defaults to now.")
def cmd_stats(store_path, recs_path, run_date):
    """Lead-time statistics over decided recommendations."""
    from .matcher import Recommendation, ReviewMatch

    store = load_store(store_path)
    run_ts = parse_timestamp(run_date) if run_date else datetime.now(timezone.utc)
    recs = []
    with Path(recs_path).open("r", encoding="utf-8") as fp:
        for line in fp:
            record = json.loads(line)
            if "manifest" in record:
                continue
            recs.append(Recommendation(
                source_app=record["source_app"],
                source_report=record["source_report"],
                target_app=record["target_app"],
                decided=record["decided"],
                matches=tuple(
                    ReviewMatch(review_id=m["review_id"],
                                similarity=m["similarity"], rank=m["rank"])
                    for m in record["matches"]),
                duplicate_of=(
                    None if record["duplicate_of"] is None
                    else (record["duplicate_of"]["report_id"],
                          record["duplicate_of"]["similarity"])),
            ))
    stats = lead_time_stats(recs, store, run_ts)
    click.echo(json.dumps(
        {"mean_days": stats["mean_days"], "median_days": stats["median_days"],
         "items": len(stats["per_item"])}, indent=2))


def _load_pairs(path) -> list[GroundTruthPair]:
    pairs = []
    with Path(path).open("r", encoding="utf-8") as fp:
        for line in fp:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if "manifest" in record:
                continue
            pairs.append(GroundTruthPair(
                report_a=tuple(record["report_a"]),
                report_b=tuple(record["report_b"]),
                pair_similarity=record["pair_similarity"],
            ))
    return pairs


def _write_lines(lines, out) -> None:
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


def main(argv=None) -> int:
    """Entry point with spec'd exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except (click.UsageError, ValueError) as exc:
        click.echo(f"config error: {exc}", err=True)
        return 1
    except SidecarUnavailable as exc:
        click.echo(f"backend unavailable: {exc}", err=True)
        return 3
    except (RevrecError, OSError) as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
