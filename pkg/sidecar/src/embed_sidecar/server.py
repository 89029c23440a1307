"""Newline-delimited JSON embedding server.

Wire protocol (one JSON object per line):

    request:  {"id": int, "op": "embed", "texts": [str, ...]}
    response: {"id": int, "dim": int, "vectors": [[float, ...], ...]}
          or  {"id": int, "error": str}

Transports: a local TCP socket ("host:port") or the process's own
stdin/stdout ("stdio") for environments without open ports. A single
inference worker serves requests FIFO; response ids disambiguate
interleaving across connections.
"""

from __future__ import annotations

import argparse
import json
import socketserver
import sys
import threading
from dataclasses import dataclass

from .encoder import Encoder, ModelLoadError, load_encoder

DEFAULT_MODEL = "distilbert-base-uncased"
DEFAULT_MAX_BATCH = 64


@dataclass(frozen=True)
class SidecarConfig:
    model_name: str = DEFAULT_MODEL
    max_batch: int = DEFAULT_MAX_BATCH
    listen: str = "stdio"

    def __post_init__(self):
        if self.max_batch < 1:
            raise ValueError(f"max_batch must be >= 1, got {self.max_batch}")
        if not self.model_name:
            raise ValueError("model_name must be non-empty")
        if not self.listen:
            raise ValueError('listen must be "stdio" or "host:port"')


def handle_request(raw: str, encoder: Encoder, max_batch: int) -> dict:
    """Turn one request line into one response object (never raises)."""
    request_id = None
    try:
        request = json.loads(raw)
        if not isinstance(request, dict):
            raise ValueError("request must be a JSON object")
        request_id = request.get("id")
        if request.get("op") != "embed":
            raise ValueError(f"unknown op: {request.get('op')!r}")
        texts = request.get("texts")
        if not isinstance(texts, list) or not all(
            isinstance(t, str) for t in texts
        ):
            raise ValueError("texts must be a list of strings")
        if not texts:
            raise ValueError("empty batch")
        if len(texts) > max_batch:
            raise ValueError(f"batch too large: {len(texts)} > {max_batch}")
        for i, text in enumerate(texts):
            if not text.strip():
                raise ValueError(f"empty text at index {i}")
        vectors = encoder.encode(texts)
        return {
            "id": request_id,
            "dim": encoder.dim,
            "vectors": vectors.tolist(),
        }
    except Exception as exc:
        return {"id": request_id, "error": str(exc)}


def _serve_stream(reader, writer, encoder: Encoder, max_batch: int, lock) -> None:
    """Read request lines until EOF, answering each with exactly one line."""
    for line in reader:
        line = line.strip()
        if not line:
            continue
        with lock:
            response = handle_request(
                line.decode("utf-8", errors="replace"), encoder, max_batch
            )
        writer.write((json.dumps(response) + "\n").encode("utf-8"))
        writer.flush()


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        _serve_stream(
            self.rfile,
            self.wfile,
            self.server.encoder,
            self.server.max_batch,
            self.server.inference_lock,
        )


class SidecarTCPServer(socketserver.ThreadingTCPServer):
    """Threaded accept loop; encoding is serialized by inference_lock."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: tuple[str, int], encoder: Encoder, max_batch: int):
        super().__init__(address, _Handler)
        self.encoder = encoder
        self.max_batch = max_batch
        self.inference_lock = threading.Lock()


def create_server(cfg: SidecarConfig, encoder: Encoder) -> SidecarTCPServer:
    host, _, port = cfg.listen.rpartition(":")
    return SidecarTCPServer((host, int(port)), encoder, cfg.max_batch)


def serve(cfg: SidecarConfig) -> None:
    """Load the model (refusing to start on failure) and serve forever."""
    encoder = load_encoder(cfg.model_name)
    if cfg.listen == "stdio":
        _serve_stream(
            sys.stdin.buffer,
            sys.stdout.buffer,
            encoder,
            cfg.max_batch,
            threading.Lock(),
        )
    else:
        with create_server(cfg, encoder) as server:
            server.serve_forever()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="embed-sidecar",
        description="Serve text embeddings over newline-delimited JSON.",
    )
    parser.add_argument("--model", default=DEFAULT_MODEL, help="model name or path")
    parser.add_argument(
        "--listen",
        default="stdio",
        help='"stdio" or "host:port" (default: stdio)',
    )
    parser.add_argument("--max-batch", type=int, default=DEFAULT_MAX_BATCH)
    args = parser.parse_args(argv)
    try:
        cfg = SidecarConfig(
            model_name=args.model, max_batch=args.max_batch, listen=args.listen
        )
        serve(cfg)
    except (ModelLoadError, ValueError, OSError) as exc:
        print(f"embed-sidecar: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())
