"""Embedding backends, cosine similarity, and a content-addressed cache.

The hash backend is a deterministic feature-hashing embedder used for
tests and offline runs; the sidecar backend talks newline-delimited JSON
to an external embedding server over TCP or stdio.
"""

from __future__ import annotations

import hashlib
import json
import socket
import struct
import subprocess
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyTextEmbedding,
    SidecarUnavailable,
    ZeroVector,
)
from .textprep import clean_for_embedding

NORM_TOLERANCE = 1e-5
SIDECAR_MAX_BATCH = 64


class EmbeddingVector:
    """A fixed-dimension L2-normalized float32 vector with a content hash."""

    __slots__ = ("values", "source_hash")

    def __init__(self, values: np.ndarray, source_hash: bytes):
        values = np.asarray(values, dtype=np.float32)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("values must be a non-empty 1-D array")
        if not np.all(np.isfinite(values)):
            raise ValueError("vector contains NaN or Inf")
        norm = float(np.linalg.norm(values.astype(np.float64)))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise ValueError(f"vector is not unit-norm: |v| = {norm}")
        self.values = values
        self.values.setflags(write=False)
        self.source_hash = source_hash

    @property
    def dim(self) -> int:
        return int(self.values.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingVector):
            return NotImplemented
        return self.source_hash == other.source_hash and np.array_equal(
            self.values, other.values
        )

    def __repr__(self) -> str:
        return f"EmbeddingVector(dim={self.dim}, hash={self.source_hash.hex()[:12]})"


@dataclass(frozen=True)
class EmbedderConfig:
    backend: str = "hash"  # "hash" or "sidecar"
    dim: int = 256
    endpoint: str = ""
    cache_path: str | Path | None = None
    seed: int = 42

    def __post_init__(self):
        if self.backend not in ("hash", "sidecar"):
            raise ValueError(f"unknown backend: {self.backend!r}")
        if self.backend == "hash" and self.dim < 8:
            raise ValueError("hash backend needs dim >= 8")
        if self.backend == "sidecar" and not self.endpoint:
            raise ValueError("sidecar backend needs an endpoint")


def text_key(backend_id: str, dim: int, seed: int, cleaned: str) -> bytes:
    """32-byte cache key: hash of (backend id, dim, seed, cleaned text)."""
    h = hashlib.sha256()
    h.update(f"{backend_id}:{dim}:{seed}:".encode("utf-8"))
    h.update(cleaned.encode("utf-8"))
    return h.digest()


def hash_embed(tokens: Sequence[str], dim: int, seed: int = 42) -> np.ndarray:
    """Deterministic feature-hashing embedding, L2-normalized float32.

    Each token maps to a (bucket, sign) pair via a seeded hash; token
    vectors are summed and the result normalized. Texts sharing tokens
    point in similar directions; disjoint vocabularies are near-orthogonal.
    """
    if not tokens:
        raise EmptyTextEmbedding("cannot embed an empty token list")
    for salt in range(8):
        vec = np.zeros(dim, dtype=np.float64)
        for token in tokens:
            digest = hashlib.blake2b(
                token.encode("utf-8"), digest_size=16, key=struct.pack("<qq", seed, salt)
            ).digest()
            idx = int.from_bytes(digest[:8], "little") % dim
            sign = 1.0 if digest[8] & 1 else -1.0
            vec[idx] += sign
        norm = np.linalg.norm(vec)
        if norm > 0:
            return (vec / norm).astype(np.float32)
    raise EmptyTextEmbedding("token signs cancelled at every salt")  # pragma: no cover


def cosine(a, b) -> float:
    """Cosine similarity in [-1, 1]; accumulation in float64."""
    av = a.values if isinstance(a, EmbeddingVector) else np.asarray(a, dtype=np.float64)
    bv = b.values if isinstance(b, EmbeddingVector) else np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape:
        raise DimensionMismatch(f"dim {av.shape} vs {bv.shape}")
    av = av.astype(np.float64)
    bv = bv.astype(np.float64)
    na = np.linalg.norm(av)
    nb = np.linalg.norm(bv)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine is undefined for a zero vector")
    return float(np.dot(av, bv) / (na * nb))


class EmbeddingCache:
    """Append-only binary cache file of (key, vector) records.

    Record layout: 32-byte key, u32 little-endian dim, dim float32
    little-endian payload. Loaded fully on open; unit norm re-checked on
    every load. Single-writer, any number of readers.
    """

    _HEADER = struct.Struct("<32sI")

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._entries: dict[bytes, np.ndarray] = {}
        if self.path.exists():
            self._load()
        self._fp = self.path.open("ab")

    def _load(self) -> None:
        data = self.path.read_bytes()
        offset = 0
        while offset < len(data):
            if offset + self._HEADER.size > len(data):
                raise ValueError(f"truncated cache record in {self.path}")
            key, dim = self._HEADER.unpack_from(data, offset)
            offset += self._HEADER.size
            payload = dim * 4
            if offset + payload > len(data):
                raise ValueError(f"truncated cache payload in {self.path}")
            vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).copy()
            offset += payload
            norm = float(np.linalg.norm(vec.astype(np.float64)))
            if abs(norm - 1.0) > NORM_TOLERANCE:
                raise ValueError(f"non-unit cached vector for key {key.hex()[:12]}")
            self._entries[key] = vec
        self._size = len(self._entries)

    def get(self, key: bytes) -> np.ndarray | None:
        return self._entries.get(key)

    def put(self, key: bytes, vec: np.ndarray) -> None:
        if key in self._entries:
            return
        vec = np.asarray(vec, dtype="<f4")
        self._entries[key] = vec
        self._fp.write(self._HEADER.pack(key, vec.size))
        self._fp.write(vec.tobytes())
        self._fp.flush()

    def close(self) -> None:
        self._fp.close()

    def __len__(self) -> int:
        return len(self._entries)


class SidecarClient:
    """Newline-delimited JSON client for the embedding sidecar.

    Endpoint forms: "host:port" for TCP, or "stdio:<command line>" to
    spawn the server as a child process and talk over its stdio.
    """

    def __init__(self, endpoint: str):
        self.endpoint = endpoint
        self._next_id = 0
        self._proc: subprocess.Popen | None = None
        self._reader = None
        self._writer = None
        try:
            if endpoint.startswith("stdio:"):
                self._proc = subprocess.Popen(
                    endpoint[len("stdio:") :].split(),
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                )
                self._reader = self._proc.stdout
                self._writer = self._proc.stdin
            else:
                host, _, port = endpoint.rpartition(":")
                sock = socket.create_connection((host, int(port)), timeout=30)
                self._sock = sock
                self._reader = sock.makefile("rb")
                self._writer = sock.makefile("wb")
        except (OSError, ValueError) as exc:
            raise SidecarUnavailable(f"cannot reach sidecar at {endpoint}: {exc}") from exc

    def embed_batch(self, texts: Sequence[str]) -> list[list[float]]:
        if len(texts) > SIDECAR_MAX_BATCH:
            raise ValueError(f"batch too large: {len(texts)} > {SIDECAR_MAX_BATCH}")
        self._next_id += 1
        request = {"id": self._next_id, "op": "embed", "texts": list(texts)}
        try:
            self._writer.write((json.dumps(request) + "\n").encode("utf-8"))
            self._writer.flush()
            line = self._reader.readline()
        except (OSError, ValueError) as exc:
            raise SidecarUnavailable(f"sidecar transport failure: {exc}") from exc
        if not line:
            raise SidecarUnavailable("sidecar closed the connection")
        response = json.loads(line)
        if response.get("id") != self._next_id:
            raise SidecarUnavailable(
                f"response id {response.get('id')} does not match request {self._next_id}"
            )
        if "error" in response:
            raise SidecarUnavailable(f"sidecar error: {response['error']}")
        dim = response["dim"]
        vectors = response["vectors"]
        for vec in vectors:
            if len(vec) != dim:
                raise DimensionMismatch(
                    f"sidecar returned length {len(vec)}, declared dim {dim}"
                )
        return vectors

    def close(self) -> None:
        if self._proc is not None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)
        elif getattr(self, "_sock", None) is not None:
            self._sock.close()


class Embedder:
    """Backend-agnostic embedding entry point with optional caching."""

    def __init__(self, cfg: EmbedderConfig):
        self.cfg = cfg
        self.backend_calls = 0  # backend invocations, for cache tests
        self._cache = EmbeddingCache(cfg.cache_path) if cfg.cache_path else None
        self._sidecar: SidecarClient | None = None
        self._sidecar_dim: int | None = None

    def embed(self, text: str) -> EmbeddingVector:
        return self.embed_many([text])[0]

    def embed_many(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        """Embed texts in order; raises with the failing index attached."""
        cleaned: list[str] = []
        for i, text in enumerate(texts):
            ct = clean_for_embedding(text)
            if ct.token_count == 0:
                raise EmptyTextEmbedding(
                    f"text at index {i} cleans to zero tokens", index=i
                )
            cleaned.append(ct.cleaned)

        out: list[EmbeddingVector | None] = [None] * len(texts)
        pending: list[int] = []
        keys = [
            text_key(self.cfg.backend, self.cfg.dim, self.cfg.seed, c) for c in cleaned
        ]
        for i, key in enumerate(keys):
            hit = self._cache.get(key) if self._cache else None
            if hit is not None:
                out[i] = EmbeddingVector(hit, key)
            else:
                pending.append(i)

        if self.cfg.backend == "hash":
            computed: dict[str, np.ndarray] = {}
            for i in pending:
                vec = computed.get(cleaned[i])
                if vec is None:
                    self.backend_calls += 1
                    vec = hash_embed(cleaned[i].split(), self.cfg.dim, self.cfg.seed)
                    computed[cleaned[i]] = vec
                out[i] = EmbeddingVector(vec, keys[i])
                if self._cache:
                    self._cache.put(keys[i], out[i].values)
        else:
            self._embed_sidecar(pending, cleaned, keys, out)
        return out  # type: ignore[return-value]

    def _embed_sidecar(self, pending, cleaned, keys, out) -> None:
        if self._sidecar is None:
            self._sidecar = SidecarClient(self.cfg.endpoint)
        # dedupe within the batch so the backend sees each text once
        unique: dict[str, list[int]] = {}
        for i in pending:
            unique.setdefault(cleaned[i], []).append(i)
        texts = list(unique)
        for start in range(0, len(texts), SIDECAR_MAX_BATCH):
            batch = texts[start : start + SIDECAR_MAX_BATCH]
            self.backend_calls += 1
            vectors = self._sidecar.embed_batch(batch)
            if len(vectors) != len(batch):
                raise SidecarUnavailable(
                    f"sidecar returned {len(vectors)} vectors for {len(batch)} texts"
                )
            for text, raw in zip(batch, vectors):
                vec = np.asarray(raw, dtype=np.float64)
                if self._sidecar_dim is None:
                    self._sidecar_dim = vec.size
                elif vec.size != self._sidecar_dim:
                    raise DimensionMismatch(
                        f"sidecar dim changed from {self._sidecar_dim} to {vec.size}"
                    )
                norm = np.linalg.norm(vec)
                if norm == 0:
                    raise ZeroVector("sidecar returned a zero vector")
                unit = (vec / norm).astype(np.float32)
                for i in unique[text]:
                    out[i] = EmbeddingVector(unit, keys[i])
                    if self._cache:
                        self._cache.put(keys[i], unit)

    def close(self) -> None:
        if self._cache:
            self._cache.close()
        if self._sidecar:
            self._sidecar.close()


def embed_corpus(texts: Iterable[str], cfg: EmbedderConfig) -> list[EmbeddingVector]:
    """Order-preserving batch embedding with the configured backend."""
    embedder = Embedder(cfg)
    try:
        return embedder.embed_many(list(texts))
    finally:
        embedder.close()


def embed(text: str, cfg: EmbedderConfig) -> EmbeddingVector:
    return embed_corpus([text], cfg)[0]
