"""Using the embedding sidecar as a backend over stdio.

The sidecar is a separate package (sidecar/) serving embeddings over
newline-delimited JSON. Here it is spawned with the built-in offline test
encoder; with model weights available you would pass a transformer model
name instead.

Run: python3 demos/05_sidecar_backend.py   (requires embed-sidecar installed)
"""

import sys

from revrec import Embedder, EmbedderConfig, cosine

endpoint = f"stdio:{sys.executable} -m embed_sidecar --model char-gram-test"
embedder = Embedder(EmbedderConfig(backend="sidecar", endpoint=endpoint))

a, b, c = embedder.embed_many(
    [
        "app crashes on startup",
        "application crashed when opening",
        "great wallpaper colors",
    ]
)
print("dim:", a.values.size)
print("paraphrase similarity:", round(cosine(a, b), 4))
print("unrelated similarity: ", round(cosine(a, c), 4))
