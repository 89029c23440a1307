"""Deterministic hash embeddings and cosine similarity.

Run: python3 demos/02_embeddings_and_similarity.py
"""

from revrec import Embedder, EmbedderConfig, cosine

embedder = Embedder(EmbedderConfig(backend="hash", dim=256, seed=42))

texts = [
    "browser crashes when opening large pdf files",
    "browser crashes when opening large pdf files quickly",
    "great wallpaper colors",
]
vectors = embedder.embed_many(texts)

print("dim:", vectors[0].values.size)
print("near-duplicate similarity:", round(cosine(vectors[0], vectors[1]), 6))
print("unrelated similarity:     ", round(cosine(vectors[0], vectors[2]), 6))

# Same text always embeds identically, across runs and platforms.
again = embedder.embed(texts[0])
print("deterministic:", bool((again.values == vectors[0].values).all()))
