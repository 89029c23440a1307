"""Text normalization and Top-K frequent-word analysis.

Run: python3 demos/01_text_cleaning_and_frequent_words.py
"""

from revrec import clean_for_analysis, clean_for_embedding, top_k_frequent
from revrec.metrics import overlap_rate

raw = "Sooooo ANNOYING!!! The app app keeps crashing :( 100% of the time..."
ct = clean_for_embedding(raw)
print("raw:     ", raw)
print("embed:   ", ct.cleaned, f"({ct.token_count} tokens)")
print("analysis:", clean_for_analysis(raw))

browser_a = [
    "browser crashes when opening large pdf files",
    "dark mode does not apply to the settings page",
    "sync with qr code fails on second device",
    "crashes after the latest update on android",
]
browser_b = [
    "app crashed while loading a pdf document",
    "dark theme missing from settings",
    "qr code sync is broken again",
    "tabs crash constantly since updating",
]
photo_app = [
    "filters wash out skin tones",
    "exported photos lose resolution",
    "collage layout misaligns portrait shots",
    "watermark appears even after purchase",
]

top_a = top_k_frequent(browser_a, 10)
print("\nTop-10 words of browser A:", top_a.words)
print("same-category overlap: ", overlap_rate(top_a, top_k_frequent(browser_b, 10)))
print("cross-category overlap:", overlap_rate(top_a, top_k_frequent(photo_app, 10)))
