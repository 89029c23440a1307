"""Embedding sidecar: a small server exposing a text encoder over
newline-delimited JSON."""

__version__ = "0.1.0"

from .encoder import CharGramEncoder, load_encoder
from .server import SidecarConfig, serve

__all__ = ["CharGramEncoder", "SidecarConfig", "load_encoder", "serve"]
