"""Extractor adapters emitting the evaluation toolkit's interchange files."""

__version__ = "0.1.0"

from .backends import embedding_backend, g2p_backend, recognizer_backend
from .errors import AudioError, ExtractError, ManifestError, MissingText, ModelLoadError
from .extract import ExtractionJob, extract_embeddings, extract_phonemes
