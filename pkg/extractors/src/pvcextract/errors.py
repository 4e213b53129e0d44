class ExtractError(Exception):
    """Base class for extractor errors."""


class ModelLoadError(ExtractError):
    """Requested model identifier cannot be resolved or loaded."""


class AudioError(ExtractError):
    """Corpus audio missing or unreadable."""


class MissingText(ExtractError):
    """Manifest carries no text for a sentence that needs phonemization."""


class ManifestError(ExtractError):
    """Manifest unreadable or violating the interchange schema."""
