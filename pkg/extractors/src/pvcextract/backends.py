"""Model backends behind configuration-string identifiers.

Model choices are configuration, not code: an identifier like
``builtin:fbank-stats`` or ``speechbrain:spkrec-ecapa-voxceleb`` selects a
backend at run time, and any compatible model may be substituted. The
``builtin:*`` backends are deterministic pure-numpy implementations with
no ML runtime, so extraction works offline and repeat runs are
bit-identical; the pretrained wrappers raise ModelLoadError when their
runtime or checkpoint is unavailable.
"""

from __future__ import annotations

import numpy as np

from .errors import ModelLoadError

DEFAULT_EMBEDDING_MODEL = "builtin:fbank-stats"
DEFAULT_RECOGNIZER = "builtin:band-peak"
DEFAULT_G2P = "builtin:letter-map"

_FRAME = 512
_HOP = 256


def _frame_power(samples: np.ndarray, rate: int, n_bands: int) -> np.ndarray:
    """frames x bands log-spaced band powers of Hann-windowed frames."""
    if samples.size < _FRAME:
        samples = np.pad(samples, (0, _FRAME - samples.size))
    n_frames = 1 + (samples.size - _FRAME) // _HOP
    idx = _HOP * np.arange(n_frames)[:, None] + np.arange(_FRAME)[None, :]
    window = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(_FRAME) / _FRAME)
    spec = np.abs(np.fft.rfft(samples[idx] * window, axis=1)) ** 2
    freqs = np.arange(spec.shape[1]) * rate / _FRAME
    edges = np.geomspace(100.0, min(rate / 2, 8000.0), n_bands + 1)
    bands = np.zeros((n_frames, n_bands))
    for b in range(n_bands):
        mask = (freqs >= edges[b]) & (freqs < edges[b + 1])
        bands[:, b] = spec[:, mask].sum(axis=1)
    return bands


def _fbank_stats_embedding(samples: np.ndarray, rate: int) -> np.ndarray:
    """Deterministic spectral-statistics voiceprint, dim 48, unit norm."""
    bands = _frame_power(samples, rate, n_bands=24)
    log_bands = np.log10(bands + 1e-10)
    vector = np.concatenate([log_bands.mean(axis=0), log_bands.std(axis=0)])
    norm = np.linalg.norm(vector)
    return vector / norm if norm > 0 else vector


def _band_peak_recognizer(samples: np.ndarray, rate: int) -> list[str]:
    """Pseudo-phoneme decoder: per-frame dominant band, repeats collapsed,
    low-energy frames treated as silence."""
    bands = _frame_power(samples, rate, n_bands=8)
    energy = bands.sum(axis=1)
    if energy.max() <= 0.0:
        return []
    voiced = energy > energy.max() * 1e-4
    peaks = bands.argmax(axis=1)
    tokens = []
    previous = None
    for frame_voiced, peak in zip(voiced, peaks):
        if not frame_voiced:
            previous = None
            continue
        token = f"p{peak}"
        if token != previous:
            tokens.append(token)
        previous = token
    return tokens


_LETTER_MAP = {
    "a": "aa", "b": "b", "c": "k", "d": "d", "e": "eh", "f": "f", "g": "gh",
    "h": "h", "i": "ih", "j": "y", "k": "k", "l": "l", "m": "m", "n": "n",
    "o": "oh", "p": "p", "q": "k", "r": "r", "s": "s", "t": "t", "u": "uh",
    "v": "v", "w": "w", "x": "ks", "y": "ey", "z": "z",
}


def _letter_map_g2p(text: str) -> list[str]:
    """Rule-lookup phonemization: one token per alphabetic character."""
    return [_LETTER_MAP[ch] for ch in text.lower() if ch in _LETTER_MAP]


def _speechbrain_embedder(source: str):
    try:
        from speechbrain.inference.speaker import EncoderClassifier
    except ImportError as exc:
        raise ModelLoadError(f"speechbrain runtime not installed (model {source!r})") from exc

    try:
        model = EncoderClassifier.from_hparams(source=source, run_opts={"device": "cpu"})
    except Exception as exc:
        raise ModelLoadError(f"cannot load speaker model {source!r}: {exc}") from exc

    def embed(samples, rate):
        import torch

        with torch.no_grad():
            emb = model.encode_batch(torch.as_tensor(samples, dtype=torch.float32)[None, :])
        return emb.squeeze().numpy().astype(np.float64)

    return embed


def _hf_ctc_recognizer(checkpoint: str):
    try:
        from transformers import AutoModelForCTC, AutoProcessor
    except ImportError as exc:
        raise ModelLoadError(f"transformers runtime not installed (model {checkpoint!r})") from exc

    try:
        processor = AutoProcessor.from_pretrained(checkpoint)
        model = AutoModelForCTC.from_pretrained(checkpoint)
    except Exception as exc:
        raise ModelLoadError(f"cannot load recognizer {checkpoint!r}: {exc}") from exc

    def recognize(samples, rate):
        import torch

        inputs = processor(samples, sampling_rate=rate, return_tensors="pt")
        with torch.no_grad():
            logits = model(**inputs).logits
        ids = torch.argmax(logits, dim=-1)
        return processor.batch_decode(ids)[0].split()

    return recognize


def _phonemizer_g2p(language: str):
    try:
        from phonemizer import phonemize
    except ImportError as exc:
        raise ModelLoadError(f"phonemizer not installed (language {language!r})") from exc

    def g2p(text):
        return phonemize(text, language=language).split()

    return g2p


def embedding_backend(model_id: str):
    """Resolve an embedding model identifier to a (samples, rate) -> vector callable."""
    if not model_id:
        raise ModelLoadError("empty embedding model identifier")
    if model_id == "builtin:fbank-stats":
        return _fbank_stats_embedding
    if model_id.startswith("speechbrain:"):
        return _speechbrain_embedder(model_id.split(":", 1)[1])
    raise ModelLoadError(f"unknown embedding model {model_id!r}")


def recognizer_backend(model_id: str):
    """Resolve a phoneme-recognizer identifier to a (samples, rate) -> tokens callable."""
    if not model_id:
        raise ModelLoadError("empty recognizer identifier")
    if model_id == "builtin:band-peak":
        return _band_peak_recognizer
    if model_id.startswith("hf:"):
        return _hf_ctc_recognizer(model_id.split(":", 1)[1])
    raise ModelLoadError(f"unknown recognizer {model_id!r}")


def g2p_backend(model_id: str):
    """Resolve a grapheme-to-phoneme identifier to a text -> tokens callable."""
    if not model_id:
        raise ModelLoadError("empty g2p identifier")
    if model_id == "builtin:letter-map":
        return _letter_map_g2p
    if model_id.startswith("phonemizer:"):
        return _phonemizer_g2p(model_id.split(":", 1)[1])
    raise ModelLoadError(f"unknown g2p tool {model_id!r}")
