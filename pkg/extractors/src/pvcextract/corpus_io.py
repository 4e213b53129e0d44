"""Read side of the evaluation toolkit's interchange contracts.

The extractors couple to the evaluation toolkit only through its file
formats: the versioned JSON manifest and 16-bit mono PCM WAV audio in,
JSONL embedding/transcript records out. This module implements the read
side independently so the packages stay decoupled.
"""

from __future__ import annotations

import json
import os
import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AudioError, ManifestError

ENV_CORPUS_ROOT = "PVCEVAL_CORPUS_ROOT"


@dataclass
class Utterance:
    utterance_id: str
    speaker_id: str
    stage: str
    sentence: str
    path: str


@dataclass
class Corpus:
    utterances: list
    sentence_texts: dict = field(default_factory=dict)
    root: Path = Path(".")


def load_corpus(manifest_path, corpus_root=None) -> Corpus:
    """Parse the manifest's utterance inventory and optional sentence texts.

    Utterance ids follow SPEAKER_STAGE_SENTENCE. Duplicate ids abort before
    any extraction runs.
    """
    try:
        doc = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{manifest_path}: {exc}") from exc
    if doc.get("format_version") != 1:
        raise ManifestError(f"{manifest_path}: unsupported format_version")

    utterances = []
    seen = set()
    for i, utt in enumerate(doc.get("utterances", [])):
        try:
            record = Utterance(
                utterance_id=f"{utt['speaker']}_{utt['stage']}_{utt['sentence']}",
                speaker_id=utt["speaker"],
                stage=utt["stage"],
                sentence=utt["sentence"],
                path=utt["path"],
            )
        except (KeyError, TypeError) as exc:
            raise ManifestError(f"{manifest_path}: utterances[{i}] missing field {exc}") from exc
        if record.utterance_id in seen:
            raise ManifestError(
                f"{manifest_path}: duplicate utterance id {record.utterance_id!r}"
            )
        seen.add(record.utterance_id)
        utterances.append(record)
    utterances.sort(key=lambda u: u.utterance_id)

    if corpus_root:
        root = Path(corpus_root)
    elif os.environ.get(ENV_CORPUS_ROOT):
        root = Path(os.environ[ENV_CORPUS_ROOT])
    else:
        root = Path(manifest_path).resolve().parent
        declared = doc.get("corpus_root", "")
        if declared:
            root = Path(declared) if os.path.isabs(declared) else root / declared

    return Corpus(
        utterances=utterances,
        sentence_texts=dict(doc.get("sentence_texts", {})),
        root=root,
    )


def read_pcm16_wav(path) -> tuple[np.ndarray, int]:
    """16-bit mono PCM WAV -> (samples in [-1, 1), rate)."""
    try:
        with wave.open(str(path), "rb") as wav:
            if wav.getnchannels() != 1 or wav.getsampwidth() != 2 or wav.getcomptype() != "NONE":
                raise AudioError(f"{path}: expected 16-bit mono PCM")
            rate = wav.getframerate()
            payload = wav.readframes(wav.getnframes())
    except (wave.Error, EOFError, FileNotFoundError, OSError) as exc:
        raise AudioError(f"{path}: {exc}") from exc
    samples = np.frombuffer(payload, dtype="<i2").astype(np.float64) / 32768.0
    return samples, rate


def atomic_write_lines(path, lines) -> None:
    """Write then rename, so readers never observe a half-written file."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    tmp.replace(path)
