"""Batch extraction jobs: corpus in, interchange files out."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .backends import (
    DEFAULT_EMBEDDING_MODEL,
    DEFAULT_G2P,
    DEFAULT_RECOGNIZER,
    embedding_backend,
    g2p_backend,
    recognizer_backend,
)
from .corpus_io import atomic_write_lines, load_corpus, read_pcm16_wav
from .errors import ManifestError, MissingText


@dataclass
class ExtractionJob:
    manifest: str
    corpus_root: str | None = None
    embedding_model: str = DEFAULT_EMBEDDING_MODEL
    recognizer: str = DEFAULT_RECOGNIZER
    g2p: str = DEFAULT_G2P
    embeddings_out: str | None = None
    phonemes_out: str | None = None


def extract_embeddings(job: ExtractionJob) -> str:
    """One embedding record per utterance; dimension constant across the file."""
    embed = embedding_backend(job.embedding_model)
    corpus = load_corpus(job.manifest, job.corpus_root)
    lines = []
    dim = None
    for utt in corpus.utterances:
        samples, rate = read_pcm16_wav(corpus.root / utt.path)
        vector = embed(samples, rate)
        if dim is None:
            dim = len(vector)
        elif len(vector) != dim:
            raise ManifestError(
                f"{utt.utterance_id}: model produced dim {len(vector)}, expected {dim}"
            )
        lines.append(
            json.dumps(
                {
                    "id": utt.utterance_id,
                    "speaker_id": utt.speaker_id,
                    "stage": utt.stage,
                    "utterance_id": utt.utterance_id,
                    "dim": len(vector),
                    "values": [float(v) for v in vector],
                }
            )
        )
    atomic_write_lines(job.embeddings_out, lines)
    return job.embeddings_out


def extract_phonemes(job: ExtractionJob) -> str:
    """Per utterance: ref tokens from text phonemization, hyp from the recognizer."""
    recognize = recognizer_backend(job.recognizer)
    g2p = g2p_backend(job.g2p)
    corpus = load_corpus(job.manifest, job.corpus_root)
    lines = []
    for utt in corpus.utterances:
        text = corpus.sentence_texts.get(utt.sentence)
        if not text:
            raise MissingText(f"{utt.utterance_id}: no text for sentence {utt.sentence!r}")
        samples, rate = read_pcm16_wav(corpus.root / utt.path)
        lines.append(
            json.dumps(
                {
                    "utterance_id": utt.utterance_id,
                    "ref": g2p(text),
                    "hyp": recognize(samples, rate),
                },
                ensure_ascii=False,
            )
        )
    atomic_write_lines(job.phonemes_out, lines)
    return job.phonemes_out
