"""Phoneme error rate from externally produced reference/hypothesis transcripts.

Tokens are opaque strings compared by equality; PER is
100 * (S + D + I) / N and can exceed 100% when the hypothesis is longer
than the reference. Per-speaker PER pools edit counts over utterances
(length-weighted); table averages are unweighted means across speakers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from .errors import (
    EmptyInput,
    EmptyReference,
    MissingTranscripts,
    ParseError,
    SpeakerSetMismatch,
)


@dataclass(frozen=True)
class PhonemeSequence:
    """Ordered phoneme tokens for one utterance."""

    utterance_id: str
    symbols: tuple

    def __post_init__(self):
        symbols = tuple(self.symbols)
        for tok in symbols:
            if not tok or any(ch.isspace() for ch in tok):
                raise ValueError(f"bad phoneme token {tok!r} in {self.utterance_id}")
        object.__setattr__(self, "symbols", symbols)

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True)
class EditSummary:
    substitutions: int
    deletions: int
    insertions: int
    reference_length: int

    @property
    def per(self) -> float:
        return 100.0 * (self.substitutions + self.deletions + self.insertions) / self.reference_length


def edit_align(reference: PhonemeSequence, hypothesis: PhonemeSequence) -> EditSummary:
    """Minimal-cost Levenshtein alignment with unit costs.

    Among minimal alignments the backtrace prefers substitution over
    insertion over deletion, so the (S, D, I) split is deterministic.
    """
    ref = reference.symbols
    hyp = hypothesis.symbols
    n, m = len(ref), len(hyp)
    if n == 0:
        raise EmptyReference(f"reference {reference.utterance_id!r} is empty")

    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dist[i][0] = i
    for j in range(1, m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        row = dist[i]
        prev = dist[i - 1]
        ri = ref[i - 1]
        for j in range(1, m + 1):
            sub = prev[j - 1] + (ri != hyp[j - 1])
            ins = row[j - 1] + 1
            dele = prev[j] + 1
            row[j] = sub if sub <= ins else ins
            if dele < row[j]:
                row[j] = dele

    subs = dels = inss = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dist[i][j] == dist[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]):
            if ref[i - 1] != hyp[j - 1]:
                subs += 1
            i -= 1
            j -= 1
        elif j > 0 and dist[i][j] == dist[i][j - 1] + 1:
            inss += 1
            j -= 1
        else:
            dels += 1
            i -= 1
    return EditSummary(subs, dels, inss, n)


def per_speaker(pairs: Sequence[tuple[PhonemeSequence, PhonemeSequence]]) -> float:
    """Pooled PER over one speaker's utterances: 100*(sum S+D+I)/(sum N)."""
    if not pairs:
        raise EmptyInput("no utterance pairs")
    total_edits = 0
    total_ref = 0
    for ref, hyp in pairs:
        summary = edit_align(ref, hyp)
        total_edits += summary.substitutions + summary.deletions + summary.insertions
        total_ref += summary.reference_length
    return 100.0 * total_edits / total_ref


def per_table(per_system: dict[str, dict[str, float]]) -> dict[str, dict[str, float]]:
    """Add an unweighted 'Average' row to per-speaker PER columns.

    ``per_system`` maps system name -> {speaker: PER}. Every system must
    cover the same speaker set.
    """
    if not per_system:
        raise EmptyInput("no systems")
    speaker_sets = {name: frozenset(col) for name, col in per_system.items()}
    reference_set = next(iter(speaker_sets.values()))
    for name, speakers in speaker_sets.items():
        if speakers != reference_set:
            raise SpeakerSetMismatch(
                f"system {name!r} covers {sorted(speakers)}, expected {sorted(reference_set)}"
            )
    table = {}
    for name, col in per_system.items():
        out = dict(col)
        out["Average"] = sum(col.values()) / len(col)
        table[name] = out
    return table


def read_transcripts(path) -> list[tuple[PhonemeSequence, PhonemeSequence]]:
    """Read the line-per-utterance transcript interchange file.

    Each line is a JSON object with fields ``utterance_id``, ``ref`` and
    ``hyp`` (token lists). The hypothesis may be empty; the reference may not.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except FileNotFoundError as exc:
        raise MissingTranscripts(str(path)) from exc
    pairs = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            utt = rec["utterance_id"]
            ref = PhonemeSequence(utt, tuple(rec["ref"]))
            hyp = PhonemeSequence(utt, tuple(rec["hyp"]))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
        if len(ref) == 0:
            raise ParseError(f"{path}:{lineno}: empty reference for {utt!r}")
        pairs.append((ref, hyp))
    return pairs


def write_transcripts(path, pairs: Sequence[tuple[PhonemeSequence, PhonemeSequence]]) -> None:
    """Inverse of read_transcripts (used by tests and extractor tooling)."""
    with open(path, "w", encoding="utf-8") as fh:
        for ref, hyp in pairs:
            fh.write(
                json.dumps(
                    {"utterance_id": ref.utterance_id, "ref": list(ref.symbols), "hyp": list(hyp.symbols)},
                    ensure_ascii=False,
                )
                + "\n"
            )
