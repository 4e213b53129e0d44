"""Embedding-similarity distributions and equal error rates.

Quantifies how strongly pathology moves speaker embeddings: same-speaker
pre-operative trials (T1), same-speaker cross-severity trials (T1+T2) and
cross-speaker trials (nontarget) are scored by cosine similarity, and the
separability of target vs nontarget scores is summarized as an EER.
Embeddings are ingested from files; no extractor runs here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyScores,
    MissingEmbeddings,
    ParseError,
    UnknownSpeaker,
    ZeroVector,
)

GROUP_T1 = "T1"
GROUP_T1_T2 = "T1+T2"
GROUP_NONTARGET = "nontarget"

PATHOLOGY_STAGES = ("T1", "T2")


@dataclass(frozen=True)
class EmbeddingRecord:
    id: str
    speaker_id: str
    stage: str  # T1 | T2 | T3 | control | external
    utterance_id: str
    vector: np.ndarray

    def __post_init__(self):
        vector = np.asarray(self.vector, dtype=np.float64)
        if vector.ndim != 1 or vector.size == 0:
            raise ValueError(f"embedding {self.id!r} must be a non-empty vector")
        if not np.all(np.isfinite(vector)):
            raise ValueError(f"embedding {self.id!r} has non-finite components")
        if not np.any(vector):
            raise ValueError(f"embedding {self.id!r} has zero norm")
        vector.setflags(write=False)
        object.__setattr__(self, "vector", vector)

    @property
    def dim(self) -> int:
        return int(self.vector.size)


@dataclass(frozen=True)
class Trial:
    a: str
    b: str
    group: str


@dataclass(frozen=True)
class EerResult:
    eer: float  # percent
    threshold: float
    num_target: int
    num_nontarget: int


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"vector shapes differ: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine similarity undefined for zero-norm vectors")
    return float(np.dot(a, b) / (na * nb))


def build_trials(
    records: Sequence[EmbeddingRecord],
    manifest=None,
    include_all_speakers: bool = False,
) -> list[Trial]:
    """Enumerate the three trial groups over T1/T2 embeddings.

    T1: unordered same-speaker pairs of T1 utterances. T1+T2: same-speaker
    pairs with one utterance per stage. nontarget: unordered cross-speaker
    pairs over all T1/T2 utterances. Control/external records are excluded
    unless ``include_all_speakers`` is set; with a manifest, every record's
    speaker (and stage, for pathological speakers) must be declared.
    """
    if manifest is not None:
        for rec in records:
            speaker = manifest.speaker(rec.speaker_id)
            if speaker is None:
                raise UnknownSpeaker(f"embedding {rec.id!r}: speaker {rec.speaker_id!r} not in manifest")
            if rec.stage in ("T1", "T2", "T3") and rec.stage not in speaker.stages:
                raise UnknownSpeaker(
                    f"embedding {rec.id!r}: {rec.speaker_id} has no stage {rec.stage}"
                )

    pool = [
        r
        for r in records
        if r.stage in PATHOLOGY_STAGES or (include_all_speakers and r.stage in ("control", "external"))
    ]
    trials: list[Trial] = []
    for x, y in combinations(pool, 2):
        if x.speaker_id == y.speaker_id:
            if x.stage == "T1" and y.stage == "T1":
                trials.append(Trial(x.id, y.id, GROUP_T1))
            elif {x.stage, y.stage} == {"T1", "T2"}:
                trials.append(Trial(x.id, y.id, GROUP_T1_T2))
        else:
            trials.append(Trial(x.id, y.id, GROUP_NONTARGET))
    return trials


def score_trials(
    records: Sequence[EmbeddingRecord], trials: Sequence[Trial]
) -> dict[str, list[float]]:
    """Cosine-score every trial, grouped by trial group."""
    by_id = {r.id: r for r in records}
    scores: dict[str, list[float]] = {GROUP_T1: [], GROUP_T1_T2: [], GROUP_NONTARGET: []}
    for trial in trials:
        value = cosine_similarity(by_id[trial.a].vector, by_id[trial.b].vector)
        scores.setdefault(trial.group, []).append(value)
    return scores


def eer(target_scores: Sequence[float], nontarget_scores: Sequence[float]) -> EerResult:
    """Equal error rate with linear interpolation at the FRR/FAR crossing.

    Thresholds sweep the sorted unique scores with an accept-if-score>=t
    rule. FRR rises and FAR falls with t; the EER is read off where they
    cross, interpolating between the two adjacent operating points when no
    threshold gives an exact crossing.
    """
    if len(target_scores) == 0 or len(nontarget_scores) == 0:
        raise EmptyScores("need at least one target and one nontarget score")
    target = np.sort(np.asarray(target_scores, dtype=np.float64))
    nontarget = np.sort(np.asarray(nontarget_scores, dtype=np.float64))
    thresholds = np.unique(np.concatenate([target, nontarget]))

    # fraction of target strictly below t / fraction of nontarget at or above t
    # (exact count ratios so equal rates compare equal)
    frr = np.searchsorted(target, thresholds, side="left") / target.size
    far = (nontarget.size - np.searchsorted(nontarget, thresholds, side="left")) / nontarget.size

    diff = far - frr
    idx = int(np.argmax(diff <= 0.0))  # first operating point past the crossing
    if diff[idx] == 0.0:
        rate = frr[idx]
        below = thresholds[idx - 1] if idx > 0 else thresholds[idx]
        threshold = 0.5 * (below + thresholds[idx])
    else:
        # interpolate between the operating points either side of the crossing
        if idx == 0:
            rate = 0.5 * (frr[0] + far[0])
            threshold = thresholds[0]
        else:
            d0, d1 = diff[idx - 1], diff[idx]
            alpha = d0 / (d0 - d1)
            rate = frr[idx - 1] + alpha * (frr[idx] - frr[idx - 1])
            threshold = thresholds[idx - 1] + alpha * (thresholds[idx] - thresholds[idx - 1])
    return EerResult(
        eer=float(100.0 * rate),
        threshold=float(threshold),
        num_target=target.size,
        num_nontarget=nontarget.size,
    )


def eer_table(
    records: Sequence[EmbeddingRecord],
    manifest=None,
    include_all_speakers: bool = False,
    per_speaker: bool = True,
) -> tuple[dict[str, dict[str, EerResult]], dict[str, list[float]]]:
    """Per-speaker and pooled EERs for the T1 and T1-T2 target definitions.

    Returns (table, distributions): ``table[speaker][column]`` with columns
    'T1' and 'T1-T2' plus an 'All' pooled row (only 'All' when
    ``per_speaker`` is off), and the three raw score distributions for
    external plotting. A speaker's nontarget scores are its own
    cross-speaker trials.
    """
    trials = build_trials(records, manifest, include_all_speakers)
    by_id = {r.id: r for r in records}

    speaker_target_t1: dict[str, list[float]] = {}
    speaker_target_t1t2: dict[str, list[float]] = {}
    speaker_nontarget: dict[str, list[float]] = {}
    distributions: dict[str, list[float]] = {
        GROUP_T1: [],
        GROUP_T1_T2: [],
        GROUP_NONTARGET: [],
    }

    for trial in trials:
        rec_a = by_id[trial.a]
        rec_b = by_id[trial.b]
        value = cosine_similarity(rec_a.vector, rec_b.vector)
        distributions[trial.group].append(value)
        if trial.group == GROUP_T1:
            speaker_target_t1.setdefault(rec_a.speaker_id, []).append(value)
        elif trial.group == GROUP_T1_T2:
            speaker_target_t1t2.setdefault(rec_a.speaker_id, []).append(value)
        else:
            speaker_nontarget.setdefault(rec_a.speaker_id, []).append(value)
            speaker_nontarget.setdefault(rec_b.speaker_id, []).append(value)

    table: dict[str, dict[str, EerResult]] = {}
    if per_speaker:
        for speaker in sorted(speaker_target_t1):
            non = speaker_nontarget.get(speaker, [])
            t1 = speaker_target_t1[speaker]
            t1t2 = t1 + speaker_target_t1t2.get(speaker, [])
            table[speaker] = {
                "T1": eer(t1, non),
                "T1-T2": eer(t1t2, non),
            }
    all_t1 = distributions[GROUP_T1]
    all_t1t2 = distributions[GROUP_T1] + distributions[GROUP_T1_T2]
    all_non = distributions[GROUP_NONTARGET]
    table["All"] = {
        "T1": eer(all_t1, all_non),
        "T1-T2": eer(all_t1t2, all_non),
    }
    return table, distributions


def read_embeddings(path) -> list[EmbeddingRecord]:
    """Read the line-per-record embedding interchange file.

    Each line is a JSON object with fields ``id``, ``speaker_id``,
    ``stage``, ``utterance_id``, ``dim`` and ``values``; the dimension must
    be constant across the file.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except FileNotFoundError as exc:
        raise MissingEmbeddings(str(path)) from exc
    records = []
    dim = None
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            values = np.asarray(rec["values"], dtype=np.float64)
            declared = int(rec["dim"])
            record = EmbeddingRecord(
                id=rec["id"],
                speaker_id=rec["speaker_id"],
                stage=rec["stage"],
                utterance_id=rec["utterance_id"],
                vector=values,
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
        if declared != record.dim:
            raise ParseError(f"{path}:{lineno}: dim field {declared} != {record.dim} values")
        if dim is None:
            dim = record.dim
        elif record.dim != dim:
            raise ParseError(f"{path}:{lineno}: dimension {record.dim} != file dimension {dim}")
        records.append(record)
    return records


def write_embeddings(path, records: Sequence[EmbeddingRecord]) -> None:
    """Inverse of read_embeddings."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "id": rec.id,
                        "speaker_id": rec.speaker_id,
                        "stage": rec.stage,
                        "utterance_id": rec.utterance_id,
                        "dim": rec.dim,
                        "values": [float(v) for v in rec.vector],
                    }
                )
                + "\n"
            )
