"""Corpus manifest model: speakers, stages, severity labels, sentence partition.

The manifest is a versioned JSON document describing a longitudinal
pathological-speech corpus: patient speakers recorded before surgery (T1),
after surgery (T2) and six months after surgery (T3), post-treatment-only
speakers (T3), and healthy controls. Each speaker reads the same 92
sentences per stage; severity per stage is the mean of five expert 1-5
ratings. Audio itself always stays outside the manifest, referenced by
relative path.
"""

from __future__ import annotations

import json
import os
import random
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError, UnknownSpeaker, UnknownStage, ValidationError, WrongCount

FORMAT_VERSION = 1

GROUP_LONGITUDINAL = "P"
GROUP_POST_TREATMENT = "R"
GROUP_CONTROL = "V"

PATHO_STAGES = ("T1", "T2", "T3")
CONTROL_STAGE = "control"

SPLIT_SIZES = {"train": 78, "dev": 7, "test": 7}
SPLIT_NAMES = ("train", "dev", "test")

ENV_CORPUS_ROOT = "PVCEVAL_CORPUS_ROOT"

_KNOWN_TOP_KEYS = {
    "format_version",
    "corpus",
    "corpus_root",
    "speakers",
    "sentences",
    "utterances",
    "partition",
}


@dataclass(frozen=True)
class StageInfo:
    severity: float
    premature_stop: bool = False


@dataclass(frozen=True)
class SpeakerRecord:
    id: str
    group: str  # P: longitudinal patient, R: post-treatment only, V: control
    gender: str
    stages: dict = field(default_factory=dict)  # stage -> StageInfo

    def severity(self, stage: str) -> float:
        if stage not in self.stages:
            raise UnknownStage(f"speaker {self.id} has no stage {stage}")
        return self.stages[stage].severity


@dataclass
class CorpusManifest:
    speakers: list
    sentences: tuple
    utterances: dict = field(default_factory=dict)  # (speaker, stage, sentence) -> path
    partition: dict | None = None  # sentence -> split
    corpus: str = ""
    corpus_root: str = ""

    def speaker(self, speaker_id: str) -> SpeakerRecord | None:
        for rec in self.speakers:
            if rec.id == speaker_id:
                return rec
        return None

    def stages_of(self, speaker_id: str) -> tuple:
        rec = self.speaker(speaker_id)
        if rec is None:
            raise UnknownSpeaker(speaker_id)
        if rec.group == GROUP_CONTROL:
            return (CONTROL_STAGE,)
        return tuple(s for s in PATHO_STAGES if s in rec.stages)


def _check_severity(value, where: str) -> float:
    try:
        sev = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{where}: severity {value!r} is not a number")
    if not (1.0 <= sev <= 5.0):
        raise ValidationError(f"{where}: severity {sev} outside [1, 5]")
    if abs(sev * 10.0 - round(sev * 10.0)) > 1e-9:
        raise ValidationError(f"{where}: severity {sev} has more than one decimal")
    return sev


def _parse_speaker(obj, index: int) -> SpeakerRecord:
    where = f"speakers[{index}]"
    try:
        speaker_id = obj["id"]
        group = obj["group"]
        gender = obj["gender"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"{where}: missing field {exc}") from exc
    if group not in (GROUP_LONGITUDINAL, GROUP_POST_TREATMENT, GROUP_CONTROL):
        raise ValidationError(f"{where} ({speaker_id}): unknown group {group!r}")
    if gender not in ("M", "F"):
        raise ValidationError(f"{where} ({speaker_id}): unknown gender {gender!r}")

    raw_stages = obj.get("stages", {})
    stages = {}
    for stage, info in raw_stages.items():
        if stage not in PATHO_STAGES:
            raise ValidationError(f"{where} ({speaker_id}): unknown stage {stage!r}")
        severity = _check_severity(info.get("severity"), f"{where} ({speaker_id}) {stage}")
        stages[stage] = StageInfo(severity, bool(info.get("premature_stop", False)))

    if group == GROUP_CONTROL and stages:
        raise ValidationError(f"{where} ({speaker_id}): control speakers carry no stages")
    if group == GROUP_POST_TREATMENT and set(stages) != {"T3"}:
        raise ValidationError(
            f"{where} ({speaker_id}): post-treatment-only speakers have exactly stage T3"
        )
    if group == GROUP_LONGITUDINAL and len(stages) < 2:
        raise ValidationError(
            f"{where} ({speaker_id}): longitudinal patients need at least two stages"
        )
    return SpeakerRecord(id=speaker_id, group=group, gender=gender, stages=stages)


def load_manifest(path) -> CorpusManifest:
    """Parse and fully validate a manifest file; violations carry locations."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: manifest must be a JSON object")

    version = doc.get("format_version")
    if version is None:
        raise ParseError(f"{path}: missing format_version")
    if version != FORMAT_VERSION:
        raise ParseError(f"{path}: unsupported format_version {version!r}")
    unknown = set(doc) - _KNOWN_TOP_KEYS
    if unknown:
        warnings.warn(f"{path}: ignoring unknown manifest fields {sorted(unknown)}")

    speakers = [_parse_speaker(s, i) for i, s in enumerate(doc.get("speakers", []))]
    seen = set()
    for rec in speakers:
        if rec.id in seen:
            raise ValidationError(f"duplicate speaker id {rec.id!r}")
        seen.add(rec.id)

    sentences = tuple(doc.get("sentences", []))
    if len(set(sentences)) != len(sentences):
        raise ValidationError("duplicate sentence ids")
    sentence_set = set(sentences)

    by_id = {rec.id: rec for rec in speakers}
    utterances = {}
    for i, utt in enumerate(doc.get("utterances", [])):
        where = f"utterances[{i}]"
        try:
            speaker_id = utt["speaker"]
            stage = utt["stage"]
            sentence = utt["sentence"]
            rel_path = utt["path"]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"{where}: missing field {exc}") from exc
        rec = by_id.get(speaker_id)
        if rec is None:
            raise ValidationError(f"{where}: undeclared speaker {speaker_id!r}")
        if rec.group == GROUP_CONTROL:
            if stage != CONTROL_STAGE:
                raise ValidationError(
                    f"{where}: control speaker {speaker_id} utterances use stage "
                    f"{CONTROL_STAGE!r}, got {stage!r}"
                )
        elif stage not in rec.stages:
            raise ValidationError(f"{where}: {speaker_id} has no stage {stage!r}")
        if sentence not in sentence_set:
            raise ValidationError(f"{where}: undeclared sentence {sentence!r}")
        key = (speaker_id, stage, sentence)
        if key in utterances:
            raise ValidationError(f"{where}: duplicate utterance {key}")
        utterances[key] = rel_path

    partition = None
    if doc.get("partition") is not None:
        partition = _parse_partition(doc["partition"], sentence_set)

    return CorpusManifest(
        speakers=speakers,
        sentences=sentences,
        utterances=utterances,
        partition=partition,
        corpus=doc.get("corpus", ""),
        corpus_root=doc.get("corpus_root", ""),
    )


def _parse_partition(obj, sentence_set) -> dict:
    if set(obj) != set(SPLIT_NAMES):
        raise ValidationError(f"partition must have splits {SPLIT_NAMES}, got {sorted(obj)}")
    partition = {}
    for split in SPLIT_NAMES:
        ids = obj[split]
        if len(ids) != SPLIT_SIZES[split]:
            raise ValidationError(
                f"partition split {split!r} has {len(ids)} sentences, expected {SPLIT_SIZES[split]}"
            )
        for sentence in ids:
            if sentence not in sentence_set:
                raise ValidationError(f"partition references undeclared sentence {sentence!r}")
            if sentence in partition:
                raise ValidationError(f"sentence {sentence!r} appears in two splits")
            partition[sentence] = split
    if set(partition) != sentence_set:
        missing = sorted(sentence_set - set(partition))
        raise ValidationError(f"partition misses sentences {missing[:5]}...")
    return partition


def serialize_manifest(manifest: CorpusManifest) -> str:
    """Canonical JSON text; load(serialize(m)) == m."""
    doc = {
        "format_version": FORMAT_VERSION,
        "corpus": manifest.corpus,
        "corpus_root": manifest.corpus_root,
        "speakers": [
            {
                "id": rec.id,
                "group": rec.group,
                "gender": rec.gender,
                "stages": {
                    stage: {
                        "severity": info.severity,
                        "premature_stop": info.premature_stop,
                    }
                    for stage, info in rec.stages.items()
                },
            }
            for rec in manifest.speakers
        ],
        "sentences": list(manifest.sentences),
        "utterances": [
            {"speaker": spk, "stage": stage, "sentence": sent, "path": path}
            for (spk, stage, sent), path in sorted(manifest.utterances.items())
        ],
        "partition": None
        if manifest.partition is None
        else {
            split: sorted(s for s, sp in manifest.partition.items() if sp == split)
            for split in SPLIT_NAMES
        },
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def save_manifest(path, manifest: CorpusManifest) -> None:
    Path(path).write_text(serialize_manifest(manifest), encoding="utf-8")


def partition_sentences(sentence_ids, seed: int) -> dict:
    """Deterministic 78/7/7 split of exactly 92 distinct sentence ids.

    The same seed always yields the same partition regardless of input
    order, so every speaker's rendition of a sentence lands in the same
    split (parallel-corpus property).
    """
    ids = sorted(sentence_ids)
    if len(ids) != 92 or len(set(ids)) != 92:
        raise WrongCount(f"expected 92 distinct sentence ids, got {len(ids)}")
    rng = random.Random(seed)
    rng.shuffle(ids)
    partition = {}
    cursor = 0
    for split in SPLIT_NAMES:
        for sentence in ids[cursor : cursor + SPLIT_SIZES[split]]:
            partition[sentence] = split
        cursor += SPLIT_SIZES[split]
    return partition


def select_utterances(
    manifest: CorpusManifest, speaker_id: str, stage: str, split: str | None = None
) -> list[tuple[str, str]]:
    """Sentence-ordered (sentence, path) pairs for one speaker/stage.

    With ``split`` given, intersects with the manifest partition; an empty
    intersection (e.g. a prematurely stopped recording session) is an empty
    list, not an error.
    """
    rec = manifest.speaker(speaker_id)
    if rec is None:
        raise UnknownSpeaker(speaker_id)
    valid_stages = (CONTROL_STAGE,) if rec.group == GROUP_CONTROL else tuple(rec.stages)
    if stage not in valid_stages:
        raise UnknownStage(f"speaker {speaker_id} has no stage {stage!r}")
    if split is not None:
        if split not in SPLIT_NAMES:
            raise ValidationError(f"unknown split {split!r}")
        if manifest.partition is None:
            raise ValidationError("manifest declares no partition")
    out = []
    for sentence in sorted(manifest.sentences):
        key = (speaker_id, stage, sentence)
        if key not in manifest.utterances:
            continue
        if split is not None and manifest.partition.get(sentence) != split:
            continue
        out.append((sentence, manifest.utterances[key]))
    return out


def resolve_corpus_root(manifest_path, manifest: CorpusManifest, cli_root=None) -> Path:
    """Precedence: CLI flag, then environment, then manifest, then its directory."""
    if cli_root:
        return Path(cli_root)
    env_root = os.environ.get(ENV_CORPUS_ROOT)
    if env_root:
        return Path(env_root)
    base = Path(manifest_path).resolve().parent
    if manifest.corpus_root:
        root = Path(manifest.corpus_root)
        return root if root.is_absolute() else base / root
    return base
