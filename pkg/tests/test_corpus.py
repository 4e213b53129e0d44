"""Manifest model tests: parsing, validation, partition, utterance selection."""

import json

import pytest

from conftest import FIXTURES
from pvceval.corpus import (
    CorpusManifest,
    SpeakerRecord,
    StageInfo,
    load_manifest,
    partition_sentences,
    save_manifest,
    select_utterances,
    serialize_manifest,
)
from pvceval.errors import (
    ParseError,
    UnknownSpeaker,
    UnknownStage,
    ValidationError,
    WrongCount,
)


@pytest.fixture
def corpus_manifest():
    return load_manifest(f"{FIXTURES}/corpus_manifest.json")


class TestLoadManifest:
    def test_longitudinal_speaker(self, corpus_manifest):
        rec = corpus_manifest.speaker("PJSM")
        assert rec.group == "P"
        assert rec.gender == "M"
        assert rec.severity("T1") == 5.0
        assert rec.severity("T2") == 3.0
        assert rec.severity("T3") == 3.0

    def test_two_stage_speaker_reports_missing_stage(self, corpus_manifest):
        rec = corpus_manifest.speaker("PIIM")
        assert set(rec.stages) == {"T1", "T2"}
        with pytest.raises(UnknownStage):
            rec.severity("T3")

    def test_premature_stop_flags(self, corpus_manifest):
        assert corpus_manifest.speaker("RQNF").stages["T3"].premature_stop
        assert corpus_manifest.speaker("PEAM").stages["T2"].premature_stop
        assert not corpus_manifest.speaker("PGAF").stages["T2"].premature_stop

    def test_group_counts(self, corpus_manifest):
        groups = [rec.group for rec in corpus_manifest.speakers]
        assert groups.count("P") == 6
        assert groups.count("R") == 10
        assert groups.count("V") == 5

    def test_duplicate_speaker_rejected(self, tmp_path, corpus_manifest):
        doc = json.loads(serialize_manifest(corpus_manifest))
        doc["speakers"].append(doc["speakers"][0])
        path = tmp_path / "dup.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ValidationError, match="duplicate"):
            load_manifest(path)

    def test_severity_range_checked(self, tmp_path, corpus_manifest):
        doc = json.loads(serialize_manifest(corpus_manifest))
        doc["speakers"][0]["stages"]["T1"]["severity"] = 5.5
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ValidationError, match="severity"):
            load_manifest(path)

    def test_severity_decimals_checked(self, tmp_path, corpus_manifest):
        doc = json.loads(serialize_manifest(corpus_manifest))
        doc["speakers"][0]["stages"]["T1"]["severity"] = 4.55
        path = tmp_path / "bad2.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ValidationError, match="decimal"):
            load_manifest(path)

    def test_control_with_stage_rejected(self, tmp_path, corpus_manifest):
        doc = json.loads(serialize_manifest(corpus_manifest))
        for spk in doc["speakers"]:
            if spk["id"] == "VAHM":
                spk["stages"] = {"T1": {"severity": 5.0}}
        path = tmp_path / "bad3.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ValidationError, match="control"):
            load_manifest(path)

    def test_missing_format_version(self, tmp_path):
        path = tmp_path / "nv.json"
        path.write_text("{}")
        with pytest.raises(ParseError, match="format_version"):
            load_manifest(path)

    def test_not_json(self, tmp_path):
        path = tmp_path / "garbage.json"
        path.write_text("not json {{{")
        with pytest.raises(ParseError):
            load_manifest(path)

    def test_unknown_fields_warn_but_load(self, tmp_path, corpus_manifest):
        doc = json.loads(serialize_manifest(corpus_manifest))
        doc["future_field"] = 42
        path = tmp_path / "fut.json"
        path.write_text(json.dumps(doc))
        with pytest.warns(UserWarning, match="future_field"):
            load_manifest(path)

    def test_round_trip(self, tmp_path, corpus_manifest):
        path = tmp_path / "rt.json"
        save_manifest(path, corpus_manifest)
        assert load_manifest(path) == corpus_manifest


class TestPartition:
    def test_sizes(self, corpus_manifest):
        part = partition_sentences(corpus_manifest.sentences, seed=0)
        sizes = {split: sum(1 for s in part.values() if s == split) for split in ("train", "dev", "test")}
        assert sizes == {"train": 78, "dev": 7, "test": 7}

    def test_true_partition(self, corpus_manifest):
        part = partition_sentences(corpus_manifest.sentences, seed=3)
        assert set(part) == set(corpus_manifest.sentences)

    def test_deterministic_per_seed(self, corpus_manifest):
        a = partition_sentences(corpus_manifest.sentences, seed=0)
        b = partition_sentences(corpus_manifest.sentences, seed=0)
        c = partition_sentences(corpus_manifest.sentences, seed=1)
        assert a == b
        assert a != c

    def test_input_order_irrelevant(self, corpus_manifest):
        ids = list(corpus_manifest.sentences)
        a = partition_sentences(ids, seed=5)
        b = partition_sentences(list(reversed(ids)), seed=5)
        assert a == b

    def test_wrong_count(self):
        with pytest.raises(WrongCount):
            partition_sentences([f"s{i}" for i in range(91)], seed=0)
        with pytest.raises(WrongCount):
            partition_sentences(["s1"] * 92, seed=0)


def synthetic_manifest(n_sentences=92, utterance_sentences=None):
    sentences = tuple(f"s{i:03d}" for i in range(1, n_sentences + 1))
    partition = partition_sentences(sentences, seed=0) if n_sentences == 92 else None
    speakers = [
        SpeakerRecord("PAAM", "P", "M", {"T1": StageInfo(4.0), "T2": StageInfo(3.0)}),
        SpeakerRecord("VAHM", "V", "M", {}),
    ]
    utterances = {}
    for sentence in utterance_sentences or sentences:
        utterances[("PAAM", "T1", sentence)] = f"PAAM/T1/{sentence}.wav"
        utterances[("VAHM", "control", sentence)] = f"VAHM/{sentence}.wav"
    return CorpusManifest(
        speakers=speakers,
        sentences=sentences,
        utterances=utterances,
        partition=partition,
    )


class TestSelectUtterances:
    def test_control_pathological_stage_query(self):
        manifest = synthetic_manifest()
        with pytest.raises(UnknownStage):
            select_utterances(manifest, "VAHM", "T1")

    def test_control_stage_query_works(self):
        manifest = synthetic_manifest()
        out = select_utterances(manifest, "VAHM", "control")
        assert len(out) == 92

    def test_full_speaker_test_split(self):
        manifest = synthetic_manifest()
        out = select_utterances(manifest, "PAAM", "T1", split="test")
        assert len(out) == 7

    def test_empty_intersection_is_empty_list(self):
        manifest = synthetic_manifest()
        # keep only train-split utterances, then ask for the test split
        train_only = [s for s, sp in manifest.partition.items() if sp == "train"]
        truncated = synthetic_manifest(utterance_sentences=train_only)
        assert select_utterances(truncated, "PAAM", "T1", split="test") == []

    def test_unknown_speaker(self):
        with pytest.raises(UnknownSpeaker):
            select_utterances(synthetic_manifest(), "ZZZZ", "T1")

    def test_sentence_ordering(self):
        manifest = synthetic_manifest()
        out = select_utterances(manifest, "PAAM", "T1")
        assert [s for s, _ in out] == sorted(s for s, _ in out)

    def test_missing_stage_of_known_speaker(self):
        with pytest.raises(UnknownStage):
            select_utterances(synthetic_manifest(), "PAAM", "T3")


class TestCorpusRoot:
    def test_resolution_precedence(self, tmp_path, monkeypatch):
        from pvceval.corpus import ENV_CORPUS_ROOT, resolve_corpus_root

        manifest = synthetic_manifest()
        manifest_path = tmp_path / "m.json"
        save_manifest(manifest_path, manifest)

        monkeypatch.delenv(ENV_CORPUS_ROOT, raising=False)
        assert resolve_corpus_root(manifest_path, manifest) == tmp_path

        manifest.corpus_root = "audio"
        assert resolve_corpus_root(manifest_path, manifest) == tmp_path / "audio"

        monkeypatch.setenv(ENV_CORPUS_ROOT, "/env/root")
        assert str(resolve_corpus_root(manifest_path, manifest)) == "/env/root"

        assert str(resolve_corpus_root(manifest_path, manifest, cli_root="/cli")) == "/cli"
