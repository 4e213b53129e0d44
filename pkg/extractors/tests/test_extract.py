"""Extractor tests: round-trip through the evaluation toolkit's readers,
determinism of repeat runs, and the error contracts."""

import json
import wave

import numpy as np
import pytest

from pvceval.phonemes import read_transcripts
from pvceval.verification import read_embeddings

from pvcextract.backends import embedding_backend, g2p_backend, recognizer_backend
from pvcextract.cli import main
from pvcextract.errors import ManifestError, MissingText, ModelLoadError
from pvcextract.extract import ExtractionJob, extract_embeddings, extract_phonemes


def write_wav(path, samples, rate=16000):
    pcm = np.clip(np.round(np.asarray(samples) * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(rate)
        wav.writeframes(pcm.tobytes())


def tone_burst(rng, seconds=0.8, rate=16000):
    n = int(seconds * rate)
    t = np.arange(n) / rate
    x = sum(
        a * np.sin(2 * np.pi * f * t)
        for f, a in zip(rng.uniform(200, 3000, 3), rng.uniform(0.2, 0.8, 3))
    )
    return 0.5 * x / np.abs(x).max()


@pytest.fixture
def corpus(tmp_path):
    """Five-utterance synthetic corpus: 2 speakers, shared sentence texts."""
    rng = np.random.default_rng(42)
    utterances = [
        ("SPKA", "T1", "s001"),
        ("SPKA", "T1", "s002"),
        ("SPKA", "T2", "s001"),
        ("SPKB", "T1", "s001"),
        ("SPKB", "T1", "s002"),
    ]
    entries = []
    for speaker, stage, sentence in utterances:
        rel = f"{speaker}_{stage}_{sentence}.wav"
        write_wav(tmp_path / rel, tone_burst(rng))
        entries.append({"speaker": speaker, "stage": stage, "sentence": sentence, "path": rel})
    manifest = {
        "format_version": 1,
        "speakers": [
            {"id": "SPKA", "group": "P", "gender": "F",
             "stages": {"T1": {"severity": 4.0}, "T2": {"severity": 3.0}}},
            {"id": "SPKB", "group": "P", "gender": "M",
             "stages": {"T1": {"severity": 5.0}, "T2": {"severity": 4.0}}},
        ],
        "sentences": ["s001", "s002"],
        "sentence_texts": {"s001": "de zon schijnt", "s002": "het regent weer"},
        "utterances": entries,
    }
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2))
    return path


class TestEmbeddings:
    def test_primary_reader_round_trip(self, corpus, tmp_path):
        out = tmp_path / "emb.jsonl"
        extract_embeddings(ExtractionJob(manifest=str(corpus), embeddings_out=str(out)))
        records = read_embeddings(out)  # the evaluation toolkit's own reader
        assert len(records) == 5
        dims = {r.dim for r in records}
        assert len(dims) == 1
        manifest = json.loads(corpus.read_text())
        known = {
            f"{u['speaker']}_{u['stage']}_{u['sentence']}" for u in manifest["utterances"]
        }
        assert {r.id for r in records} == known

    def test_repeat_run_bit_identical(self, corpus, tmp_path):
        out1 = tmp_path / "emb1.jsonl"
        out2 = tmp_path / "emb2.jsonl"
        extract_embeddings(ExtractionJob(manifest=str(corpus), embeddings_out=str(out1)))
        extract_embeddings(ExtractionJob(manifest=str(corpus), embeddings_out=str(out2)))
        assert out1.read_bytes() == out2.read_bytes()

    def test_duplicate_utterance_aborts_before_extraction(self, corpus, tmp_path):
        doc = json.loads(corpus.read_text())
        doc["utterances"].append(doc["utterances"][0])
        bad = tmp_path / "dup.json"
        bad.write_text(json.dumps(doc))
        out = tmp_path / "emb.jsonl"
        with pytest.raises(ManifestError, match="duplicate"):
            extract_embeddings(ExtractionJob(manifest=str(bad), embeddings_out=str(out)))
        assert not out.exists()

    def test_unknown_model(self, corpus, tmp_path):
        job = ExtractionJob(
            manifest=str(corpus),
            embedding_model="made-up:model",
            embeddings_out=str(tmp_path / "x.jsonl"),
        )
        with pytest.raises(ModelLoadError):
            extract_embeddings(job)

    def test_no_leftover_tempfile(self, corpus, tmp_path):
        out = tmp_path / "emb.jsonl"
        extract_embeddings(ExtractionJob(manifest=str(corpus), embeddings_out=str(out)))
        assert not list(tmp_path.glob("*.tmp"))


class TestPhonemes:
    def test_primary_reader_round_trip(self, corpus, tmp_path):
        out = tmp_path / "tr.jsonl"
        extract_phonemes(ExtractionJob(manifest=str(corpus), phonemes_out=str(out)))
        pairs = read_transcripts(out)
        assert len(pairs) == 5
        for ref, hyp in pairs:
            assert len(ref) > 0
            assert len(hyp) > 0  # non-silent audio yields tokens

    def test_ref_phonemization_deterministic(self):
        g2p = g2p_backend("builtin:letter-map")
        assert g2p("De zon schijnt") == g2p("De zon schijnt")
        assert g2p("abc") == ["aa", "b", "k"]

    def test_silent_audio_gives_empty_hypothesis(self, corpus, tmp_path):
        doc = json.loads(corpus.read_text())
        write_wav(tmp_path / "silent.wav", np.zeros(8000))
        doc["utterances"] = [
            {"speaker": "SPKA", "stage": "T1", "sentence": "s001", "path": "silent.wav"}
        ]
        silent_manifest = tmp_path / "silent.json"
        silent_manifest.write_text(json.dumps(doc))
        out = tmp_path / "tr.jsonl"
        extract_phonemes(ExtractionJob(manifest=str(silent_manifest), phonemes_out=str(out)))
        pairs = read_transcripts(out)
        assert len(pairs) == 1
        assert len(pairs[0][1]) == 0  # empty hyp is valid: PER = 100% deletions

    def test_missing_text(self, corpus, tmp_path):
        doc = json.loads(corpus.read_text())
        del doc["sentence_texts"]["s002"]
        bad = tmp_path / "nt.json"
        bad.write_text(json.dumps(doc))
        with pytest.raises(MissingText):
            extract_phonemes(ExtractionJob(manifest=str(bad), phonemes_out=str(tmp_path / "t.jsonl")))

    def test_repeat_run_bit_identical(self, corpus, tmp_path):
        out1 = tmp_path / "t1.jsonl"
        out2 = tmp_path / "t2.jsonl"
        extract_phonemes(ExtractionJob(manifest=str(corpus), phonemes_out=str(out1)))
        extract_phonemes(ExtractionJob(manifest=str(corpus), phonemes_out=str(out2)))
        assert out1.read_bytes() == out2.read_bytes()


class TestBackends:
    def test_embedding_deterministic_and_normalized(self):
        rng = np.random.default_rng(0)
        samples = tone_burst(rng)
        embed = embedding_backend("builtin:fbank-stats")
        a = embed(samples, 16000)
        b = embed(samples, 16000)
        assert np.array_equal(a, b)
        assert np.linalg.norm(a) == pytest.approx(1.0)

    def test_recognizer_tokens_on_tones(self):
        rng = np.random.default_rng(1)
        recognize = recognizer_backend("builtin:band-peak")
        for _ in range(10):
            tokens = recognize(tone_burst(rng), 16000)
            assert len(tokens) > 0
            assert all(t.startswith("p") for t in tokens)

    def test_unknown_identifiers(self):
        with pytest.raises(ModelLoadError):
            recognizer_backend("nope:x")
        with pytest.raises(ModelLoadError):
            g2p_backend("nope:x")
        with pytest.raises(ModelLoadError):
            embedding_backend("")


class TestCli:
    def test_embeddings_command(self, corpus, tmp_path):
        out = tmp_path / "emb.jsonl"
        rc = main(["embeddings", "--manifest", str(corpus), "--out", str(out)])
        assert rc == 0
        assert len(read_embeddings(out)) == 5

    def test_phonemes_command(self, corpus, tmp_path):
        out = tmp_path / "tr.jsonl"
        rc = main(["phonemes", "--manifest", str(corpus), "--out", str(out)])
        assert rc == 0
        assert len(read_transcripts(out)) == 5

    def test_bad_model_exit_code(self, corpus, tmp_path):
        rc = main(
            [
                "embeddings", "--manifest", str(corpus),
                "--out", str(tmp_path / "x.jsonl"), "--model", "bogus:id",
            ]
        )
        assert rc == 2

    def test_missing_manifest_exit_code(self, tmp_path):
        rc = main(
            ["embeddings", "--manifest", str(tmp_path / "none.json"), "--out", str(tmp_path / "x")]
        )
        assert rc == 3
