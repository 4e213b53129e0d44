"""STOI/ESTOI and pathological-variant tests."""

import numpy as np
import pytest

from conftest import (
    add_noise_at_snr,
    chord_script,
    noise_sentence,
    phone_script,
    render_chord,
    render_script,
    tonal_sentence,
)
from pvceval.audio import AudioBuffer, FrontEndConfig
from pvceval.errors import AllSilent, EmptyControlSet, EmptyInput, MixedSpeakers, TooShort
from pvceval.intelligibility import (
    IntelligibilityScore,
    _estoi_body,
    build_reference,
    estoi,
    front_end,
    p_estoi_speaker,
    p_estoi_utterance,
    p_stoi_utterance,
    stoi,
)
from pvceval.stats import pearson


class TestStoi:
    def test_self_comparison_is_one(self, rng):
        for _ in range(3):
            x = noise_sentence(rng)
            assert stoi(x, x).value == pytest.approx(1.0, abs=1e-6)

    def test_scale_invariance(self, rng):
        x = noise_sentence(rng)
        doubled = AudioBuffer(2.0 * x.samples, x.sample_rate)
        assert stoi(x, doubled).value == pytest.approx(stoi(x, x).value, abs=1e-9)

    def test_snr_monotonicity(self, rng):
        x = noise_sentence(rng)
        high = np.median([stoi(x, add_noise_at_snr(rng, x, 20)).value for _ in range(20)])
        low = np.median([stoi(x, add_noise_at_snr(rng, x, -10)).value for _ in range(20)])
        assert high > low

    def test_rate_mismatch_rejected(self, rng):
        a = noise_sentence(rng)
        b = AudioBuffer(a.samples, 8000)
        with pytest.raises(ValueError):
            stoi(a, b)

    def test_too_short(self, rng):
        short = AudioBuffer(rng.standard_normal(3000) * 0.2, 16000)
        with pytest.raises(TooShort):
            stoi(short, short)

    def test_all_silent(self):
        silent = AudioBuffer(np.zeros(16000), 16000)
        with pytest.raises(AllSilent):
            stoi(silent, silent)

    def test_metric_tag(self, rng):
        x = noise_sentence(rng)
        score = stoi(x, x, utterance_id="u1", speaker_id="SPKA")
        assert score.metric == "STOI"
        assert (score.utterance_id, score.speaker_id) == ("u1", "SPKA")


class TestEstoi:
    def test_self_comparison_is_one(self, rng):
        for _ in range(3):
            x = noise_sentence(rng)
            assert estoi(x, x).value == pytest.approx(1.0, abs=1e-6)

    def test_per_band_modulation_lowers_score(self, rng):
        cfg = FrontEndConfig()
        n, rate = 32000, 16000
        x = rng.standard_normal(n) * 0.2
        spec = np.fft.rfft(x)
        freqs = np.fft.rfftfreq(n, 1 / rate)
        k = np.arange(cfg.num_bands)
        low = cfg.lowest_band_center * 2.0 ** ((2 * k - 1) / 6.0)
        high = cfg.lowest_band_center * 2.0 ** ((2 * k + 1) / 6.0)
        t = np.arange(n) / rate
        y = np.fft.irfft(spec * ((freqs < low[0]) | (freqs >= high[-1])), n)
        for b in range(cfg.num_bands):
            component = np.fft.irfft(spec * ((freqs >= low[b]) & (freqs < high[b])), n)
            modulation = 1.0 + 0.8 * np.sin(
                2 * np.pi * rng.uniform(2.0, 8.0) * t + rng.uniform(0, 2 * np.pi)
            )
            y += component * modulation
        xa = AudioBuffer(x, rate)
        ya = AudioBuffer(y, rate)
        assert estoi(xa, ya).value < estoi(xa, xa).value
        assert estoi(xa, ya).value < 0.9

    def test_unrelated_noise_near_zero(self, rng):
        x = noise_sentence(rng)
        values = []
        for _ in range(20):
            noise = AudioBuffer(rng.standard_normal(len(x)) * 0.2, x.sample_rate)
            values.append(estoi(x, noise).value)
        assert np.median(values) < 0.2

    def test_bounded(self, rng):
        x = noise_sentence(rng)
        for snr in (10, 0, -10):
            v = estoi(x, add_noise_at_snr(rng, x, snr)).value
            assert -1.0 <= v <= 1.0


class TestBodyConsistency:
    def test_estoi_equals_row_pearson_on_standardized_segments(self, rng):
        """On segments that are already doubly mean/variance standardized the
        normalizations are pure rescalings, so the segment score must equal
        the plain per-band correlation mean (and the per-frame one)."""

        def doubly_standardize(a, iters=400):
            for _ in range(iters):
                a = a - a.mean(axis=1, keepdims=True)
                a = a / a.std(axis=1, keepdims=True)
                a = a - a.mean(axis=0, keepdims=True)
                a = a / a.std(axis=0, keepdims=True)
            return a

        cfg = FrontEndConfig()
        for _ in range(5):
            x = doubly_standardize(rng.standard_normal((cfg.num_bands, cfg.segment_frames)))
            y = doubly_standardize(x + 0.5 * rng.standard_normal(x.shape))
            assert np.abs(x.mean(axis=1)).max() < 1e-12
            assert np.abs(x.std(axis=0) - 1).max() < 1e-12
            body = _estoi_body(x.T.copy(), y.T.copy(), cfg)
            row_mean = np.mean([pearson(x[j], y[j]).r for j in range(cfg.num_bands)])
            col_mean = np.mean([pearson(x[:, n], y[:, n]).r for n in range(cfg.segment_frames)])
            assert body == pytest.approx(row_mean, abs=1e-9)
            assert body == pytest.approx(col_mean, abs=1e-9)


class TestBuildReference:
    def test_empty_controls(self):
        with pytest.raises(EmptyControlSet):
            build_reference([])

    def test_single_control_is_its_front_end(self, rng):
        x = tonal_sentence(rng)
        ref = build_reference([x], sentence_id="s1")
        assert ref.sentence_id == "s1"
        assert np.array_equal(ref.bands.energies, front_end(x).energies)

    def test_two_identical_controls(self, rng):
        x = tonal_sentence(rng)
        ref = build_reference([x, x])
        assert np.allclose(ref.bands.energies, front_end(x).energies)

    def test_stretched_copy_keeps_pivot_timeline(self, rng):
        # smooth per-band modulation: the warp error stays a small fraction
        # of the frame energy everywhere, unlike abrupt phone transitions
        script = chord_script(rng)
        x = render_chord(script)
        y = render_chord(script, stretch=1.25)
        pivot_only = build_reference([x])
        ref = build_reference([x, y])
        assert ref.frames == pivot_only.frames
        frame_energy = np.linalg.norm(pivot_only.bands.energies, axis=1)
        avg_energy = np.linalg.norm(ref.bands.energies, axis=1)
        rel = np.abs(avg_energy - frame_energy) / frame_energy
        assert rel.max() < 0.10


class TestPEstoi:
    def test_pivot_against_own_reference(self, rng):
        x = tonal_sentence(rng)
        ref = build_reference([x])
        assert p_estoi_utterance(x, ref).value >= 0.99

    def test_uniform_stretch_absorbed(self, rng):
        script = phone_script(rng)
        x = render_script(script)
        stretched = render_script(script, stretch=1.25)
        ref = build_reference([x])
        assert p_estoi_utterance(stretched, ref).value > 0.9

    def test_unrelated_noise_low(self, rng):
        x = tonal_sentence(rng)
        ref = build_reference([x])
        noise = AudioBuffer(rng.standard_normal(len(x)) * 0.2, x.sample_rate)
        assert p_estoi_utterance(noise, ref).value < 0.2

    def test_gain_invariance(self, rng):
        x = noise_sentence(rng)
        ref = build_reference([x])
        base = p_estoi_utterance(x, ref).value
        gained = AudioBuffer(x.samples * 0.05, x.sample_rate)
        assert p_estoi_utterance(gained, ref).value == pytest.approx(base, abs=1e-3)

    def test_snr_ordering_two_levels(self, rng):
        x = noise_sentence(rng)
        ref = build_reference([x])
        high = np.median(
            [p_estoi_utterance(add_noise_at_snr(rng, x, 20), ref).value for _ in range(5)]
        )
        low = np.median(
            [p_estoi_utterance(add_noise_at_snr(rng, x, -10), ref).value for _ in range(5)]
        )
        assert high > low

    def test_p_stoi_pivot(self, rng):
        x = tonal_sentence(rng)
        ref = build_reference([x])
        score = p_stoi_utterance(x, ref)
        assert score.metric == "P-STOI"
        assert score.value >= 0.99

    def test_metric_tag(self, rng):
        x = tonal_sentence(rng)
        ref = build_reference([x])
        assert p_estoi_utterance(x, ref).metric == "P-ESTOI"


class TestSpeakerAggregation:
    def test_mean(self):
        scores = [
            IntelligibilityScore(v, "P-ESTOI", f"u{i}", "PGAF") for i, v in enumerate([0.2, 0.3, 0.4])
        ]
        summary = p_estoi_speaker(scores, stage="T2")
        assert summary.value == pytest.approx(0.3)
        assert summary.utterance_count == 3
        assert (summary.speaker_id, summary.stage) == ("PGAF", "T2")

    def test_single_utterance(self):
        summary = p_estoi_speaker([IntelligibilityScore(0.27, "P-ESTOI", "u", "PGAF")])
        assert summary.value == pytest.approx(0.27)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            p_estoi_speaker([])

    def test_mixed_speakers(self):
        scores = [
            IntelligibilityScore(0.2, "P-ESTOI", "u1", "PGAF"),
            IntelligibilityScore(0.3, "P-ESTOI", "u2", "PHNF"),
        ]
        with pytest.raises(MixedSpeakers):
            p_estoi_speaker(scores)
