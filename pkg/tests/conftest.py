"""Shared synthetic-signal builders and corpus scaffolding for the tests.

Real corpus audio is private, so tests run on constructed sentences:
``noise_sentence`` concatenates noise bursts with distinct spectral shapes
(good for SNR/null-distribution tests), ``tonal_sentence`` renders a fixed
symbolic phone sequence deterministically (good for alignment tests, since
a tempo change leaves the band content identical), and ``modulated_chord``
puts one slowly AM'd sinusoid in every analysis band (smooth everywhere,
good for warp-closeness checks).
"""

import numpy as np
import pytest

from pvceval.audio import AudioBuffer, FrontEndConfig, third_octave_bands

FIXTURES = __file__.rsplit("/", 2)[0] + "/fixtures"


def noise_sentence(rng, rate=16000, n_phones=10, dur=(0.12, 0.3)):
    chunks = []
    for _ in range(n_phones):
        n = int(rng.uniform(*dur) * rate)
        noise = rng.standard_normal(n)
        spec = np.fft.rfft(noise)
        freqs = np.fft.rfftfreq(n, 1 / rate)
        center = rng.uniform(200, 3500)
        width = rng.uniform(200, 1200)
        shape = np.exp(-0.5 * ((freqs - center) / width) ** 2) + 0.05
        shaped = np.fft.irfft(spec * shape, n)
        env = np.hanning(n) * 0.8 + 0.2
        chunks.append(shaped * env * rng.uniform(0.5, 1.0))
    x = np.concatenate(chunks)
    return AudioBuffer(x / (np.abs(x).max() * 1.2), rate)


def phone_script(rng, n_phones=10):
    """Symbolic description shared between renditions of one sentence."""
    return [
        {
            "dur": rng.uniform(0.12, 0.3),
            "freqs": rng.uniform(200, 3600, size=4),
            "amps": rng.uniform(0.3, 1.0, size=4),
            "level": rng.uniform(0.5, 1.0),
        }
        for _ in range(n_phones)
    ]


def render_script(script, rate=16000, stretch=1.0, gain=1.0):
    parts = []
    for phone in script:
        n = int(round(phone["dur"] * stretch * rate))
        t = np.arange(n) / rate
        sig = sum(a * np.sin(2 * np.pi * f * t) for f, a in zip(phone["freqs"], phone["amps"]))
        nr = int(min(0.03 * stretch, phone["dur"] * stretch / 2) * rate)
        env = np.ones(n)
        if nr > 0:
            ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(nr) / nr)
            env[:nr] = ramp
            env[-nr:] = ramp[::-1]
        parts.append(sig * env * phone["level"])
    x = np.concatenate(parts)
    return AudioBuffer(gain * x / (np.abs(x).max() * 1.2), rate)


def tonal_sentence(rng, rate=16000, stretch=1.0):
    return render_script(phone_script(rng), rate=rate, stretch=stretch)


def chord_script(rng):
    centers, _, _ = third_octave_bands(FrontEndConfig())
    return {
        "centers": centers,
        "mod_rates": rng.uniform(0.7, 1.8, size=centers.size),
        "phases": rng.uniform(0, 2 * np.pi, size=centers.size),
        "amps": rng.uniform(0.4, 1.0, size=centers.size),
    }


def render_chord(script, rate=16000, seconds=2.0, stretch=1.0):
    n = int(round(seconds * stretch * rate))
    t = np.arange(n) / rate
    x = np.zeros(n)
    for f, mr, ph, a in zip(
        script["centers"], script["mod_rates"], script["phases"], script["amps"]
    ):
        env = 1.0 + 0.5 * np.sin(2 * np.pi * (mr / stretch) * t + ph)
        x += a * env * np.sin(2 * np.pi * f * t)
    return AudioBuffer(x / (np.abs(x).max() * 1.2), rate)


def modulated_chord(rng, rate=16000, seconds=2.0, stretch=1.0):
    return render_chord(chord_script(rng), rate=rate, seconds=seconds, stretch=stretch)


def add_noise_at_snr(rng, audio, snr_db):
    noise = rng.standard_normal(len(audio))
    scale = np.sqrt(np.mean(audio.samples**2) / np.mean(noise**2) * 10 ** (-snr_db / 10))
    return AudioBuffer(audio.samples + scale * noise, audio.sample_rate)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
