"""Audio ingestion and the spectral front end shared by the intelligibility metrics.

Covers 16-bit mono PCM WAV loading, polyphase resampling, energy-based
silence removal and the 15-band one-third-octave decomposition. Constants
follow the de-facto reference values of the short-time intelligibility
literature: 10 kHz analysis rate, 512-point FFT over 256-sample Hann
windows with 50% overlap, 15 bands from 150 Hz, a 40 dB VAD dynamic
range, 30-frame segments and a -15 dB clip bound.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import firwin, upfirdn

from .errors import AllSilent, CorruptHeader, TooShort, UnsupportedFormat

PCM16_SCALE = 32768.0


@dataclass(frozen=True)
class FrontEndConfig:
    """Analysis constants for the intelligibility front end."""

    analysis_rate: int = 10000
    fft_size: int = 512
    window_samples: int = 256
    hop_samples: int = 128
    num_bands: int = 15
    lowest_band_center: float = 150.0
    silence_dynamic_range: float = 40.0
    segment_frames: int = 30
    clip_bound_db: float = -15.0

    def __post_init__(self):
        if self.window_samples != 2 * self.hop_samples:
            raise ValueError("hop must be half the window length")
        if self.num_bands < 1:
            raise ValueError("need at least one band")
        if self.clip_bound_db >= 0:
            raise ValueError("clip bound must be negative (dB)")


@dataclass(frozen=True)
class AudioBuffer:
    """Mono PCM samples with their sample rate. Immutable once built."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if samples.ndim != 1:
            raise ValueError("AudioBuffer is mono: samples must be 1-D")
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class MagnitudeSpectrogram:
    """|STFT| frames, one row per analysis window."""

    values: np.ndarray  # frames x bins, non-negative
    frame_hop_samples: int
    window_samples: int

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def bins(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class BandSpectrogram:
    """One-third-octave band energies, one row per frame."""

    energies: np.ndarray  # frames x bands, non-negative
    band_centers: np.ndarray = field(repr=False, default=None)
    band_edges: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        energies = np.asarray(self.energies, dtype=np.float64)
        energies.setflags(write=False)
        object.__setattr__(self, "energies", energies)

    @property
    def frames(self) -> int:
        return self.energies.shape[0]

    @property
    def bands(self) -> int:
        return self.energies.shape[1]


def load_wav(path) -> AudioBuffer:
    """Load a 16-bit mono PCM RIFF/WAVE file.

    Samples are scaled to [-1, 1) by dividing by 32768. Anything that is
    not plain 16-bit mono PCM (the corpus delivery format) is rejected.
    """
    try:
        with wave.open(str(path), "rb") as wav:
            channels = wav.getnchannels()
            sampwidth = wav.getsampwidth()
            comptype = wav.getcomptype()
            rate = wav.getframerate()
            nframes = wav.getnframes()
            payload = wav.readframes(nframes)
    except wave.Error as exc:
        raise CorruptHeader(f"{path}: {exc}") from exc
    except EOFError as exc:
        raise CorruptHeader(f"{path}: truncated WAV header") from exc

    if comptype != "NONE":
        raise UnsupportedFormat(f"{path}: compressed WAV ({comptype}) not supported")
    if channels != 1:
        raise UnsupportedFormat(f"{path}: expected mono, got {channels} channels")
    if sampwidth != 2:
        raise UnsupportedFormat(
            f"{path}: expected 16-bit PCM, got {8 * sampwidth}-bit"
        )
    pcm = np.frombuffer(payload, dtype="<i2")
    return AudioBuffer(pcm.astype(np.float64) / PCM16_SCALE, rate)


def write_wav(path, audio: AudioBuffer) -> None:
    """Write an AudioBuffer as 16-bit mono PCM (values clipped to the grid)."""
    pcm = np.clip(np.round(audio.samples * PCM16_SCALE), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(audio.sample_rate)
        wav.writeframes(pcm.tobytes())


# 64 taps per polyphase branch; Kaiser beta sized for >120 dB alias rejection
# so DC survives to ~1e-7.
_TAPS_PER_PHASE = 64
_KAISER_BETA = 12.5


def resample(audio: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Polyphase windowed-sinc resampling to ``target_rate``.

    Output length is ceil(n * target / source); the identity conversion
    returns the input unchanged.
    """
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    if target_rate == audio.sample_rate:
        return audio
    up = target_rate // np.gcd(target_rate, audio.sample_rate)
    down = audio.sample_rate // np.gcd(target_rate, audio.sample_rate)
    n_in = len(audio)
    n_out = -(-n_in * up // down)  # ceil
    if n_in == 0:
        return AudioBuffer(np.zeros(0), target_rate)

    half_len = (_TAPS_PER_PHASE // 2) * up
    cutoff = 1.0 / max(up, down)  # relative to the upsampled Nyquist
    h = firwin(2 * half_len + 1, cutoff, window=("kaiser", _KAISER_BETA)) * up

    # Pad the filter so the group delay lands on an output-sample boundary,
    # then trim upfirdn's transient (same bookkeeping as classic polyphase
    # rational resamplers).
    n_pre_pad = (down - half_len % down) % down
    n_pre_remove = (half_len + n_pre_pad) // down
    h_padded = np.concatenate([np.zeros(n_pre_pad), h, np.zeros(down * up)])
    out = upfirdn(h_padded, audio.samples, up=up, down=down)
    return AudioBuffer(out[n_pre_remove : n_pre_remove + n_out], target_rate)


def _frame_signal(x: np.ndarray, window: int, hop: int) -> np.ndarray:
    """Full frames only; a short tail is dropped, not zero-padded."""
    if x.size < window:
        return np.empty((0, window))
    n_frames = 1 + (x.size - window) // hop
    idx = hop * np.arange(n_frames)[:, None] + np.arange(window)[None, :]
    return x[idx]


def _hann(n: int) -> np.ndarray:
    # periodic Hann: exact COLA at 50% overlap
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def frame_energies_db(x: np.ndarray, cfg: FrontEndConfig) -> np.ndarray:
    """Per-frame energy in dB of Hann-windowed frames (20*log10 of the norm)."""
    frames = _frame_signal(x, cfg.window_samples, cfg.hop_samples)
    norms = np.linalg.norm(frames * _hann(cfg.window_samples), axis=1)
    with np.errstate(divide="ignore"):
        return 20.0 * np.log10(norms)


def remove_silent_frames(
    reference: AudioBuffer,
    degraded: AudioBuffer,
    cfg: FrontEndConfig = FrontEndConfig(),
) -> tuple[AudioBuffer, AudioBuffer]:
    """Drop frames whose *reference* energy is >40 dB below the reference maximum.

    Both signals are truncated to the shorter, framed with 50%-overlapping
    Hann windows, masked by the reference energies and rebuilt by
    overlap-add. The same frames are removed from both signals.
    """
    if reference.sample_rate != degraded.sample_rate:
        raise ValueError("reference and degraded must share a sample rate")
    n = min(len(reference), len(degraded))
    ref = reference.samples[:n]
    deg = degraded.samples[:n]

    window = _hann(cfg.window_samples)
    ref_frames = _frame_signal(ref, cfg.window_samples, cfg.hop_samples) * window
    deg_frames = _frame_signal(deg, cfg.window_samples, cfg.hop_samples) * window
    if ref_frames.shape[0] == 0:
        raise AllSilent("reference too short to contain a single frame")

    norms = np.linalg.norm(ref_frames, axis=1)
    if norms.max() == 0.0:
        raise AllSilent("reference is digitally silent")
    with np.errstate(divide="ignore"):
        energies = 20.0 * np.log10(norms)
    keep = energies >= energies.max() - cfg.silence_dynamic_range
    if not keep.any():
        raise AllSilent("every reference frame is below the silence threshold")

    return (
        AudioBuffer(_overlap_add(ref_frames[keep], cfg.hop_samples), reference.sample_rate),
        AudioBuffer(_overlap_add(deg_frames[keep], cfg.hop_samples), degraded.sample_rate),
    )


def _overlap_add(frames: np.ndarray, hop: int) -> np.ndarray:
    n_frames, window = frames.shape
    out = np.zeros((n_frames - 1) * hop + window)
    for k in range(n_frames):
        out[k * hop : k * hop + window] += frames[k]
    return out


def stft_magnitude(audio: AudioBuffer, cfg: FrontEndConfig = FrontEndConfig()) -> MagnitudeSpectrogram:
    """Magnitude STFT: Hann-windowed frames zero-padded to ``fft_size``."""
    frames = _frame_signal(audio.samples, cfg.window_samples, cfg.hop_samples)
    spec = np.abs(np.fft.rfft(frames * _hann(cfg.window_samples), n=cfg.fft_size, axis=1))
    return MagnitudeSpectrogram(spec, cfg.hop_samples, cfg.window_samples)


def third_octave_bands(cfg: FrontEndConfig = FrontEndConfig()) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Band centers at lowest*2^(k/3), edges a sixth-octave either side.

    Returns (centers, edges, bin_masks) where bin_masks is bands x bins and
    selects the FFT bins nearest each band's edges, low edge inclusive.
    """
    k = np.arange(cfg.num_bands)
    centers = cfg.lowest_band_center * 2.0 ** (k / 3.0)
    low = cfg.lowest_band_center * 2.0 ** ((2 * k - 1) / 6.0)
    high = cfg.lowest_band_center * 2.0 ** ((2 * k + 1) / 6.0)
    edges = np.concatenate([low, high[-1:]])

    n_bins = cfg.fft_size // 2 + 1
    freqs = np.arange(n_bins) * cfg.analysis_rate / cfg.fft_size
    masks = np.zeros((cfg.num_bands, n_bins), dtype=bool)
    for i in range(cfg.num_bands):
        lo = int(np.argmin(np.abs(freqs - low[i])))
        hi = int(np.argmin(np.abs(freqs - high[i])))
        masks[i, lo:hi] = True
    return centers, edges, masks


def band_decompose(audio: AudioBuffer, cfg: FrontEndConfig = FrontEndConfig()) -> BandSpectrogram:
    """One-third-octave band energies: sqrt of summed squared magnitudes per band.

    The audio must already be at the analysis rate. Raises TooShort when the
    signal yields fewer frames than one correlation segment.
    """
    if audio.sample_rate != cfg.analysis_rate:
        raise ValueError(
            f"band_decompose expects audio at {cfg.analysis_rate} Hz, "
            f"got {audio.sample_rate} Hz (resample first)"
        )
    spec = stft_magnitude(audio, cfg)
    if spec.frames < cfg.segment_frames:
        raise TooShort(
            f"{spec.frames} frames < segment length {cfg.segment_frames}"
        )
    centers, edges, masks = third_octave_bands(cfg)
    power = spec.values**2
    energies = np.sqrt(power @ masks.T.astype(np.float64))
    return BandSpectrogram(energies, band_centers=centers, band_edges=edges)
