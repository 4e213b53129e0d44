"""Short-time objective intelligibility scoring and its pathological variants.

``stoi``/``estoi`` compare a degraded signal against a time-aligned clean
reference. The pathological variants have no aligned reference: a healthy
reference representation is built per sentence from control-speaker
utterances, the pathological utterance is warped onto its timeline by DTW,
and the (E)STOI correlation body runs on the aligned band spectrograms.
Per-utterance scores averaged per speaker/stage give the severity score.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .align import dtw, dtw_features, warp_to_reference
from .audio import (
    AudioBuffer,
    BandSpectrogram,
    FrontEndConfig,
    band_decompose,
    remove_silent_frames,
    resample,
)
from .errors import EmptyControlSet, EmptyInput, MixedSpeakers

_EPS = np.finfo(np.float64).eps

METRIC_STOI = "STOI"
METRIC_ESTOI = "ESTOI"
METRIC_P_STOI = "P-STOI"
METRIC_P_ESTOI = "P-ESTOI"


@dataclass(frozen=True)
class IntelligibilityScore:
    value: float
    metric: str
    utterance_id: str = ""
    speaker_id: str = ""


@dataclass(frozen=True)
class SpeakerSeverityScore:
    speaker_id: str
    stage: str
    value: float
    utterance_count: int


@dataclass(frozen=True)
class ReferenceModel:
    """Healthy band-spectrogram reference for one sentence."""

    sentence_id: str
    bands: BandSpectrogram

    @property
    def frames(self) -> int:
        return self.bands.frames


def front_end(
    audio: AudioBuffer, cfg: FrontEndConfig = FrontEndConfig(), vad: bool = True
) -> BandSpectrogram:
    """Resample to the analysis rate, optionally strip silence, decompose."""
    resampled = resample(audio, cfg.analysis_rate)
    if vad:
        resampled, _ = remove_silent_frames(resampled, resampled, cfg)
    return band_decompose(resampled, cfg)


def _segment_stack(bands: np.ndarray, n: int) -> np.ndarray:
    """All length-n sliding windows: (segments, bands, n)."""
    return np.lib.stride_tricks.sliding_window_view(bands, n, axis=0)


def _stoi_body(clean: np.ndarray, degraded: np.ndarray, cfg: FrontEndConfig) -> float:
    """Clipped per-band correlation averaged over segments and bands.

    Within each 30-frame segment the degraded band vector is rescaled to
    the clean vector's energy and clipped at the configured bound before
    correlating, which caps the reward for severely distorted vectors.
    """
    x = _segment_stack(clean, cfg.segment_frames)
    y = _segment_stack(degraded, cfg.segment_frames)

    alpha = np.linalg.norm(x, axis=2, keepdims=True) / (
        np.linalg.norm(y, axis=2, keepdims=True) + _EPS
    )
    y = y * alpha
    clip_gain = 1.0 + 10.0 ** (cfg.clip_bound_db / 20.0)
    y = np.minimum(y, x * clip_gain)

    x = x - x.mean(axis=2, keepdims=True)
    y = y - y.mean(axis=2, keepdims=True)
    x = x / (np.linalg.norm(x, axis=2, keepdims=True) + _EPS)
    y = y / (np.linalg.norm(y, axis=2, keepdims=True) + _EPS)
    return float(np.sum(x * y) / (x.shape[0] * x.shape[1]))


def _row_col_normalize(seg: np.ndarray) -> np.ndarray:
    """Zero-mean unit-norm rows (band envelopes), then columns (frame spectra)."""
    seg = seg - seg.mean(axis=2, keepdims=True)
    seg = seg / (np.linalg.norm(seg, axis=2, keepdims=True) + _EPS)
    seg = seg - seg.mean(axis=1, keepdims=True)
    seg = seg / (np.linalg.norm(seg, axis=1, keepdims=True) + _EPS)
    return seg


def _estoi_body(clean: np.ndarray, degraded: np.ndarray, cfg: FrontEndConfig) -> float:
    """Unclipped doubly-normalized segment correlation.

    Each 30-frame segment is normalized along band envelopes and then along
    frame spectra; the segment score is the summed elementwise product over
    the segment divided by the segment length, i.e. the mean inner product
    of the unit-norm frame-spectrum columns. Result lies in [-1, 1].
    """
    x = _row_col_normalize(_segment_stack(clean, cfg.segment_frames))
    y = _row_col_normalize(_segment_stack(degraded, cfg.segment_frames))
    per_segment = np.sum(x * y, axis=(1, 2)) / cfg.segment_frames
    return float(per_segment.mean())


def _paired_bands(
    reference: AudioBuffer, degraded: AudioBuffer, cfg: FrontEndConfig
) -> tuple[np.ndarray, np.ndarray]:
    if reference.sample_rate != degraded.sample_rate:
        raise ValueError("reference and degraded must share a sample rate")
    ref = resample(reference, cfg.analysis_rate)
    deg = resample(degraded, cfg.analysis_rate)
    ref, deg = remove_silent_frames(ref, deg, cfg)
    xb = band_decompose(ref, cfg)
    yb = band_decompose(deg, cfg)
    return xb.energies, yb.energies


def stoi(
    reference: AudioBuffer,
    degraded: AudioBuffer,
    cfg: FrontEndConfig = FrontEndConfig(),
    utterance_id: str = "",
    speaker_id: str = "",
) -> IntelligibilityScore:
    """STOI between a clean reference and a time-aligned degraded signal."""
    x, y = _paired_bands(reference, degraded, cfg)
    return IntelligibilityScore(_stoi_body(x, y, cfg), METRIC_STOI, utterance_id, speaker_id)


def estoi(
    reference: AudioBuffer,
    degraded: AudioBuffer,
    cfg: FrontEndConfig = FrontEndConfig(),
    utterance_id: str = "",
    speaker_id: str = "",
) -> IntelligibilityScore:
    """Extended STOI between a clean reference and a time-aligned degraded signal."""
    x, y = _paired_bands(reference, degraded, cfg)
    return IntelligibilityScore(_estoi_body(x, y, cfg), METRIC_ESTOI, utterance_id, speaker_id)


def build_reference(
    controls: Sequence[AudioBuffer],
    cfg: FrontEndConfig = FrontEndConfig(),
    sentence_id: str = "",
) -> ReferenceModel:
    """Average the control utterances of one sentence into a reference model.

    The control with the median duration anchors the timeline; every other
    control is DTW-warped onto it and the band spectrograms are averaged
    frame-wise. All supplied controls contribute (no gender matching).
    """
    if not controls:
        raise EmptyControlSet("need at least one control utterance")
    order = sorted(range(len(controls)), key=lambda i: (controls[i].duration, i))
    pivot_idx = order[(len(order) - 1) // 2]

    band_reps = [front_end(c, cfg) for c in controls]
    pivot = band_reps[pivot_idx]
    pivot_feats = dtw_features(pivot)

    stack = [pivot.energies]
    for i, rep in enumerate(band_reps):
        if i == pivot_idx:
            continue
        path = dtw(dtw_features(rep), pivot_feats)
        stack.append(warp_to_reference(rep, path, pivot.frames).energies)
    mean_energies = np.mean(stack, axis=0)
    return ReferenceModel(
        sentence_id,
        BandSpectrogram(mean_energies, band_centers=pivot.band_centers, band_edges=pivot.band_edges),
    )


def _p_score(
    patho: AudioBuffer, ref: ReferenceModel, cfg: FrontEndConfig, body
) -> float:
    bands = front_end(patho, cfg)
    path = dtw(dtw_features(bands), dtw_features(ref.bands))
    warped = warp_to_reference(bands, path, ref.frames)
    return body(ref.bands.energies, warped.energies, cfg)


def p_estoi_utterance(
    patho: AudioBuffer,
    ref: ReferenceModel,
    cfg: FrontEndConfig = FrontEndConfig(),
    utterance_id: str = "",
    speaker_id: str = "",
) -> IntelligibilityScore:
    """P-ESTOI of one pathological utterance against a healthy reference."""
    value = _p_score(patho, ref, cfg, _estoi_body)
    return IntelligibilityScore(value, METRIC_P_ESTOI, utterance_id, speaker_id)


def p_stoi_utterance(
    patho: AudioBuffer,
    ref: ReferenceModel,
    cfg: FrontEndConfig = FrontEndConfig(),
    utterance_id: str = "",
    speaker_id: str = "",
) -> IntelligibilityScore:
    """P-STOI variant: same alignment pipeline, clipped correlation body."""
    value = _p_score(patho, ref, cfg, _stoi_body)
    return IntelligibilityScore(value, METRIC_P_STOI, utterance_id, speaker_id)


def p_estoi_speaker(
    scores: Sequence[IntelligibilityScore], stage: str = ""
) -> SpeakerSeverityScore:
    """Unweighted mean of one speaker's per-utterance scores."""
    if not scores:
        raise EmptyInput("no utterance scores to average")
    speakers = {s.speaker_id for s in scores}
    if len(speakers) > 1:
        raise MixedSpeakers(f"scores span several speakers: {sorted(speakers)}")
    value = float(np.mean([s.value for s in scores]))
    return SpeakerSeverityScore(scores[0].speaker_id, stage, value, len(scores))
