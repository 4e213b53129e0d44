"""Evaluation toolkit for pathological voice conversion research.

Objective severity metrics (P-STOI / P-ESTOI, phoneme error rate),
speaker-embedding similarity and EER analysis, rating statistics, and a
CLI that regenerates result tables from metric outputs or fixtures.
"""

__version__ = "0.1.0"

from .audio import (
    AudioBuffer,
    BandSpectrogram,
    FrontEndConfig,
    MagnitudeSpectrogram,
    band_decompose,
    load_wav,
    remove_silent_frames,
    resample,
    write_wav,
)
from .align import AlignmentPath, FeatureSequence, dtw, dtw_features, warp_to_reference
from .intelligibility import (
    IntelligibilityScore,
    ReferenceModel,
    SpeakerSeverityScore,
    build_reference,
    estoi,
    p_estoi_speaker,
    p_estoi_utterance,
    p_stoi_utterance,
    stoi,
)
from .phonemes import (
    EditSummary,
    PhonemeSequence,
    edit_align,
    per_speaker,
    per_table,
    read_transcripts,
    write_transcripts,
)
from .verification import (
    EerResult,
    EmbeddingRecord,
    Trial,
    build_trials,
    cosine_similarity,
    eer,
    eer_table,
    read_embeddings,
    write_embeddings,
)
from .stats import (
    CorrelationResult,
    MosSummary,
    RatingMatrix,
    RatingScale,
    aggregate_severity,
    interrater_correlation,
    likert_to_percent,
    mos_aggregate,
    pearson,
    read_rating_matrix,
)
from .corpus import (
    CorpusManifest,
    SpeakerRecord,
    StageInfo,
    load_manifest,
    partition_sentences,
    save_manifest,
    select_utterances,
    serialize_manifest,
)
