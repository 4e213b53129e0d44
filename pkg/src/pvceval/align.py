"""Dynamic-time-warping alignment of band-energy feature sequences.

Pathological utterances differ in timing from a healthy rendition of the
same sentence, so every cross-utterance comparison first warps the source
onto the reference timeline. Local cost is the Euclidean distance between
feature frames; steps are {(1,0),(0,1),(1,1)} with no global band
constraint (sentence-length inputs, potentially large tempo deviations).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import BandSpectrogram
from .errors import DimensionMismatch, EmptySequence, InvalidPath

LOG_FLOOR_DB = -30.0  # relative to the utterance's loudest band energy


@dataclass(frozen=True)
class FeatureSequence:
    """frames x d matrix of real-valued frame features."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1:
            raise EmptySequence("feature sequence needs at least one frame")
        if not np.all(np.isfinite(values)):
            raise ValueError("feature values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class AlignmentPath:
    """Monotone, continuous index pairing between two frame sequences."""

    steps: tuple  # ((i, j), ...) from (0, 0) to (m-1, n-1)
    total_cost: float


def dtw_features(bands: BandSpectrogram) -> FeatureSequence:
    """Log band energies floored at -30 dB below the utterance maximum,
    then mean/variance-normalized per dimension.

    Reuses the metric front end instead of a separate MFCC pipeline; the
    per-utterance normalization removes channel and level differences
    between recordings.
    """
    energies = bands.energies
    peak = energies.max()
    if peak <= 0.0:
        feats = np.zeros_like(energies)
    else:
        floor = peak * 10.0 ** (LOG_FLOOR_DB / 20.0)
        feats = 20.0 * np.log10(np.maximum(energies, floor))
    mean = feats.mean(axis=0)
    std = feats.std(axis=0)
    std[std == 0.0] = 1.0
    return FeatureSequence((feats - mean) / std)


def _dp_and_backtrace(local: np.ndarray) -> AlignmentPath:
    """Accumulate costs cell by cell and trace the optimal path back.

    Each cell adds its local cost to the min of its three predecessors, so
    the optimal total equals a plain left-to-right sum along the winning
    path (float-exact against enumeration oracles). Backtrace ties prefer
    diagonal, then the source-advancing step, then the reference step.
    """
    m, n = local.shape
    rows = local.tolist()
    inf = float("inf")
    acc = [[inf] * n for _ in range(m)]
    acc_prev = None
    for i in range(m):
        acc_row = acc[i]
        lrow = rows[i]
        if i == 0:
            acc_row[0] = lrow[0]
            for j in range(1, n):
                acc_row[j] = acc_row[j - 1] + lrow[j]
        else:
            acc_row[0] = acc_prev[0] + lrow[0]
            for j in range(1, n):
                best = acc_prev[j - 1]
                if acc_prev[j] < best:
                    best = acc_prev[j]
                if acc_row[j - 1] < best:
                    best = acc_row[j - 1]
                acc_row[j] = best + lrow[j]
        acc_prev = acc_row

    steps = [(m - 1, n - 1)]
    i, j = m - 1, n - 1
    while (i, j) != (0, 0):
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            diag = acc[i - 1][j - 1]
            up = acc[i - 1][j]
            left = acc[i][j - 1]
            best = min(diag, up, left)
            if diag == best:
                i -= 1
                j -= 1
            elif up == best:
                i -= 1
            else:
                j -= 1
        steps.append((i, j))
    steps.reverse()
    return AlignmentPath(steps=tuple(steps), total_cost=float(acc[m - 1][n - 1]))


def dtw(source: FeatureSequence, reference: FeatureSequence) -> AlignmentPath:
    """Minimum-cost monotone alignment with Euclidean local distances."""
    if source.dim != reference.dim:
        raise DimensionMismatch(
            f"feature dims differ: {source.dim} vs {reference.dim}"
        )
    x = source.values
    y = reference.values
    diff = x[:, None, :] - y[None, :, :]
    local = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return _dp_and_backtrace(local)


def dtw_cost_matrix(local: np.ndarray) -> AlignmentPath:
    """DTW over an explicit local-cost matrix."""
    local = np.asarray(local, dtype=np.float64)
    if local.ndim != 2 or local.size == 0:
        raise EmptySequence("cost matrix must be 2-D and non-empty")
    return _dp_and_backtrace(local)


def warp_to_reference(
    source: BandSpectrogram, path: AlignmentPath, reference_len: int
) -> BandSpectrogram:
    """Project a source band spectrogram onto the reference timeline.

    Output frame j is the arithmetic mean of all source frames paired with
    j on the alignment path, so the result always has reference_len frames.
    """
    steps = path.steps
    if not steps or steps[0] != (0, 0) or steps[-1] != (source.frames - 1, reference_len - 1):
        raise InvalidPath(
            f"path endpoints {steps[0] if steps else None}..{steps[-1] if steps else None} "
            f"do not span ({source.frames - 1}, {reference_len - 1})"
        )
    sums = np.zeros((reference_len, source.bands))
    counts = np.zeros(reference_len)
    for i, j in steps:
        if not (0 <= i < source.frames and 0 <= j < reference_len):
            raise InvalidPath(f"step ({i}, {j}) out of range")
        sums[j] += source.energies[i]
        counts[j] += 1
    if np.any(counts == 0):
        raise InvalidPath("path leaves reference frames unmapped")
    return BandSpectrogram(
        sums / counts[:, None],
        band_centers=source.band_centers,
        band_edges=source.band_edges,
    )
