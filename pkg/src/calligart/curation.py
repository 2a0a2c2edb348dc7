"""Candidate curation by Fréchet distance against real reference glyphs.

Candidates are scored in groups: a single image has no distribution, so each
candidate's score is the Fréchet distance between the reference stats and the
stats of the ``group_size`` candidates nearest to it in feature space (itself
included). ``group_size == len(candidates)`` degrades to whole-batch scoring.
Scores are only comparable within one feature extractor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np
import torch
import torch.nn.functional as F


class CurationError(Exception):
    pass


class FeatureExtractor(Protocol):
    id: str
    dimension: int

    def extract(self, images: np.ndarray) -> np.ndarray: ...


class RandomConvFeatures:
    """Fixed-seed random convolutional projector; deterministic, no downloads.

    Not a trained perceptual network: random convolutions still preserve
    enough image statistics to separate structured glyphs from noise, which
    is all desk-scale curation needs.
    """

    def __init__(self, dimension: int = 32, seed: int = 0):
        self.id = f"randconv-{dimension}-{seed}"
        self.dimension = dimension
        g = torch.Generator().manual_seed(seed)
        self._w1 = torch.randn(8, 1, 3, 3, generator=g) / 9.0
        self._w2 = torch.randn(16, 8, 3, 3, generator=g) / 72.0
        self._proj = torch.randn(16 * 16, dimension, generator=g) / 16.0

    def extract(self, images: np.ndarray) -> np.ndarray:
        x = torch.from_numpy(np.asarray(images, dtype=np.float64)).float().unsqueeze(1)
        with torch.no_grad():
            h = F.relu(F.conv2d(x, self._w1, stride=2, padding=1))
            h = F.relu(F.conv2d(h, self._w2, stride=2, padding=1))
            h = F.adaptive_avg_pool2d(h, 4).flatten(1)
            out = h @ self._proj
        return out.numpy().astype(np.float64)


@dataclass(frozen=True)
class DistributionStats:
    """Gaussian fit (mean, covariance) of a feature sample."""

    mean: np.ndarray
    covariance: np.ndarray
    sample_count: int

    def __post_init__(self):
        if self.sample_count < 2:
            raise ValueError("sample_count must be >= 2")
        if not np.allclose(self.covariance, self.covariance.T, atol=1e-8):
            raise ValueError("covariance must be symmetric")


def stats(features: np.ndarray) -> DistributionStats:
    """Column mean and unbiased sample covariance of an n x d feature matrix."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 2:
        raise CurationError("stats needs an n x d matrix with n >= 2")
    mean = features.mean(axis=0)
    cov = np.cov(features, rowvar=False, ddof=1)
    cov = np.atleast_2d(cov)
    cov = (cov + cov.T) / 2.0
    return DistributionStats(mean=mean, covariance=cov, sample_count=features.shape[0])


_EIG_CLAMP = 1e-6


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    """Square root of a symmetric PSD matrix, clamping eigenvalue dust at zero."""
    vals, vecs = np.linalg.eigh(matrix)
    vals = np.where(vals < 0, 0.0, vals)
    return (vecs * np.sqrt(vals)) @ vecs.T


def frechet_distance(a: DistributionStats, b: DistributionStats) -> float:
    """||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2}).

    The cross-covariance square root is computed as sqrt(sqrt(S_a) S_b sqrt(S_a)),
    which is symmetric PSD and shares its trace with (S_a S_b)^{1/2}.
    """
    if a.mean.shape != b.mean.shape:
        raise CurationError(
            f"dimension mismatch: {a.mean.shape[0]} vs {b.mean.shape[0]}")
    diff = a.mean - b.mean
    sqrt_a = _psd_sqrt(a.covariance)
    inner = sqrt_a @ b.covariance @ sqrt_a
    inner = (inner + inner.T) / 2.0
    cross = _psd_sqrt(inner)
    value = float(diff @ diff + np.trace(a.covariance) + np.trace(b.covariance)
                  - 2.0 * np.trace(cross))
    if not np.isfinite(value):
        raise CurationError("non-finite Fréchet distance")
    if value < 0:
        if value < -_EIG_CLAMP:
            raise CurationError(f"Fréchet distance significantly negative: {value}")
        value = 0.0
    return value


@dataclass
class CurationResult:
    chosen_index: int
    chosen_image: np.ndarray
    scores: list[float]
    extractor_id: str = ""
    group_size: int = 0
    metadata: dict = field(default_factory=dict)


def curate(candidates: Sequence[np.ndarray], reference: Sequence[np.ndarray],
           extractor: FeatureExtractor, group_size: int = 10) -> CurationResult:
    """Score every candidate's nearest-neighbor group against the reference
    distribution and keep the lowest score (ties: lowest index)."""
    n = len(candidates)
    if n < 2 or group_size < 2 or group_size > n:
        raise CurationError(
            f"need len(candidates) >= group_size >= 2, got {n} and {group_size}")
    if len(reference) < 2:
        raise CurationError("need at least 2 reference images")

    cand_feats = extractor.extract(np.stack(candidates))
    ref_stats = stats(extractor.extract(np.stack(reference)))

    # pairwise feature distances between candidates
    sq = (cand_feats ** 2).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * cand_feats @ cand_feats.T

    scores = []
    for i in range(n):
        group = np.argsort(d2[i], kind="stable")[:group_size]
        scores.append(frechet_distance(stats(cand_feats[group]), ref_stats))

    chosen = int(np.argmin(scores))
    return CurationResult(
        chosen_index=chosen,
        chosen_image=np.asarray(candidates[chosen]),
        scores=scores,
        extractor_id=extractor.id,
        group_size=group_size,
    )
