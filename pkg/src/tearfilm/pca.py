"""Principal component analysis for compressing intensity inputs and
thickness/osmolarity outputs to small coefficient vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Singular values below this fraction of the largest are treated as zero.
RANK_RTOL = 1e-12


class RankDeficientError(ValueError):
    """Requested more components than the data supports."""


@dataclass
class PcaModel:
    """Affine compression y ~ mean + basis @ x with orthonormal basis columns."""

    mean: np.ndarray    # (n,)
    basis: np.ndarray   # (n, k), orthonormal columns
    k: int

    @property
    def n(self) -> int:
        return self.mean.size


def fit(x: np.ndarray, k: int) -> PcaModel:
    """Fit a k-component PCA to the rows of x.

    Components are the top left singular directions of the centered data,
    ordered by decreasing singular value. Each basis column is sign-fixed so
    its largest-magnitude entry is positive, making the fit deterministic.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError("x must be a 2-d row matrix")
    rows, n = x.shape
    if not 1 <= k <= min(rows, n):
        raise ValueError(f"k={k} out of range for a {rows}x{n} matrix")
    mean = x.mean(axis=0)
    centered = x - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    rank = int(np.sum(s > RANK_RTOL * s[0])) if s.size and s[0] > 0.0 else 0
    if k > rank:
        raise RankDeficientError(f"data has rank {rank}; at most k={rank} attainable")
    basis = vt[:k].T.copy()
    for col in basis.T:
        if col[np.argmax(np.abs(col))] < 0.0:
            col *= -1.0
    return PcaModel(mean=mean, basis=basis, k=k)


def compress(m: PcaModel, y: np.ndarray) -> np.ndarray:
    """Coefficients of y (or rows of y) in the PCA basis."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != m.n:
        raise ValueError(f"expected length {m.n}, got {y.shape[-1]}")
    return (y - m.mean) @ m.basis


def reconstruct(m: PcaModel, x: np.ndarray) -> np.ndarray:
    """Signal (or rows of signals) for coefficient vector(s) x."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != m.k:
        raise ValueError(f"expected {m.k} coefficients, got {x.shape[-1]}")
    return m.mean + x @ m.basis.T


def reconstruction_mse(m: PcaModel, x: np.ndarray) -> float:
    """Mean squared reconstruction error of the rows of x under m."""
    x = np.asarray(x, dtype=float)
    err = x - reconstruct(m, compress(m, x))
    return float(np.mean(err**2))
