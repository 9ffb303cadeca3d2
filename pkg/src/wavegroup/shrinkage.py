"""Wavelet hard thresholding for one curve, the mean of iid curves, and
simultaneous shrinkage of ``n`` independent curves."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import wavelets
from .wavelets import WaveletDecomposition

MAD_NORMALISATION = 0.6745


@dataclass(frozen=True)
class ShrinkageConfig:
    q: float = 0.05
    sigma: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ValueError("q must lie in (0, 1)")
        if self.sigma is not None and self.sigma < 0:
            raise ValueError("sigma must be non-negative")


@dataclass
class ShrinkageResult:
    kept: frozenset          # (j, k) pairs whose coefficient vector survives
    norms: np.ndarray        # flat layout; entry 0 (zeta) is unused
    threshold: float
    sigma_hat: float
    q: float

    def kept_mask(self) -> np.ndarray:
        """Boolean mask over the flat layout; the scaling entry is always kept."""
        mask = np.zeros(self.norms.shape[0], dtype=bool)
        mask[0] = True
        for j, k in self.kept:
            mask[2**j + k] = True
        return mask

    def manifest(self) -> dict:
        return {"threshold": self.threshold, "sigma_hat": self.sigma_hat, "q": self.q,
                "kept": sorted([list(jk) for jk in self.kept])}


def mad_sigma(finest) -> float:
    """Median absolute deviation estimate of the noise level."""
    x = np.asarray(finest, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("MAD of an empty sample")
    return float(np.median(np.abs(x - np.median(x))) / MAD_NORMALISATION)


def universal_threshold(N: int, sigma: float) -> float:
    if N < 2:
        raise ValueError("N must be >= 2")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    return sigma * math.sqrt(2.0 * math.log(N))


def joint_threshold(N: int, n: int, q: float, sigma_hat: float) -> float:
    """Threshold on the n-vector norm keeping P(any null (j,k) survives) <= q."""
    if N < 2 or n < 1:
        raise ValueError("need N >= 2 and n >= 1")
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    x = math.log(N / q)
    return sigma_hat * math.sqrt(2.0 * x + 2.0 * math.sqrt(n * x) + n)


def hard_threshold_single(decomp: WaveletDecomposition, delta: float) -> WaveletDecomposition:
    if delta < 0:
        raise ValueError("threshold must be non-negative")
    details = [np.where(np.abs(d) > delta, d, 0.0) for d in decomp.details]
    return WaveletDecomposition(decomp.scaling, details)


def mean_signal_shrink(curves, filt="db4", sigma: Optional[float] = None) -> WaveletDecomposition:
    """Hard-threshold the DWT of the mean of ``n`` iid curves.

    ``sigma`` is the per-curve noise level; when omitted it is MAD-estimated
    from the finest level of all curves.
    """
    curves = np.asarray(curves, dtype=np.float64)
    if curves.ndim != 2:
        raise ValueError("curves must be an n x N array of equal-length curves")
    n, N = curves.shape
    if sigma is None:
        sigma = mad_sigma(wavelets.dwt(curves, filt).details[-1])
    mean = wavelets.dwt(curves.mean(axis=0), filt)
    return hard_threshold_single(mean, sigma / math.sqrt(n) * math.sqrt(2.0 * math.log(N)))


def simultaneous_shrink(coeffs, config: ShrinkageConfig = ShrinkageConfig()) -> ShrinkageResult:
    """Keep detail ``(j, k)`` for all curves iff its n-vector norm exceeds the joint threshold.

    ``coeffs`` is an ``n x N`` matrix of flat decompositions of one variable.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.ndim != 2 or coeffs.shape[0] == 0:
        raise ValueError("need an n x N coefficient matrix with n >= 1")
    n, N = coeffs.shape
    J = wavelets.n_levels(N)
    sigma = config.sigma
    if sigma is None:
        sigma = mad_sigma(coeffs[:, N // 2:])
    delta = joint_threshold(N, n, config.q, sigma)
    norms = np.sqrt(np.sum(coeffs**2, axis=0))
    kept = frozenset((j, k) for j in range(J) for k in range(2**j) if norms[2**j + k] > delta)
    return ShrinkageResult(kept, norms, delta, float(sigma), config.q)


def apply_shrinkage(coeffs, result: ShrinkageResult) -> np.ndarray:
    """Zero the dropped coefficient vectors (scaling column untouched)."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    return np.where(result.kept_mask()[None, :], coeffs, 0.0)


def manifest_json(results: dict) -> str:
    return json.dumps({name: r.manifest() for name, r in results.items()}, indent=1)
