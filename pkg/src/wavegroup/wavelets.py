"""Periodized orthonormal Daubechies DWT on dyadic grids, and wavelet supports.

Coefficients of a length ``N = 2**J`` signal are stored flat as
``[zeta, d_0, d_1 (2 values), ..., d_{J-1} (2**(J-1) values)]`` so detail
``(j, k)`` sits at offset ``2**j + k``.  Level ``j = 0`` is the coarsest detail.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Minimum-phase Daubechies lowpass filters (sum h = sqrt 2, sum h^2 = 1)
_DAUBECHIES = {
    2: (0.48296291314453414337, 0.83651630373780790558,
        0.22414386804201338103, -0.12940952255126038117),
    4: (0.23037781330889650086, 0.71484657055291564709,
        0.63088076792985890788, -0.027983769416859854211,
        -0.18703481171909308408, 0.030841381835560763627,
        0.032883011666885199735, -0.010597401785069032105),
}

SUPPORT_TOL = 1e-12


@dataclass(frozen=True)
class WaveletFilter:
    vanishing_moments: int
    lowpass: tuple

    @property
    def name(self) -> str:
        return f"db{self.vanishing_moments}"

    @property
    def length(self) -> int:
        return len(self.lowpass)

    @property
    def highpass(self) -> tuple:
        h = self.lowpass
        L = len(h)
        return tuple((-1) ** m * h[L - 1 - m] for m in range(L))


def daubechies(vanishing_moments: int) -> WaveletFilter:
    if vanishing_moments not in _DAUBECHIES:
        raise ValueError("only Daubechies filters with 2 or 4 vanishing moments are available")
    return WaveletFilter(vanishing_moments, _DAUBECHIES[vanishing_moments])


def get_filter(name) -> WaveletFilter:
    """Resolve ``'db2'``/``'db4'`` (or a ``WaveletFilter``) to a filter."""
    if isinstance(name, WaveletFilter):
        return name
    name = str(name).lower()
    if name not in ("db2", "db4"):
        raise ValueError(f"unknown wavelet filter {name!r} (expected db2 or db4)")
    return daubechies(int(name[2:]))


def n_levels(N: int) -> int:
    """Return ``J`` with ``N == 2**J``; raise if ``N`` is not dyadic."""
    N = int(N)
    if N < 2 or N & (N - 1):
        raise ValueError(f"length must be 2^J (got {N})")
    return N.bit_length() - 1


@dataclass
class WaveletDecomposition:
    """Scaling coefficient(s) and per-level details.

    ``scaling`` has the batch shape of the input (a float for one signal);
    ``details[j]`` has shape ``batch + (2**j,)``.
    """

    scaling: np.ndarray
    details: list

    @property
    def N(self) -> int:
        return 2 ** len(self.details)

    @property
    def J(self) -> int:
        return len(self.details)

    def to_vector(self) -> np.ndarray:
        """Flat layout ``[zeta, d_0, ..., d_{J-1}]`` along the last axis."""
        zeta = np.asarray(self.scaling)[..., None]
        return np.concatenate([zeta] + [np.asarray(d) for d in self.details], axis=-1)

    @classmethod
    def from_vector(cls, vec) -> "WaveletDecomposition":
        vec = np.asarray(vec, dtype=np.float64)
        J = n_levels(vec.shape[-1])
        details = [vec[..., 2**j: 2**(j + 1)].copy() for j in range(J)]
        scaling = vec[..., 0].copy()
        return cls(scaling if scaling.ndim else float(scaling), details)


def _check_length(N, filt):
    J = n_levels(N)
    if N < filt.length:
        raise ValueError(f"signal length {N} is shorter than the filter ({filt.length})")
    return J


def dwt(signal, filt="db4") -> WaveletDecomposition:
    """Full-depth periodized DWT along the last axis."""
    filt = get_filter(filt)
    x = np.asarray(signal, dtype=np.float64)
    _check_length(x.shape[-1], filt)
    h = np.asarray(filt.lowpass)
    g = np.asarray(filt.highpass)
    L = filt.length
    details = []
    a = x
    while a.shape[-1] > 1:
        n = a.shape[-1]
        idx = (2 * np.arange(n // 2)[:, None] + np.arange(L)[None, :]) % n
        blocks = a[..., idx]
        details.append(blocks @ g)
        a = blocks @ h
    details.reverse()
    scaling = a[..., 0]
    return WaveletDecomposition(scaling if scaling.ndim else float(scaling), details)


def idwt(coeffs: WaveletDecomposition, filt="db4") -> np.ndarray:
    """Inverse of :func:`dwt`."""
    filt = get_filter(filt)
    details = [np.asarray(d, dtype=np.float64) for d in coeffs.details]
    for j, d in enumerate(details):
        if d.shape[-1] != 2**j:
            raise ValueError(f"level {j} holds {d.shape[-1]} coefficients, expected {2**j}")
    _check_length(2 ** len(details), filt)
    h = filt.lowpass
    g = filt.highpass
    a = np.asarray(coeffs.scaling, dtype=np.float64)[..., None]
    for d in details:
        if d.shape[:-1] != a.shape[:-1]:
            raise ValueError("inconsistent batch shapes in decomposition")
        half = a.shape[-1]
        n = 2 * half
        out = np.zeros(a.shape[:-1] + (n,))
        base = 2 * np.arange(half)
        for m in range(len(h)):
            pos = (base + m) % n
            # pos can repeat when n < filter length
            np.add.at(out, (..., pos), h[m] * a + g[m] * d)
        a = out
    return a


def dwt_vector(signal, filt="db4") -> np.ndarray:
    return dwt(signal, filt).to_vector()


def idwt_vector(vec, filt="db4") -> np.ndarray:
    return idwt(WaveletDecomposition.from_vector(vec), filt)


@lru_cache(maxsize=32)
def _basis(N: int, name: str) -> np.ndarray:
    # row c is the sampled basis function of flat coefficient c
    basis = idwt_vector(np.eye(N), name)
    basis.setflags(write=False)
    return basis


def basis_matrix(N: int, filt="db4") -> np.ndarray:
    """Sampled basis functions (rows, flat coefficient order) synthesized by :func:`idwt`."""
    filt = get_filter(filt)
    _check_length(N, filt)
    return _basis(int(N), filt.name)


def grid_index(t, N: int) -> int:
    """Map a grid time ``t_l = l / N`` (``l = 1..N``) to the sample index ``l - 1``."""
    ell = float(t) * N
    r = int(round(ell))
    if abs(ell - r) > 1e-9 or not 1 <= r <= N:
        raise ValueError(f"time {t} is not on the sampling grid t_l = l/{N}")
    return r - 1


def grid_time(index: int, N: int) -> float:
    return (index + 1) / N


def _support_at(index: int, N: int, name: str) -> frozenset:
    column = _basis(N, name)[:, index]
    active = np.flatnonzero(np.abs(column[1:]) > SUPPORT_TOL) + 1
    out = []
    for c in active:
        j = int(c).bit_length() - 1
        out.append((j, int(c) - 2**j))
    return frozenset(out)


def wavelet_support(t, filt, J: int) -> frozenset:
    """Indices ``(j, k)`` of the wavelets that are non-null at grid time ``t``."""
    filt = get_filter(filt)
    N = 2**J
    _check_length(N, filt)
    return _support_at(grid_index(t, N), N, filt.name)


def interval_support(a, b, filt, J: int) -> frozenset:
    """Wavelets non-null at every grid time in ``[a, b]``."""
    filt = get_filter(filt)
    N = 2**J
    _check_length(N, filt)
    indices = grid_indices_between(a, b, N)
    sets = [_support_at(i, N, filt.name) for i in indices]
    return frozenset.intersection(*sets)


def grid_indices_between(a, b, N: int) -> list:
    if a > b:
        raise ValueError("interval bounds must satisfy a <= b")
    lo = int(np.ceil(a * N - 1e-9))
    hi = int(np.floor(b * N + 1e-9))
    lo, hi = max(lo, 1), min(hi, N)
    if lo > hi:
        raise ValueError(f"interval [{a}, {b}] contains no grid time")
    return list(range(lo - 1, hi))
