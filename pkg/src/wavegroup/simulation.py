"""Seeded data-generating processes for the functional and tabular experiments.

Functional covariates are simulated in the wavelet domain and mapped to
curves with the inverse DWT (db4).  All Gaussian draws come from a Philox
``numpy.random.Generator`` keyed by the seed (see :data:`GENERATOR`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import wavelets
from ._rng import FOREST, REPLICATE, SIMULATION, derive_seed, stream
from .forest import Dataset, ForestConfig, fit_forest
from .groups import CoefficientLayout, time_family
from .importance import importance_table

GENERATOR = "numpy.random.Generator(Philox(SeedSequence([seed, 6, ...])))/normal"
SIM_FILTER = "db4"
EXP1_INTERVAL = (50, 55)       # T* = [t_50, t_55]
RESIDUAL_FLOOR = 0.05


def tau(j) -> np.ndarray:
    """Prior standard deviation of the level-``j`` signal coefficients."""
    return np.exp(-(np.asarray(j, dtype=np.float64) - 1.0))


def logistic(z):
    return 1.0 / (1.0 + np.exp(-z))


@dataclass
class SimulatedPanel:
    curves: np.ndarray              # n x p x N
    response: np.ndarray
    layout: CoefficientLayout
    relevant: list                  # ground-truth relevant group labels
    coefficients: np.ndarray = field(repr=False, default=None)   # simulated n x p x N
    metadata: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.curves.shape[0]

    def design(self, filt=SIM_FILTER) -> Dataset:
        """Dataset whose columns are the DWT coefficients of the curves."""
        coeffs = wavelets.dwt_vector(self.curves, filt)
        X = coeffs.reshape(self.n, -1)
        return Dataset(X, self.response, self.layout.column_names())


def _signal_coefficients(rng, n, J, sigma, jstar, z_shift_zeta, z_shift_detail):
    """One functional variable: ``zeta_i = w0 + shift + sigma*eta`` and
    ``xi_ijk = w_jk + shift + sigma*eta`` for ``j <= jstar`` (zero above)."""
    N = 2**J
    out = np.zeros((n, N))
    omega0 = rng.normal(3.0, 1.0)
    out[:, 0] = omega0 + z_shift_zeta + sigma * rng.normal(size=n)
    top = 2 ** (jstar + 1)       # flat offsets [1, top) hold levels 0..jstar
    levels = np.floor(np.log2(np.arange(1, top))).astype(int)
    omega = rng.normal(size=top - 1) * tau(levels)
    out[:, 1:top] = omega[None, :] + z_shift_detail[:, 1:top] + sigma * rng.normal(size=(n, top - 1))
    return out, omega0, omega


@dataclass
class GeneralDesign:
    """Wavelet-domain design with ``Z = Y``, ``Y ~ N(0, y_variance)``.

    ``theta`` holds one strength per detail level (levels beyond its length
    have no link); ``link`` is ``'linear'``, ``'logistic'`` or ``'none'``.
    """

    n: int = 1000
    J: int = 8
    p: int = 1
    sigma: float = 0.05
    jstar: int = 7
    link: str = "linear"
    theta: tuple = (0.1, 0.07, 0.04, 0.01)
    theta_zeta: float = 0.1
    y_variance: float = 3.0

    def __post_init__(self):
        if self.n < 2 or self.J < 1 or self.p < 1:
            raise ValueError("invalid dimensions")
        if not 0 <= self.jstar <= self.J - 1:
            raise ValueError("jstar must lie in [0, J-1]")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.link not in ("linear", "logistic", "none"):
            raise ValueError(f"unknown link {self.link!r}")
        if 2**self.J < wavelets.get_filter(SIM_FILTER).length:
            raise ValueError("curves shorter than the simulation filter")


def _link(link, z):
    if link == "linear":
        return z
    if link == "logistic":
        return logistic(z)
    return np.zeros_like(z)


def simulate_general(design: GeneralDesign, seed: int) -> SimulatedPanel:
    rng = stream(seed, SIMULATION)
    n, J, N = design.n, design.J, 2**design.J
    y = rng.normal(0.0, math.sqrt(design.y_variance), size=n)
    g = _link(design.link, y)
    theta_flat = np.zeros(N)
    for j, th in enumerate(design.theta[: design.jstar + 1]):
        theta_flat[2**j: 2 ** (j + 1)] = th
    coeffs = np.empty((n, design.p, N))
    for u in range(design.p):
        c, _, _ = _signal_coefficients(rng, n, J, design.sigma, design.jstar,
                                       design.theta_zeta * g, g[:, None] * theta_flat[None, :])
        coeffs[:, u, :] = c
    curves = wavelets.idwt_vector(coeffs, SIM_FILTER)
    layout = CoefficientLayout(design.p, J)
    relevant = []
    if design.link != "none":
        relevant = ["G_zeta"] + [f"G({j})" for j, th in enumerate(design.theta[: design.jstar + 1])
                                 if th != 0]
    meta = {"design": "general", "n": n, "J": J, "p": design.p, "sigma": design.sigma,
            "jstar": design.jstar, "link": design.link, "theta": list(design.theta),
            "theta_zeta": design.theta_zeta, "seed": seed, "generator": GENERATOR}
    return SimulatedPanel(curves, y, layout, relevant, coeffs, meta)


def experiment1_sim1(seed: int, n: int = 1000, sigma: float = 0.01, J: int = 8,
                     jstar: int = 7) -> SimulatedPanel:
    """Linear link on the coefficients supported on the whole of ``T*``."""
    rng = stream(seed, SIMULATION)
    N = 2**J
    y = rng.normal(0.0, math.sqrt(3.0), size=n)
    a, b = EXP1_INTERVAL
    support = wavelets.interval_support(a / N, b / N, SIM_FILTER, J)
    mask = np.zeros(N)
    for j, k in support:
        mask[2**j + k] = 1.0
    c, _, _ = _signal_coefficients(rng, n, J, sigma, jstar, y, y[:, None] * mask[None, :])
    coeffs = c[:, None, :]
    curves = wavelets.idwt_vector(coeffs, SIM_FILTER)
    meta = {"design": "exp1s1", "n": n, "J": J, "sigma": sigma, "jstar": jstar,
            "interval": [a, b], "support": sorted([list(s) for s in support]),
            "seed": seed, "generator": GENERATOR}
    return SimulatedPanel(curves, y, CoefficientLayout(1, J), ["T*"], coeffs, meta)


def oscillation(curves, a: int = EXP1_INTERVAL[0], b: int = EXP1_INTERVAL[1]) -> np.ndarray:
    """``(1000/|T|) * sum_{t_l in T} |X(t_l) - X(t_{l-1})|`` for grid labels ``l = a..b``."""
    curves = np.asarray(curves)
    idx = np.arange(a - 1, b)            # sample index of t_l is l - 1
    diffs = np.abs(curves[..., idx] - curves[..., idx - 1])
    return 1000.0 / idx.size * diffs.sum(axis=-1)


def experiment1_sim2(seed: int, n: int = 1000, sigma: float = 0.01, J: int = 8,
                     jstar: int = 7) -> SimulatedPanel:
    """Linkless curves; the outcome measures their oscillation on ``T*``."""
    rng = stream(seed, SIMULATION)
    N = 2**J
    zero = np.zeros(n)
    c, _, _ = _signal_coefficients(rng, n, J, sigma, jstar, zero, np.zeros((n, N)))
    coeffs = c[:, None, :]
    curves = wavelets.idwt_vector(coeffs, SIM_FILTER)
    y = oscillation(curves[:, 0, :])
    meta = {"design": "exp1s2", "n": n, "J": J, "sigma": sigma, "jstar": jstar,
            "interval": list(EXP1_INTERVAL), "seed": seed, "generator": GENERATOR}
    return SimulatedPanel(curves, y, CoefficientLayout(1, J), ["T*"], coeffs, meta)


def experiment2(link: str, seed: int, n: int = 1000, sigma: float = 0.05) -> SimulatedPanel:
    """Level selection: levels 0..3 linked to ``Y`` with strengths 0.1 down to 0.01."""
    if link not in ("linear", "logistic"):
        raise ValueError("experiment 2 link must be 'linear' or 'logistic'")
    design = GeneralDesign(n=n, J=8, p=1, sigma=sigma, jstar=7, link=link,
                           theta=tuple(np.linspace(0.1, 0.01, 4)), theta_zeta=0.1)
    panel = simulate_general(design, seed)
    panel.metadata["design"] = f"exp2{link[:3]}"
    return panel


def experiment3(seed: int, n: int = 1000, q: int = 10, p: int = 10, sigma: float = 0.1,
                sigma_replicate: float = 0.05, J: int = 9, jstar: int = 3) -> SimulatedPanel:
    """Variable selection with ``q`` noisy replicates of each of X1 and X2."""
    if p < 4:
        raise ValueError("experiment 3 needs p >= 4")
    rng = stream(seed, SIMULATION)
    N = 2**J
    Z = rng.normal(size=(n, p))
    y = 3.5 * Z[:, 0] + 3.0 * Z[:, 1] + 2.5 * Z[:, 2] + 2.5 * Z[:, 3]
    active = np.zeros(N)
    active[: 2 ** (jstar + 1)] = 1.0
    base = []
    for u in range(p):
        c, _, _ = _signal_coefficients(rng, n, J, sigma, jstar, Z[:, u],
                                       Z[:, u][:, None] * active[None, :])
        base.append(c)
    names, blocks = [], []
    for u in range(p):
        names.append(f"X{u + 1}")
        blocks.append(base[u])
        if u < 2:
            for v in range(q):
                noise = sigma_replicate * rng.normal(size=(n, N)) * active[None, :]
                names.append(f"X{u + 1}.{v + 1}")
                blocks.append(base[u] + noise)
    coeffs = np.stack(blocks, axis=1)
    curves = wavelets.idwt_vector(coeffs, SIM_FILTER)
    layout = CoefficientLayout(len(names), J, tuple(names))
    relevant = [f"G({nm})" for nm in names if nm.split(".")[0] in ("X1", "X2", "X3", "X4")]
    meta = {"design": "exp3", "n": n, "J": J, "p": p, "q": q, "sigma": sigma,
            "sigma_replicate": sigma_replicate, "jstar": jstar, "seed": seed,
            "generator": GENERATOR}
    return SimulatedPanel(curves, y, layout, relevant, coeffs, meta)


# tabular designs for the grouped-vs-individual importance comparisons

APPENDIX_B_CASES = ("1a", "1b", "1c", "1d", "2a", "2b", "3")


def _equicorrelated(p, rho=0.9):
    return (1.0 - rho) * np.eye(p) + rho * np.ones((p, p))


@dataclass
class TabularDesign:
    data: Dataset
    case: str
    p: int
    population_importance: Optional[float]     # I(W) when known in closed form
    metadata: dict = field(default_factory=dict)

    @property
    def w_columns(self) -> list:
        return list(range(self.p))

    @property
    def z_columns(self) -> list:
        return list(range(self.p, 2 * self.p))


def _additive_terms(W):
    p = W.shape[1]
    j = np.arange(1, p + 1)
    return np.where(j < p / 2.0, np.sin(2.0 * W), np.cos(2.0 * W)) + j


def appendix_b(case: str, p: int, seed: int, n: int = 1000) -> TabularDesign:
    """Tabular design ``(W, Z, Y)`` with a relevant block ``W`` and a noise block ``Z``."""
    if case not in APPENDIX_B_CASES:
        raise ValueError(f"unknown case {case!r}; expected one of {APPENDIX_B_CASES}")
    if p < 1:
        raise ValueError("p must be >= 1")
    rng = stream(seed, SIMULATION)
    meta = {"case": case, "p": p, "n": n, "seed": seed, "generator": GENERATOR}
    cov = _equicorrelated(p) if case in ("1b", "1d", "2b") else np.eye(p)
    W = rng.multivariate_normal(np.zeros(p), cov, size=n, method="cholesky")
    Z = rng.normal(size=(n, p))
    eps = rng.normal(size=n)
    if case.startswith("1"):
        t = np.full(p, 0.9) if case in ("1a", "1b") else np.r_[0.9, np.zeros(p - 1)]
        alpha = np.linalg.solve(cov, t)
        explained = float(t @ alpha)
        resid = max(1.0 - explained, RESIDUAL_FLOOR)
        y = W @ alpha + math.sqrt(resid) * eps
        pop = 2.0 * float(alpha @ cov @ alpha)
        meta.update(alpha=alpha.tolist(), residual_variance=resid,
                    covariance_adjusted=bool(explained > 1.0 - RESIDUAL_FLOOR))
    elif case.startswith("2"):
        y = _additive_terms(W).sum(axis=1) + eps
        pop = None
        if case == "2a":
            j = np.arange(1, p + 1)
            var_sin = (1.0 - math.exp(-8.0)) / 2.0
            var_cos = (1.0 + math.exp(-8.0)) / 2.0 - math.exp(-4.0)
            pop = 2.0 * float(np.where(j < p / 2.0, var_sin, var_cos).sum())
    else:
        f = W.sum(axis=1) + W[:, -1] * W[:, 0]
        if p > 1:
            f = f + (W[:, :-1] * W[:, 1:]).sum(axis=1)
        y = f + eps
        pop = 2.0 * {1: 3.0, 2: 6.0}.get(p, 2.0 * p)
    X = np.column_stack([W, Z])
    names = [f"W{j + 1}" for j in range(p)] + [f"Z{j + 1}" for j in range(p)]
    return TabularDesign(Dataset(X, y, names), case, p, pop, meta)


# time-importance scans

@dataclass
class TimeScan:
    indices: np.ndarray           # sample indices of the scan points
    times: np.ndarray             # grid times t_l = (index + 1) / N
    per_replicate: np.ndarray     # replicates x points, raw grouped importance
    labels: list

    @property
    def mean(self) -> np.ndarray:
        return self.per_replicate.mean(axis=0)

    @property
    def q25(self) -> np.ndarray:
        return np.percentile(self.per_replicate, 25, axis=0)

    @property
    def q75(self) -> np.ndarray:
        return np.percentile(self.per_replicate, 75, axis=0)


def scan_indices(N: int, num_points: int) -> np.ndarray:
    if num_points < 1:
        raise ValueError("num_points must be >= 1")
    return np.unique(np.round(np.linspace(0, N - 1, num_points)).astype(int))


def time_importance_scan(replicates: Union[Sequence[Dataset], Callable[[int], Dataset]],
                         layout: CoefficientLayout, forest_config: ForestConfig,
                         num_points: int = 50, seed: int = 0, n_replicates: Optional[int] = None,
                         filt=SIM_FILTER, threads: int = 1,
                         shared_permutations: bool = True) -> TimeScan:
    """Grouped importance of ``G(t)`` at equally spaced grid times, per replicate.

    Every ``G(t)`` contains the scaling coefficients and neighbouring groups
    overlap heavily, so by default all scan points reuse the same per-tree
    permutations; independent draws would bury the differences in noise.
    """
    if callable(replicates):
        if n_replicates is None:
            raise ValueError("n_replicates is required with a generator")
        getter, count = replicates, n_replicates
    else:
        replicates = list(replicates)
        getter, count = replicates.__getitem__, len(replicates)
    idx = scan_indices(layout.N, num_points)
    family = time_family(layout, idx, filt)
    rows = []
    for r in range(count):
        data = getter(r)
        conf = ForestConfig(forest_config.num_trees, forest_config.mtry,
                            forest_config.min_leaf_size, derive_seed(seed, FOREST, r))
        forest = fit_forest(data, conf, threads=threads)
        reports = importance_table(forest, data, family, seed=derive_seed(seed, REPLICATE, r),
                                   shared_key=0 if shared_permutations else None)
        rows.append([rep.raw for rep in reports])
    return TimeScan(idx, (idx + 1) / layout.N, np.asarray(rows), family.labels)
