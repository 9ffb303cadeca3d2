import math

import numpy as np
import pytest

from wavegroup import shrinkage, wavelets
from wavegroup.shrinkage import ShrinkageConfig, simultaneous_shrink


def test_mad_sigma(rng):
    x = rng.normal(scale=2.0, size=20000)
    assert shrinkage.mad_sigma(x) == pytest.approx(2.0, rel=0.03)
    with pytest.raises(ValueError):
        shrinkage.mad_sigma([])


def test_thresholds():
    assert shrinkage.universal_threshold(256, 1.0) == pytest.approx(math.sqrt(2 * math.log(256)))
    x = math.log(256 / 0.05)
    expected = math.sqrt(2 * x + 2 * math.sqrt(50 * x) + 50)
    assert shrinkage.joint_threshold(256, 50, 0.05, 1.0) == pytest.approx(expected)
    # grows with n and with stricter q
    assert shrinkage.joint_threshold(256, 100, 0.05, 1) > shrinkage.joint_threshold(256, 50, 0.05, 1)
    assert shrinkage.joint_threshold(256, 50, 0.01, 1) > shrinkage.joint_threshold(256, 50, 0.05, 1)
    with pytest.raises(ValueError):
        shrinkage.joint_threshold(256, 50, 1.5, 1.0)
    with pytest.raises(ValueError):
        ShrinkageConfig(q=0.0)


def test_joint_threshold_covers_chi_square_tail(rng):
    # P(chi2_n > delta^2) <= q / N for each null coefficient vector
    N, n, q = 256, 50, 0.05
    d2 = shrinkage.joint_threshold(N, n, q, 1.0) ** 2
    chi = (rng.normal(size=(200000, n)) ** 2).sum(axis=1)
    assert np.mean(chi > d2) <= q / N * 3


def test_signal_survives_noise_dropped(rng):
    n, N = 40, 128
    coeffs = 0.1 * rng.normal(size=(n, N))
    coeffs[:, 0] += 5.0
    coeffs[:, 3] += 2.0          # (1, 1)
    coeffs[:, 2**5 + 7] -= 1.5   # (5, 7)
    res = simultaneous_shrink(coeffs, ShrinkageConfig(q=0.05))
    assert res.kept == frozenset({(1, 1), (5, 7)})
    out = shrinkage.apply_shrinkage(coeffs, res)
    assert np.array_equal(out[:, 0], coeffs[:, 0])
    assert np.all(out[:, 1] == 0)
    assert res.sigma_hat == pytest.approx(0.1, rel=0.15)


def test_monotone_in_q(rng):
    coeffs = rng.normal(size=(30, 64)) + np.linspace(0, 1.2, 64)
    lo = simultaneous_shrink(coeffs, ShrinkageConfig(q=0.01, sigma=1.0)).kept
    hi = simultaneous_shrink(coeffs, ShrinkageConfig(q=0.5, sigma=1.0)).kept
    assert lo <= hi


def test_single_and_mean_curve(rng):
    N = 256
    t = np.arange(1, N + 1) / N
    clean = np.where(t > 0.5, 1.0, 0.0)
    d = wavelets.dwt(clean + 0.05 * rng.normal(size=N), "db2")
    thr = shrinkage.hard_threshold_single(d, shrinkage.universal_threshold(N, 0.05))
    rec = wavelets.idwt(thr, "db2")
    assert np.mean((rec - clean) ** 2) < 0.05**2
    curves = clean + 0.2 * rng.normal(size=(30, N))
    mean = wavelets.idwt(shrinkage.mean_signal_shrink(curves, "db2"), "db2")
    assert np.mean((mean - clean) ** 2) < np.mean((curves.mean(axis=0) - clean) ** 2)


def test_manifest(rng):
    res = simultaneous_shrink(rng.normal(size=(10, 32)), ShrinkageConfig(q=0.1, sigma=1.0))
    doc = res.manifest()
    assert set(doc) == {"threshold", "sigma_hat", "q", "kept"}
    assert res.kept_mask()[0]


def test_null_model_family_wise_rate():
    N, n, q = 256, 50, 0.05
    hits = 0
    for r in range(500):
        z = np.random.default_rng(r).normal(size=(n, N))
        res = simultaneous_shrink(z, ShrinkageConfig(q=q, sigma=1.0))
        hits += bool(res.kept)
    assert hits / 500 <= 2 * q
