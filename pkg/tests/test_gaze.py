import math

import numpy as np
import pytest

from veridict.gaze import BinGrid, combined_gaze_loss, expected_angle, self_check, softmax


def test_softmax_cases():
    np.testing.assert_allclose(softmax(np.zeros(5)), np.full(5, 0.2))
    np.testing.assert_array_equal(softmax([1000.0, 0.0]), [1.0, 0.0])
    e = math.e
    np.testing.assert_allclose(softmax([1.0, 0.0]), [e / (e + 1), 1 / (e + 1)], rtol=1e-15)
    with pytest.raises(ValueError):
        softmax([])
    with pytest.raises(ValueError):
        softmax([np.inf, 0])


def test_grid_geometry():
    g = BinGrid()
    assert g.centers[0] == -40.5 and g.centers[-1] == 40.5 and g.upper == 42.0
    assert g.bin_index(-42.0) == 0 and g.bin_index(42.0) == 27 and g.bin_index(0.0) == 14
    with pytest.raises(ValueError):
        g.bin_index(42.5)


def test_expectation_identities():
    g = BinGrid()
    for i in range(g.n_bins):
        assert expected_angle(np.eye(g.n_bins)[i], g) == g.centers[i]
    assert expected_angle(np.full(g.n_bins, 1 / g.n_bins), g) == 0.0
    two = BinGrid(n_bins=2, width=6.0, origin=-6.0)
    assert expected_angle([0.25, 0.75], two) == 1.5


def test_loss_at_confident_correct_bin():
    g = BinGrid()
    z = np.full(g.n_bins, -50.0)
    z[5] = 50.0
    loss, _ = combined_gaze_loss(z, g.centers[5], g)
    assert loss == pytest.approx(0.0, abs=1e-12)


def test_lambda_zero_is_cross_entropy():
    g = BinGrid()
    z = np.random.default_rng(0).normal(size=g.n_bins)
    loss, grad = combined_gaze_loss(z, 7.3, g, lam=0.0)
    p = softmax(z)
    k = g.bin_index(7.3)
    assert loss == pytest.approx(-math.log(p[k]), rel=1e-14)
    np.testing.assert_allclose(grad, p - np.eye(g.n_bins)[k], atol=1e-15)


def test_gradient_finite_differences():
    # independent central-difference check, separate from the library self-check
    rng = np.random.default_rng(11)
    g = BinGrid()
    h = 1e-6
    for _ in range(100):
        z = rng.normal(0, 2, g.n_bins)
        t = rng.uniform(-42, 42)
        lam = rng.uniform(0, 2)
        _, grad = combined_gaze_loss(z, t, g, lam)
        num = np.empty_like(z)
        for j in range(z.size):
            zp, zm = z.copy(), z.copy()
            zp[j] += h
            zm[j] -= h
            num[j] = (combined_gaze_loss(zp, t, g, lam)[0] - combined_gaze_loss(zm, t, g, lam)[0]) / (2 * h)
        assert np.linalg.norm(grad - num) / max(np.linalg.norm(num), 1e-12) < 1e-6
    assert self_check(100, 0) < 1e-6


def test_negative_lambda_rejected():
    with pytest.raises(ValueError):
        combined_gaze_loss(np.zeros(28), 0.0, BinGrid(), lam=-1)
