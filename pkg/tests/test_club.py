import math

import numpy as np
import pytest

from pace.config import DisentangleConfig
from pace.disentangle import ClubEstimator, club_bound, fit_q_step, frame_batch, mi_loss, sample_frames
from pace.exceptions import ContractError, DimensionError
from pace.prosody import ProsodyEmbeddings
from pace.tensor import Tensor, backward

# Bivariate Gaussian with I(X; Y) = 0.830 nats.
TRUE_MI = 0.830
RHO = math.sqrt(1.0 - math.exp(-2.0 * TRUE_MI))
EXACT_BOUND = RHO ** 2 / (1.0 - RHO ** 2)


def _gaussian_pairs(rng, n):
    x = rng.normal(size=(n, 1))
    y = RHO * x + math.sqrt(1.0 - RHO ** 2) * rng.normal(size=(n, 1))
    return Tensor(x), Tensor(y)


def _exact_estimator(rng):
    """mean = RHO * x through relu(x) - relu(-x); constant log-variance log(1 - RHO^2)."""
    est = ClubEstimator(rng, 1, "f0", DisentangleConfig(hidden=2))
    est.mean_net.inner.params.weights.data[:] = [[1.0], [-1.0]]
    est.mean_net.inner.params.bias.data[:] = 0.0
    est.mean_net.outer.params.weights.data[:] = [[RHO, -RHO]]
    est.mean_net.outer.params.bias.data[:] = 0.0
    for layer in (est.logvar_net.inner, est.logvar_net.outer):
        layer.params.weights.data[:] = 0.0
    est.logvar_net.inner.params.bias.data[:] = 0.0
    est.logvar_net.outer.params.bias.data[:] = math.log(1.0 - RHO ** 2)
    return est


def _all_pairs_bound(x, y, est):
    mu, logvar = (t.data for t in est(Tensor(x)))

    def log_q(j, i):
        return -0.5 * np.sum((y[j] - mu[i]) ** 2 * np.exp(-logvar[i]) + logvar[i] + math.log(2 * math.pi))

    n = len(x)
    total = 0.0
    for i in range(n):
        total += log_q(i, i) - sum(log_q(j, i) for j in range(n)) / n
    return total / n


class TestBound:
    def test_constant_estimator_gives_zero(self, rng):
        est = ClubEstimator(rng, 4, "f0", DisentangleConfig(hidden=3))
        for net in (est.mean_net, est.logvar_net):
            for layer in (net.inner, net.outer):
                layer.params.weights.data[:] = 0.0
        est.mean_net.outer.params.bias.data[:] = 0.3
        x, y = Tensor(rng.normal(size=(50, 4))), Tensor(rng.normal(size=(50, 4)))
        assert abs(club_bound(x, y, est).item()) <= 1e-12

    def test_moment_form_matches_all_pairs(self, rng):
        est = ClubEstimator(rng, 3, "uv", DisentangleConfig(hidden=5))
        x, y = rng.normal(size=(6, 3)), rng.normal(size=(6, 3))
        assert club_bound(Tensor(x), Tensor(y), est).item() == pytest.approx(_all_pairs_bound(x, y, est), abs=1e-10)

    def test_exact_conditional_on_correlated_gaussians(self):
        rng = np.random.default_rng(2024)
        x, y = _gaussian_pairs(rng, 4000)
        bound = club_bound(x, y, _exact_estimator(rng)).item()
        assert bound > TRUE_MI
        assert bound == pytest.approx(EXACT_BOUND, abs=0.3)

    def test_gradient_reaches_only_the_frame_batch(self, rng):
        est = ClubEstimator(rng, 3, "f0", DisentangleConfig(hidden=4))
        x = Tensor(rng.normal(size=(8, 3)), requires_grad=True)
        y = Tensor(rng.normal(size=(8, 3)), requires_grad=True)
        backward(club_bound(x, y, est))
        assert x.grad is not None and np.any(x.grad != 0)
        assert y.grad is None
        assert all(p.grad is None for p in est.parameters())

    def test_needs_two_pairs(self, rng):
        est = ClubEstimator(rng, 2, "f0", DisentangleConfig(hidden=2))
        with pytest.raises(ContractError):
            club_bound(Tensor(np.zeros((1, 2))), Tensor(np.zeros((1, 2))), est)

    def test_misaligned_batches(self, rng):
        est = ClubEstimator(rng, 2, "f0", DisentangleConfig(hidden=2))
        with pytest.raises(DimensionError):
            club_bound(Tensor(np.zeros((4, 2))), Tensor(np.zeros((3, 2))), est)

    def test_mi_loss_sums_both_targets(self, rng):
        config = DisentangleConfig(hidden=4)
        f0_est, uv_est = ClubEstimator(rng, 3, "f0", config), ClubEstimator(rng, 3, "uv", config)
        x = Tensor(rng.normal(size=(10, 3)))
        pros = ProsodyEmbeddings(Tensor(rng.normal(size=(10, 3))), Tensor(rng.normal(size=(10, 3))))
        expected = club_bound(x, pros.e_f0, f0_est).item() + club_bound(x, pros.e_uv, uv_est).item()
        assert mi_loss(x, pros, f0_est, uv_est).item() == pytest.approx(expected)


class TestFitting:
    def test_fit_lowers_negative_log_likelihood(self):
        rng = np.random.default_rng(1)
        x, y = _gaussian_pairs(rng, 256)
        est = ClubEstimator(rng, 1, "f0", DisentangleConfig(hidden=8))
        first = fit_q_step(x, y, est, lr=1e-2)
        for _ in range(150):
            last = fit_q_step(x, y, est, lr=1e-2)
        assert last < first

    def test_fit_leaves_inputs_alone(self, rng):
        est = ClubEstimator(rng, 2, "f0", DisentangleConfig(hidden=2))
        x = Tensor(rng.normal(size=(5, 2)), requires_grad=True)
        fit_q_step(x, Tensor(rng.normal(size=(5, 2))), est, lr=1e-3)
        assert x.grad is None

    @pytest.mark.slow
    def test_trained_estimator_bounds_true_information(self):
        rng = np.random.default_rng(7)
        x, y = _gaussian_pairs(rng, 2000)
        est = ClubEstimator(rng, 1, "f0", DisentangleConfig(hidden=16))
        for _ in range(3000):
            fit_q_step(x, y, est, lr=5e-3)
        bound = club_bound(x, y, est).item()
        assert bound > TRUE_MI
        assert abs(bound - EXACT_BOUND) <= 0.25 * EXACT_BOUND


class TestFrameBatch:
    def test_rows_stay_aligned(self, rng):
        frames = [Tensor(np.arange(20.0).reshape(10, 2)), Tensor(100 + np.arange(12.0).reshape(6, 2))]
        pros = [
            ProsodyEmbeddings(Tensor(np.arange(20.0).reshape(10, 2)), Tensor(-np.arange(20.0).reshape(10, 2))),
            ProsodyEmbeddings(Tensor(100 + np.arange(12.0).reshape(6, 2)), Tensor(-100 - np.arange(12.0).reshape(6, 2))),
        ]
        x, batch = frame_batch(rng, frames, pros, per_utterance=8)
        assert x.shape == (14, 2)
        np.testing.assert_array_equal(x.data, batch.e_f0.data)
        np.testing.assert_array_equal(x.data, -batch.e_uv.data)

    def test_sample_frames_caps_at_length(self, rng):
        idx = sample_frames(rng, 5, 9)
        assert idx.tolist() == [0, 1, 2, 3, 4]
