"""Loss, schedule, Adam, parameter-shift gradients, training loop."""

import numpy as np
import pytest

from helpers import synthetic_digits
from qupt.model import N_PARAMETERS, QnnParams, scores_batch
from qupt.training import (
    AdamState,
    TrainConfig,
    TrainHistory,
    adam_step,
    batch_loss,
    bce_loss,
    finite_difference_gradient,
    lr_at_epoch,
    param_shift_gradient,
    train,
)


class TestBceLoss:
    def test_half_probability_is_ln2(self):
        np.testing.assert_allclose(bce_loss(0.5, 1), np.log(2.0), atol=1e-12)
        np.testing.assert_allclose(bce_loss(0.5, 0), np.log(2.0), atol=1e-12)

    def test_near_perfect_prediction(self):
        assert bce_loss(1.0 - 1e-7, 1) == pytest.approx(1e-7, rel=1e-2)

    def test_closed_form(self):
        np.testing.assert_allclose(bce_loss(0.2, 1), -np.log(0.2), atol=1e-12)

    def test_nonnegative_and_clamped(self):
        assert bce_loss(0.0, 0) >= 0.0
        assert np.isfinite(bce_loss(0.0, 1))
        assert np.isfinite(bce_loss(1.0, 0))


class TestLrSchedule:
    def test_table_values(self):
        config = TrainConfig()
        assert lr_at_epoch(0, config) == 1e-4
        assert lr_at_epoch(10, config) == pytest.approx(7.5e-5)
        assert lr_at_epoch(25, config) == pytest.approx(1e-4 * 0.75**2)

    def test_exact_closed_form_over_range(self):
        config = TrainConfig()
        for epoch in range(101):
            assert lr_at_epoch(epoch, config) == config.lr0 * config.gamma ** (epoch // 10)

    def test_negative_epoch(self):
        with pytest.raises(ValueError):
            lr_at_epoch(-1, TrainConfig())


class TestAdam:
    def test_zero_gradient_from_fresh_state_keeps_params(self):
        vec = np.linspace(-1, 1, N_PARAMETERS)
        new_vec, new_state = adam_step(vec, np.zeros(N_PARAMETERS), AdamState(), lr=0.5)
        np.testing.assert_array_equal(new_vec, vec)
        np.testing.assert_array_equal(new_state.m, np.zeros(N_PARAMETERS))
        assert new_state.step == 1

    def test_zero_gradient_decays_accumulated_moments(self):
        state = AdamState(m=np.full(N_PARAMETERS, 0.2), v=np.full(N_PARAMETERS, 0.3), step=3)
        _, new_state = adam_step(np.zeros(N_PARAMETERS), np.zeros(N_PARAMETERS), state, lr=0.5)
        np.testing.assert_allclose(new_state.m, 0.9 * 0.2)
        np.testing.assert_allclose(new_state.v, 0.999 * 0.3)
        assert new_state.step == 4

    def test_first_step_hand_arithmetic(self):
        """Bias-corrected first step at g=0.5, lr=0.1 moves by about -lr."""
        grads = np.zeros(N_PARAMETERS)
        grads[0] = 0.5
        new_vec, _ = adam_step(np.zeros(N_PARAMETERS), grads, AdamState(), lr=0.1)
        # m_hat = 0.5, v_hat = 0.25, so delta = -0.1 * 0.5 / (0.5 + 1e-8)
        np.testing.assert_allclose(new_vec[0], -0.1 * 0.5 / (0.5 + 1e-8), rtol=1e-12)
        assert new_vec[0] == pytest.approx(-0.0999999, abs=1e-6)

    def test_deterministic(self):
        rng = np.random.default_rng(0)
        vec = rng.normal(size=N_PARAMETERS)
        grads = rng.normal(size=N_PARAMETERS)
        a_vec, a_state = adam_step(vec, grads, AdamState(), 0.01)
        b_vec, b_state = adam_step(vec, grads, AdamState(), 0.01)
        np.testing.assert_array_equal(a_vec, b_vec)
        np.testing.assert_array_equal(a_state.m, b_state.m)


class TestParameterShiftGradient:
    def test_matches_finite_differences(self):
        """Floored relative error <= 1e-5 against the h=1e-3 FD oracle."""
        rng = np.random.default_rng(1)
        for trial in range(3):
            image = rng.random((1, 28, 28))
            label = np.array([trial % 2])
            params = QnnParams.init_random(50 + trial)
            g, _ = param_shift_gradient(params, image, label)
            g_fd, _ = finite_difference_gradient(params, image, label)
            err = np.max(np.abs(g - g_fd) / np.maximum(1.0, np.abs(g_fd)))
            assert err <= 1e-5

    def test_pool_angles_have_zero_gradient(self):
        """The pooling chain is diagonal, so it commutes with the Z readout:
        its three angles provably cannot move the loss."""
        rng = np.random.default_rng(2)
        image = rng.random((2, 28, 28))
        labels = np.array([0, 1])
        params = QnnParams.init_random(60, scale=1.0)
        g, _ = param_shift_gradient(params, image, labels)
        np.testing.assert_allclose(g[36:39], 0.0, atol=1e-10)
        g_fd, _ = finite_difference_gradient(params, image, labels)
        np.testing.assert_allclose(g_fd[36:39], 0.0, atol=1e-10)

    def test_gradient_deterministic(self):
        rng = np.random.default_rng(3)
        image = rng.random((2, 28, 28))
        labels = np.array([1, 0])
        params = QnnParams.init_random(61)
        g1, l1 = param_shift_gradient(params, image, labels)
        g2, l2 = param_shift_gradient(params, image, labels)
        np.testing.assert_array_equal(g1, g2)
        assert l1 == l2

    def test_loss_value_matches_batch_loss(self):
        rng = np.random.default_rng(4)
        image = rng.random((3, 28, 28))
        labels = np.array([1, 0, 1])
        params = QnnParams.init_random(62)
        _, loss = param_shift_gradient(params, image, labels)
        assert loss == pytest.approx(batch_loss(params, image, labels), abs=1e-12)


class TestTrain:
    def test_zero_lr_keeps_init(self):
        images, labels = synthetic_digits(2, seed=0)
        config = TrainConfig(lr0=0.0, epochs=1, batch_size=4, seed=5)
        params, history = train(images, labels, config)
        expected = np.random.default_rng(5).uniform(-0.1, 0.1, N_PARAMETERS)
        np.testing.assert_array_equal(params.to_vector(), expected)
        assert len(history) == 1

    def test_fixed_seed_bit_identical(self):
        images, labels = synthetic_digits(3, seed=1)
        config = TrainConfig(lr0=0.05, epochs=2, batch_size=4, seed=9)
        a, _ = train(images, labels, config)
        b, _ = train(images, labels, config)
        np.testing.assert_array_equal(a.to_vector(), b.to_vector())

    def test_separable_toy_task_reaches_full_accuracy(self):
        """Two constant images with opposite labels are linearly separable."""
        images = np.stack([np.full((28, 28), 0.15), np.full((28, 28), 0.75)])
        labels = np.array([0, 1])
        config = TrainConfig(lr0=0.2, epochs=40, batch_size=2, seed=2)
        _, history = train(images, labels, config)
        assert history.accuracy[-1] == 1.0
        assert history.loss[-1] < history.loss[0]

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            train(np.zeros((0, 28, 28)), np.zeros(0), TrainConfig(epochs=1))

    def test_bad_labels_rejected(self):
        with pytest.raises(ValueError):
            train(np.zeros((2, 28, 28)), np.array([0, 2]), TrainConfig(epochs=1))

    def test_finite_difference_mode_runs(self):
        images, labels = synthetic_digits(1, seed=3)
        config = TrainConfig(
            lr0=0.1, epochs=1, batch_size=2, seed=4, gradient_mode="finite-difference"
        )
        params, history = train(images, labels, config)
        assert params.to_vector().shape == (N_PARAMETERS,)
        assert len(history) == 1

    def test_history_csv(self):
        history = TrainHistory(loss=[0.6, 0.5], accuracy=[0.7, 0.8], lr=[0.1, 0.1])
        text = history.to_csv()
        lines = text.strip().split("\n")
        assert lines[0] == "epoch,loss,accuracy,lr"
        assert lines[1].startswith("0,0.6,")
        assert len(lines) == 3
