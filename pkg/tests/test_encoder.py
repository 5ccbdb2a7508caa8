import math
from dataclasses import replace

import numpy as np
import pytest

from dac.data import SplitDataset, gen_synthetic, make_split
from dac.encoder import (
    DivergenceError,
    EncoderModel,
    TrainConfig,
    cross_entropy,
    encode,
    fold_standardization,
    grad_step,
    init_model,
    load_model,
    logits,
    pretrain,
    save_model,
    with_classifier,
)


def full_loss(model, z, y):
    return cross_entropy(logits(model, encode(model, z)), y)


def numeric_grads(model, z, y, h=1e-5):
    """Central finite differences through the full forward pass."""
    grads = {}
    for name in ("w_h", "b_h", "w_c", "b_c"):
        param = getattr(model, name)
        g = np.zeros_like(param)
        it = np.nditer(param, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            plus = param.copy()
            plus[idx] += h
            minus = param.copy()
            minus[idx] -= h
            g[idx] = (
                full_loss(replace(model, **{name: plus}), z, y)
                - full_loss(replace(model, **{name: minus}), z, y)
            ) / (2 * h)
            it.iternext()
        grads[name] = g
    return grads


def analytic_grads(model, z, y, lr=1.0):
    updated, _ = grad_step(model, z, y, lr)
    return {
        name: (getattr(model, name) - getattr(updated, name)) / lr
        for name in ("w_h", "b_h", "w_c", "b_c")
    }


def max_rel_err(a, b):
    return float(np.max(np.abs(a - b) / np.maximum.reduce([np.abs(a), np.abs(b), np.full_like(a, 1e-4)])))


def random_model(rng, d_in, d, k, spread=0.8):
    return EncoderModel(
        w_h=rng.normal(0, spread, size=(d_in, d)),
        b_h=rng.normal(0, 0.1, size=d),
        w_c=rng.normal(0, spread, size=(d, k)),
        b_c=rng.normal(0, 0.1, size=k),
    )


class TestEncode:
    def test_identity_weights_zero_input(self):
        model = EncoderModel(w_h=np.eye(3), b_h=np.zeros(3))
        np.testing.assert_array_equal(encode(model, np.zeros((2, 3))), np.zeros((2, 3)))

    def test_scalar_tanh(self):
        model = EncoderModel(w_h=np.eye(1), b_h=np.zeros(1))
        x = 0.7
        assert encode(model, np.array([[x]]))[0, 0] == pytest.approx(math.tanh(x), rel=1e-15)

    def test_matches_direct_recomputation(self):
        rng = np.random.default_rng(0)
        model = random_model(rng, 4, 3, 2)
        z = rng.normal(size=(6, 4))
        expected = np.tanh(z @ model.w_h + model.b_h)
        np.testing.assert_allclose(encode(model, z), expected, atol=1e-12)

    def test_output_strictly_inside_unit_box(self):
        # float64 tanh rounds to exactly +-1.0 beyond |x| ~ 19, so the
        # strict-interior property is tested over the representable range
        rng = np.random.default_rng(1)
        model = random_model(rng, 3, 5, 2, spread=1.0)
        z = rng.normal(size=(200, 3)) * 3
        pre = z @ model.w_h + model.b_h
        assert np.abs(pre).max() < 19
        out = encode(model, z)
        assert np.all(out > -1.0) and np.all(out < 1.0)

    def test_dimension_mismatch(self):
        model = EncoderModel(w_h=np.eye(3), b_h=np.zeros(3))
        with pytest.raises(ValueError):
            encode(model, np.zeros((2, 4)))

    def test_standardization_fields_apply(self):
        shift = np.array([1.0, -2.0])
        scale = np.array([2.0, 4.0])
        model = EncoderModel(w_h=np.eye(2), b_h=np.zeros(2), shift=shift, scale=scale)
        z = np.array([[3.0, 2.0]])
        np.testing.assert_allclose(encode(model, z), np.tanh([[1.0, 1.0]]), atol=1e-15)


class TestLogits:
    def test_zero_classifier(self):
        model = EncoderModel(
            w_h=np.eye(2), b_h=np.zeros(2), w_c=np.zeros((2, 3)), b_c=np.zeros(3)
        )
        np.testing.assert_array_equal(logits(model, np.ones((4, 2))), np.zeros((4, 3)))

    def test_hand_set_weights(self):
        model = EncoderModel(
            w_h=np.eye(2),
            b_h=np.zeros(2),
            w_c=np.array([[1.0, -1.0], [2.0, 0.5]]),
            b_c=np.array([0.25, -0.25]),
        )
        enc = np.array([[1.0, 2.0]])
        np.testing.assert_allclose(logits(model, enc), [[5.25, -0.25]], atol=1e-15)

    def test_bias_shift_linearity(self):
        rng = np.random.default_rng(2)
        model = random_model(rng, 3, 3, 4)
        enc = rng.normal(size=(5, 3))
        shifted = replace(model, b_c=model.b_c + 3.5)
        np.testing.assert_allclose(logits(shifted, enc), logits(model, enc) + 3.5, atol=1e-12)

    def test_discarded_classifier_rejected(self):
        model = EncoderModel(w_h=np.eye(2), b_h=np.zeros(2))
        with pytest.raises(ValueError):
            logits(model, np.zeros((1, 2)))


class TestCrossEntropy:
    def test_uniform_logits_give_log_k(self):
        lg = np.zeros((4, 7))
        y = np.array([0, 3, 6, 2])
        assert cross_entropy(lg, y) == math.log(7)

    def test_saturated_logit_gives_zero(self):
        lg = np.zeros((2, 3))
        lg[0, 1] = 1000.0
        lg[1, 0] = 1000.0
        assert cross_entropy(lg, np.array([1, 0])) == pytest.approx(0.0, abs=1e-9)

    def test_matches_brute_force_softmax(self):
        rng = np.random.default_rng(3)
        lg = rng.normal(size=(2, 3)) * 4
        y = np.array([2, 0])
        probs = np.exp(lg) / np.exp(lg).sum(axis=1, keepdims=True)
        expected = -np.mean([np.log(probs[0, 2]), np.log(probs[1, 0])])
        assert cross_entropy(lg, y) == pytest.approx(expected, abs=1e-12)

    def test_shift_invariance(self):
        rng = np.random.default_rng(4)
        lg = rng.normal(size=(6, 4))
        y = rng.integers(0, 4, size=6)
        per_row = rng.normal(size=(6, 1)) * 50
        assert cross_entropy(lg + per_row, y) == pytest.approx(cross_entropy(lg, y), abs=1e-9)

    def test_label_out_of_range(self):
        with pytest.raises(ValueError):
            cross_entropy(np.zeros((2, 3)), np.array([0, 3]))

    def test_loss_non_negative(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            lg = rng.normal(size=(5, 3)) * 10
            y = rng.integers(0, 3, size=5)
            assert cross_entropy(lg, y) >= 0.0


class TestGradStep:
    def test_zero_learning_rate_is_noop(self):
        rng = np.random.default_rng(6)
        model = random_model(rng, 3, 3, 2)
        z = rng.normal(size=(4, 3))
        y = rng.integers(0, 2, size=4)
        updated, loss = grad_step(model, z, y, lr=0.0)
        assert loss > 0
        for name in ("w_h", "b_h", "w_c", "b_c"):
            np.testing.assert_array_equal(getattr(updated, name), getattr(model, name))

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(7)
        model = random_model(rng, 4, 3, 3)
        z = rng.normal(size=(4, 4))
        y = rng.integers(0, 3, size=4)
        analytic = analytic_grads(model, z, y)
        numeric = numeric_grads(model, z, y)
        for name in ("w_h", "b_h", "w_c", "b_c"):
            assert max_rel_err(analytic[name], numeric[name]) <= 1e-4, name

    def test_gradients_with_standardization_fields(self):
        rng = np.random.default_rng(8)
        model = replace(
            random_model(rng, 3, 3, 2),
            shift=rng.normal(size=3),
            scale=np.abs(rng.normal(size=3)) + 0.5,
        )
        z = rng.normal(size=(5, 3)) * 3
        y = rng.integers(0, 2, size=5)
        analytic = analytic_grads(model, z, y)
        numeric = numeric_grads(model, z, y)
        for name in ("w_h", "b_h", "w_c", "b_c"):
            assert max_rel_err(analytic[name], numeric[name]) <= 1e-4, name

    def test_loss_reported_at_incoming_parameters(self):
        rng = np.random.default_rng(9)
        model = random_model(rng, 3, 3, 2)
        z = rng.normal(size=(4, 3))
        y = rng.integers(0, 2, size=4)
        _, loss = grad_step(model, z, y, lr=0.5)
        assert loss == pytest.approx(full_loss(model, z, y), abs=1e-12)

    def test_converges_on_separable_toy_problem(self):
        rng = np.random.default_rng(10)
        z = np.vstack([rng.normal(size=(20, 2)) - 4, rng.normal(size=(20, 2)) + 4])
        y = np.array([0] * 20 + [1] * 20)
        model = random_model(rng, 2, 4, 2, spread=0.3)
        loss = full_loss(model, z, y)
        for _ in range(500):
            model, loss = grad_step(model, z, y, lr=0.2)
        assert full_loss(model, z, y) < 0.01

    def test_empty_batch_rejected(self):
        rng = np.random.default_rng(11)
        model = random_model(rng, 3, 3, 2)
        with pytest.raises(ValueError):
            grad_step(model, np.zeros((0, 3)), np.zeros(0, dtype=int), lr=0.1)

    def test_divergence_detected(self):
        model = EncoderModel(
            w_h=np.eye(2),
            b_h=np.zeros(2),
            w_c=np.zeros((2, 2)),
            b_c=np.array([1e308, -1e308]),
        )
        with pytest.raises(DivergenceError):
            grad_step(model, np.full((2, 2), 0.5), np.array([1, 1]), lr=0.1)


class TestPretrain:
    def _toy_split(self, seed=0):
        feats, truth = gen_synthetic(3, 40, 4, 12.0, seed=seed)
        rng = np.random.default_rng(seed)
        mask = np.zeros(truth.size, dtype=bool)
        for c in range(3):
            mask[rng.choice(np.flatnonzero(truth == c), size=10, replace=False)] = True
        return SplitDataset(
            features=feats,
            truth=truth,
            labeled_mask=mask,
            known_classes=frozenset({0, 1, 2}),
            seed=seed,
        )

    def test_reaches_full_labeled_accuracy(self):
        data = self._toy_split()
        model = pretrain(data, TrainConfig(seed=0, pretrain_min_delta=1e-4))
        assert model.train_accuracy == 100.0

    def test_classifier_discarded(self):
        model = pretrain(self._toy_split(), TrainConfig(seed=0))
        assert model.w_c is None and model.b_c is None
        assert model.k is None

    def test_no_labeled_samples(self):
        data = self._toy_split()
        empty = SplitDataset(
            features=data.features,
            truth=data.truth,
            labeled_mask=np.zeros_like(data.labeled_mask),
            known_classes=data.known_classes,
            seed=0,
        )
        with pytest.raises(ValueError):
            pretrain(empty, TrainConfig(seed=0))

    def test_bit_identical_across_runs(self):
        data = self._toy_split(seed=3)
        cfg = TrainConfig(seed=5)
        a = pretrain(data, cfg)
        b = pretrain(data, cfg)
        np.testing.assert_array_equal(a.w_h, b.w_h)
        np.testing.assert_array_equal(a.b_h, b.b_h)
        assert a.train_accuracy == b.train_accuracy

    def test_hidden_dim_override(self):
        model = pretrain(self._toy_split(), TrainConfig(seed=0, hidden_dim=6))
        assert model.d == 6

    def test_standardization_recorded(self):
        data = self._toy_split()
        model = pretrain(data, TrainConfig(seed=0))
        np.testing.assert_allclose(model.shift, data.features.mean(axis=0), atol=1e-12)
        assert np.allclose(model.scale, data.features.std())


class TestCheckpoint:
    def test_round_trip_plain_model(self, tmp_path):
        rng = np.random.default_rng(12)
        model = random_model(rng, 4, 3, 5)
        p = tmp_path / "m.dacm"
        save_model(model, p)
        loaded = load_model(p)
        np.testing.assert_array_equal(loaded.w_h, model.w_h)
        np.testing.assert_array_equal(loaded.b_h, model.b_h)
        np.testing.assert_array_equal(loaded.w_c, model.w_c)
        np.testing.assert_array_equal(loaded.b_c, model.b_c)

    def test_round_trip_headless_model(self, tmp_path):
        model = EncoderModel(w_h=np.eye(3) * 0.5, b_h=np.ones(3))
        p = tmp_path / "h.dacm"
        save_model(model, p)
        loaded = load_model(p)
        assert loaded.w_c is None
        np.testing.assert_array_equal(loaded.w_h, model.w_h)

    def test_standardization_folds_into_saved_weights(self, tmp_path):
        rng = np.random.default_rng(13)
        model = replace(
            random_model(rng, 3, 4, 2),
            shift=rng.normal(size=3),
            scale=np.abs(rng.normal(size=3)) + 0.5,
        )
        p = tmp_path / "s.dacm"
        save_model(model, p)
        loaded = load_model(p)
        assert loaded.shift is None
        z = rng.normal(size=(6, 3)) * 2
        np.testing.assert_allclose(encode(loaded, z), encode(model, z), atol=1e-12)
        np.testing.assert_allclose(
            logits(loaded, encode(loaded, z)), logits(model, encode(model, z)), atol=1e-12
        )

    def test_fold_standardization_is_exact_function_equivalence(self):
        rng = np.random.default_rng(14)
        model = replace(
            random_model(rng, 5, 3, 2),
            shift=rng.normal(size=5) * 10,
            scale=np.abs(rng.normal(size=5)) + 0.1,
        )
        folded = fold_standardization(model)
        z = rng.normal(size=(20, 5)) * 10
        np.testing.assert_allclose(encode(folded, z), encode(model, z), atol=1e-10)

    def test_truncated_checkpoint(self, tmp_path):
        rng = np.random.default_rng(15)
        p = tmp_path / "t.dacm"
        save_model(random_model(rng, 3, 3, 2), p)
        blob = p.read_bytes()
        p.write_bytes(blob[:-8])
        from dac.data import TruncatedPayloadError

        with pytest.raises(TruncatedPayloadError):
            load_model(p)


class TestWithClassifier:
    def test_attaches_k_way_head(self):
        model = init_model(4, 4, None, seed=0)
        full = with_classifier(model, 7, seed=1)
        assert full.k == 7
        assert full.w_c.shape == (4, 7)

    def test_seed_controls_draw(self):
        model = init_model(4, 4, None, seed=0)
        a = with_classifier(model, 3, seed=1)
        b = with_classifier(model, 3, seed=1)
        c = with_classifier(model, 3, seed=2)
        np.testing.assert_array_equal(a.w_c, b.w_c)
        assert not np.array_equal(a.w_c, c.w_c)
