import sys
import tempfile
from pathlib import Path
from unittest import TestCase, mock

import numpy as np

from ...directional import sample_uniform_sphere_batch
from ...tensor import AdamWConfig, DiffTensor, OptimizerState, gradcheck
from ..exceptions import InvalidSequenceError, TrainingDivergedError, UnknownClassError
from ..tokens import TokenSequence
from ..train import (
    CHECKPOINT_NAME,
    RfNoise,
    ArTrainConfig,
    draw_rf_noise,
    load_ar,
    rf_loss,
    rf_train_step,
    train_ar,
)
from ..transformer import ArModel, ArModelConfig

TINY = ArModelConfig(
    token_dim=4,
    grid=(2, 4),
    n_classes=2,
    n_cond=2,
    width=8,
    depth=2,
    heads=2,
    ffn_mult=2,
    head_hidden=8,
    n_time_features=4,
)
RADIUS = 2.0


def _sphere_tokens(n: int, rng: np.random.Generator) -> np.ndarray:
    return RADIUS * sample_uniform_sphere_batch(4, n * 8, rng).reshape(n, 8, 4)


class RfLossTest(TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(0)
        self.model = ArModel(TINY, np.random.default_rng(1))

    def test_perfect_head_has_zero_loss(self):
        tokens = _sphere_tokens(6, self.rng)
        noise = draw_rf_noise(6, 8, 4, self.rng)
        target = (tokens - noise.z0).reshape(-1, 4)
        loss = rf_loss(self.model, tokens, np.zeros(6, dtype=int), noise, head=lambda z_t, t, h: target)
        self.assertEqual(loss.item(), 0.0)

    def test_zero_head_loss_is_r2_plus_d(self):
        n = 12_500
        tokens = _sphere_tokens(n, self.rng)
        noise = draw_rf_noise(n, 8, 4, self.rng)
        loss = rf_loss(
            self.model, tokens, self.rng.integers(0, 2, size=n), noise, head=lambda z_t, t, h: np.zeros_like(z_t)
        )
        per_token = np.sum((tokens - noise.z0) ** 2, axis=-1).reshape(-1)
        self.assertAlmostEqual(loss.item(), per_token.mean(), places=10)
        stderr = per_token.std(ddof=1) / np.sqrt(per_token.size)
        self.assertLess(abs(loss.item() - (RADIUS**2 + 4)), 4.0 * stderr)

    def test_gradients_match_finite_differences(self):
        tokens = _sphere_tokens(3, self.rng)
        noise = RfNoise(
            z0=self.rng.standard_normal((3, 8, 4)),
            t=self.rng.uniform(size=(3, 8, 1)),
            drop=np.array([False, True, False]),
        )
        labels = np.array([0, 1, 1])
        params = [self.model.head.mlp.layers[0].weight, self.model.blocks[0].wq.weight, self.model.slot_offsets]
        error = gradcheck(lambda: rf_loss(self.model, tokens, labels, noise), params, floor=1e-4)
        self.assertLess(error, 1e-4)

    def test_dropped_classes_use_the_null_slot(self):
        tokens = _sphere_tokens(2, self.rng)
        noise = draw_rf_noise(2, 8, 4, self.rng, cfg_dropout=1.0)
        self.assertTrue(noise.drop.all())
        a = rf_loss(self.model, tokens, np.array([0, 0]), noise).item()
        b = rf_loss(self.model, tokens, np.array([1, 1]), noise).item()
        self.assertEqual(a, b)

    def test_unknown_class(self):
        noise = draw_rf_noise(1, 8, 4, self.rng)
        with self.assertRaises(UnknownClassError):
            rf_loss(self.model, _sphere_tokens(1, self.rng), np.array([5]), noise)


class RfTrainStepTest(TestCase):
    def setUp(self):
        self.model = ArModel(TINY, np.random.default_rng(2))
        self.state = OptimizerState(hyper=AdamWConfig(lr=1e-2))

    def test_steps_reduce_the_loss(self):
        rng = np.random.default_rng(3)
        tokens = _sphere_tokens(16, np.random.default_rng(4))
        labels = np.arange(16) % 2
        losses = [rf_train_step(self.model, tokens, labels, self.state, rng) for _ in range(60)]
        self.assertLess(np.mean(losses[-10:]), np.mean(losses[:10]))
        self.assertEqual(self.state.step, 60)

    def test_nan_aborts(self):
        tokens = np.full((2, 8, 4), np.nan)
        with self.assertRaises(TrainingDivergedError) as ctx:
            rf_train_step(self.model, tokens, np.array([0, 1]), self.state, np.random.default_rng(5))
        self.assertEqual(ctx.exception.step, 0)
        self.assertTrue(np.isnan(ctx.exception.terms["loss"]))

    def test_accepts_token_sequences(self):
        tokens = _sphere_tokens(4, np.random.default_rng(9))
        sequences = [TokenSequence(t, TINY.grid, RADIUS) for t in tokens]
        labels = np.array([0, 1, 0, 1])
        twin = ArModel(TINY, np.random.default_rng(2))
        twin_state = OptimizerState(hyper=AdamWConfig(lr=1e-2))
        from_list = rf_train_step(self.model, sequences, labels, self.state, np.random.default_rng(10))
        from_array = rf_train_step(twin, tokens, labels, twin_state, np.random.default_rng(10), radius=RADIUS)
        self.assertEqual(from_list, from_array)
        np.testing.assert_array_equal(self.model.token_in.weight.value, twin.token_in.weight.value)

    def test_tokens_off_the_radius_are_rejected(self):
        tokens = _sphere_tokens(2, np.random.default_rng(11))
        tokens[1, 3] *= 1.0 + 1e-6
        with self.assertRaises(InvalidSequenceError):
            rf_train_step(self.model, tokens, np.array([0, 1]), self.state, np.random.default_rng(12), radius=RADIUS)
        mixed = [TokenSequence(tokens[0], TINY.grid, RADIUS), TokenSequence(tokens[1], TINY.grid)]
        with self.assertRaises(InvalidSequenceError):
            rf_train_step(self.model, mixed, np.array([0, 1]), self.state, np.random.default_rng(12))
        self.assertEqual(self.state.step, 0)

    def test_train_ar_checks_the_radius(self):
        tokens = _sphere_tokens(8, np.random.default_rng(13))
        config = ArTrainConfig(epochs=1, batch_size=8)
        train_ar(TINY, tokens, np.zeros(8, dtype=int), config, seed=0, radius=RADIUS)
        with self.assertRaises(InvalidSequenceError):
            train_ar(TINY, 1.5 * tokens, np.zeros(8, dtype=int), config, seed=0, radius=RADIUS)

    def test_head_stub_output_is_lifted(self):
        tokens = _sphere_tokens(1, np.random.default_rng(6))
        noise = draw_rf_noise(1, 8, 4, np.random.default_rng(7))
        loss = rf_loss(self.model, tokens, np.array([0]), noise, head=lambda z_t, t, h: DiffTensor(np.ones_like(z_t)))
        self.assertGreater(loss.item(), 0.0)


class TrainArTest(TestCase):
    def setUp(self):
        rng = np.random.default_rng(8)
        self.tokens = _sphere_tokens(24, rng)
        self.labels = rng.integers(0, 2, size=24)
        self.config = ArTrainConfig(epochs=2, batch_size=8, peak_lr=3e-3, warmup_steps=2)

    def test_same_seed_same_checkpoint(self):
        with tempfile.TemporaryDirectory() as a, tempfile.TemporaryDirectory() as b:
            train_ar(TINY, self.tokens, self.labels, self.config, seed=1, out_dir=Path(a))
            train_ar(TINY, self.tokens, self.labels, self.config, seed=1, out_dir=Path(b))
            self.assertEqual((Path(a) / CHECKPOINT_NAME).read_bytes(), (Path(b) / CHECKPOINT_NAME).read_bytes())

    def test_ema_weights_are_used_for_decoding(self):
        config = ArTrainConfig(epochs=2, batch_size=8, peak_lr=3e-3, warmup_steps=2, ema_decay=0.9)
        with tempfile.TemporaryDirectory() as tmp:
            result = train_ar(TINY, self.tokens, self.labels, config, seed=2, out_dir=Path(tmp))
            with_ema, _, meta = load_ar(result.checkpoint)
            live, state, _ = load_ar(result.checkpoint, use_ema=False)
        self.assertEqual(meta["ema_decay"], 0.9)
        self.assertEqual(state.step, 6)
        np.testing.assert_array_equal(with_ema.token_in.weight.value, result.ema.shadow["token_in.weight"])
        np.testing.assert_array_equal(live.token_in.weight.value, result.model.token_in.weight.value)
        self.assertFalse(np.array_equal(with_ema.token_in.weight.value, live.token_in.weight.value))

    def test_resume_continues(self):
        with tempfile.TemporaryDirectory() as tmp:
            first = train_ar(TINY, self.tokens, self.labels, self.config, seed=3, out_dir=Path(tmp))
            longer = ArTrainConfig(epochs=3, batch_size=8, peak_lr=3e-3, warmup_steps=2)
            resumed = train_ar(
                TINY, self.tokens, self.labels, longer, seed=3, out_dir=Path(tmp) / "resumed", resume=first.checkpoint
            )
            _, state, meta = load_ar(resumed.checkpoint)
        self.assertEqual([row[0] for row in resumed.log], [2])
        self.assertEqual(state.step, 9)
        self.assertEqual(meta["epoch"], 3)

    def test_interrupted_run_resumes_to_the_same_bytes(self):
        config = ArTrainConfig(epochs=3, batch_size=8, peak_lr=3e-3, warmup_steps=2, ema_decay=0.9)
        train_module = sys.modules[train_ar.__module__]
        real_step = train_module.rf_train_step
        calls = []

        def crash_in_second_epoch(*args, **kwargs):
            calls.append(1)
            # 24 sequences in batches of 8: the fifth call is inside epoch 1
            if len(calls) == 5:
                raise KeyboardInterrupt
            return real_step(*args, **kwargs)

        with tempfile.TemporaryDirectory() as a, tempfile.TemporaryDirectory() as b:
            train_ar(TINY, self.tokens, self.labels, config, seed=5, out_dir=Path(a))
            with mock.patch.object(train_module, "rf_train_step", side_effect=crash_in_second_epoch):
                with self.assertRaises(KeyboardInterrupt):
                    train_ar(TINY, self.tokens, self.labels, config, seed=5, out_dir=Path(b))
            _, _, meta = load_ar(Path(b) / CHECKPOINT_NAME)
            self.assertEqual(meta["epoch"], 1)
            resumed = train_ar(
                TINY, self.tokens, self.labels, config, seed=5, out_dir=Path(b), resume=Path(b) / CHECKPOINT_NAME
            )
            self.assertEqual([row[0] for row in resumed.log], [0, 1, 2])
            self.assertEqual((Path(a) / CHECKPOINT_NAME).read_bytes(), (Path(b) / CHECKPOINT_NAME).read_bytes())

    def test_resume_keeps_the_stored_schedule(self):
        with tempfile.TemporaryDirectory() as tmp:
            first = train_ar(TINY, self.tokens, self.labels, self.config, seed=6, out_dir=Path(tmp))
            longer = ArTrainConfig(epochs=4, batch_size=8, peak_lr=3e-3, warmup_steps=2)
            resumed = train_ar(
                TINY, self.tokens, self.labels, longer, seed=6, out_dir=Path(tmp) / "resumed", resume=first.checkpoint
            )
            _, _, meta = load_ar(resumed.checkpoint)
        # 24 sequences in batches of 8 over the two epochs of the first run
        self.assertEqual(meta["schedule"]["total_steps"], 6)

    def test_rejects_unknown_labels(self):
        with self.assertRaises(UnknownClassError):
            train_ar(TINY, self.tokens, np.full(24, 7), self.config, seed=4)
