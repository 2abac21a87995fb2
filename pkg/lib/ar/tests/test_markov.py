from unittest import TestCase

import numpy as np

from ..exceptions import ArError, UnknownClassError
from ..markov import MarkovProcessConfig, MarkovSphereProcess, TokenSource, plane_rotation


class PlaneRotationTest(TestCase):
    def test_orthogonal_and_plane_local(self):
        rng = np.random.default_rng(0)
        basis, _ = np.linalg.qr(rng.standard_normal((5, 2)))
        a, b = basis[:, 0], basis[:, 1]
        rotation = plane_rotation(a, b, 0.6)
        np.testing.assert_allclose(rotation @ rotation.T, np.eye(5), atol=1e-12)
        self.assertAlmostEqual(np.linalg.det(rotation), 1.0)
        self.assertAlmostEqual(a @ rotation @ a, np.cos(0.6))
        normal = rng.standard_normal(5)
        normal -= basis @ (basis.T @ normal)
        np.testing.assert_allclose(rotation @ normal, normal, atol=1e-12)


class MarkovSphereProcessTest(TestCase):
    def setUp(self):
        self.config = MarkovProcessConfig(d=6, n_classes=3, grid=(2, 2), kappa_start=20.0, kappa_step=50.0)
        self.process = MarkovSphereProcess(self.config, seed=11)

    def test_tokens_lie_on_the_sphere(self):
        tokens, labels = self.process.sample(40, np.random.default_rng(1))
        self.assertEqual(tokens.shape, (40, 4, 6))
        self.assertEqual(labels.shape, (40,))
        np.testing.assert_allclose(np.linalg.norm(tokens, axis=-1), np.sqrt(6), atol=1e-9)

    def test_first_token_concentrates_on_the_class_mean(self):
        n = 4000
        directions = self.process.sample_directions(1, n, np.random.default_rng(2))
        cosines = directions[:, 0] @ self.process.start[1]
        stderr = cosines.std(ddof=1) / np.sqrt(n)
        self.assertLess(abs(cosines.mean() - self.process.first_token_mean_cosine()), 4.0 * stderr)

    def test_steps_follow_the_class_rotation(self):
        directions = self.process.sample_directions(0, 500, np.random.default_rng(3))
        rotated = directions[:, 0] @ self.process.rotations[0].T
        step_cosine = np.sum(rotated * directions[:, 1], axis=-1).mean()
        random_cosine = np.sum(directions[:, 0] * directions[::-1, 1], axis=-1).mean()
        self.assertGreater(step_cosine, 0.8)
        self.assertGreater(step_cosine, random_cosine)

    def test_gaussian_source_varies_the_norm(self):
        config = MarkovProcessConfig(d=6, n_classes=3, grid=(2, 2), source=TokenSource.GAUSSIAN)
        process = MarkovSphereProcess(config, seed=11)
        sequences, _ = process.sequences(30, np.random.default_rng(4))
        norms = np.concatenate([s.norms() for s in sequences])
        self.assertGreater(norms.var(), 0.0)
        self.assertFalse(sequences[0].constrained)

    def test_spherical_sequences_carry_the_radius(self):
        sequences, labels = self.process.sequences(5, np.random.default_rng(5))
        self.assertEqual(len(sequences), 5)
        self.assertTrue(all(s.radius == np.sqrt(6) for s in sequences))
        self.assertTrue(set(labels.tolist()) <= {0, 1, 2})

    def test_fixed_labels_are_kept(self):
        _, labels = self.process.sample(4, np.random.default_rng(6), class_ids=np.array([2, 0, 2, 1]))
        np.testing.assert_array_equal(labels, [2, 0, 2, 1])

    def test_same_seed_same_process(self):
        other = MarkovSphereProcess(self.config, seed=11)
        np.testing.assert_array_equal(other.start, self.process.start)
        a, _ = self.process.sample(8, np.random.default_rng(7))
        b, _ = other.sample(8, np.random.default_rng(7))
        np.testing.assert_array_equal(a, b)
        self.assertFalse(np.array_equal(MarkovSphereProcess(self.config, seed=12).start, self.process.start))

    def test_errors(self):
        with self.assertRaises(UnknownClassError):
            self.process.sample_directions(3, 1, np.random.default_rng(8))
        with self.assertRaises(ArError):
            MarkovProcessConfig(d=1)
