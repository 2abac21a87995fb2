import json
import tempfile
from pathlib import Path
from unittest import TestCase

import numpy as np

from ..data import DatasetSpec, generate_dataset, load_dataset, patchify, save_dataset, unpatchify
from ..exceptions import InputShapeError, SvaeError


class DatasetTest(TestCase):
    def setUp(self):
        self.spec = DatasetSpec(n_items=64, image_size=8, patch_size=4)

    def test_regeneration_is_exact(self):
        first = generate_dataset(self.spec, seed=7)
        second = generate_dataset(self.spec, seed=7)
        np.testing.assert_array_equal(first.images, second.images)
        np.testing.assert_array_equal(first.labels, second.labels)
        self.assertEqual(first.checksum(), second.checksum())
        self.assertNotEqual(first.checksum(), generate_dataset(self.spec, seed=8).checksum())

    def test_items_and_labels(self):
        data = generate_dataset(self.spec, seed=0)
        self.assertEqual(data.images.shape, (64, 8, 8))
        self.assertEqual(set(data.labels.tolist()), {0, 1})
        self.assertEqual(data.n_classes, 2)
        # shapes are bright on a dark background
        self.assertGreater(data.images.max(), 0.5)

    def test_noise_free_pixels_are_coverage_fractions(self):
        data = generate_dataset(DatasetSpec(n_items=8, noise=0.0), seed=1)
        self.assertGreaterEqual(data.images.min(), 0.0)
        self.assertLessEqual(data.images.max(), 1.0)

    def test_mean_predictor_baseline(self):
        data = generate_dataset(self.spec, seed=2)
        baseline = data.mean_predictor_mse()
        self.assertGreater(baseline, 0.0)
        self.assertLess(baseline, float(np.mean(data.images**2)))

    def test_empty_dataset(self):
        data = generate_dataset(DatasetSpec(n_items=0), seed=3)
        self.assertEqual(len(data), 0)
        self.assertEqual(data.mean_predictor_mse(), 0.0)
        self.assertEqual(data.patches().shape, (0, 4, 16))

    def test_invalid_spec(self):
        with self.assertRaises(SvaeError):
            DatasetSpec(image_size=8, patch_size=3)
        with self.assertRaises(SvaeError):
            DatasetSpec(shapes=("triangle",))
        with self.assertRaises(SvaeError):
            DatasetSpec(n_items=-1)

    def test_save_and_load(self):
        data = generate_dataset(self.spec, seed=4)
        with tempfile.TemporaryDirectory() as tmp:
            manifest = save_dataset(data, Path(tmp))
            self.assertEqual(manifest["sha256"], data.checksum())
            self.assertEqual(json.loads((Path(tmp) / "manifest.json").read_text())["n_items"], 64)
            loaded = load_dataset(Path(tmp))
            np.testing.assert_array_equal(loaded.images, data.images)
            self.assertEqual(loaded.spec, data.spec)

    def test_tampered_dataset_is_rejected(self):
        data = generate_dataset(self.spec, seed=5)
        with tempfile.TemporaryDirectory() as tmp:
            save_dataset(data, Path(tmp))
            images = data.images.copy()
            images[0, 0, 0] += 1.0
            np.save(Path(tmp) / "images.npy", images)
            with self.assertRaises(SvaeError):
                load_dataset(Path(tmp))


class PatchTest(TestCase):
    def test_raster_order(self):
        image = np.arange(16.0).reshape(1, 4, 4)
        patches = patchify(image, 2)
        self.assertEqual(patches.shape, (1, 4, 4))
        np.testing.assert_array_equal(patches[0, 0], [0, 1, 4, 5])
        np.testing.assert_array_equal(patches[0, 1], [2, 3, 6, 7])
        np.testing.assert_array_equal(patches[0, 2], [8, 9, 12, 13])

    def test_unpatchify_inverts(self):
        images = np.random.default_rng(0).normal(size=(3, 8, 8))
        np.testing.assert_array_equal(unpatchify(patchify(images, 4), (2, 2), 4), images)

    def test_rejects_indivisible_images(self):
        with self.assertRaises(InputShapeError):
            patchify(np.zeros((2, 6, 6)), 4)
