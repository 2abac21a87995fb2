import tempfile
from pathlib import Path
from unittest import TestCase

import numpy as np

from ..checkpoint import MAGIC, decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from ..exceptions import CheckpointFormatError


class CheckpointTest(TestCase):
    def setUp(self) -> None:
        rng = np.random.default_rng(0)
        self.arrays = {
            "encoder.layers.0.weight": rng.normal(size=(4, 3)),
            "scalar": np.array(np.pi),
            "empty": np.zeros((0, 2)),
        }

    def test_bit_exact_round_trip(self):
        data = encode_checkpoint(self.arrays, {"step": 7})
        arrays, meta = decode_checkpoint(data)
        self.assertEqual(meta, {"step": 7})
        for name, value in self.arrays.items():
            self.assertEqual(arrays[name].shape, value.shape)
            self.assertEqual(arrays[name].tobytes(), value.tobytes())
        self.assertEqual(encode_checkpoint(arrays, meta), data)

    def test_header(self):
        data = encode_checkpoint(self.arrays)
        self.assertEqual(data[:4], MAGIC)
        self.assertEqual(int.from_bytes(data[4:8], "little"), 1)

    def test_file_round_trip(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = save_checkpoint(Path(tmp) / "nested" / "model.sphl", self.arrays)
            arrays, _ = load_checkpoint(path)
        np.testing.assert_array_equal(arrays["encoder.layers.0.weight"], self.arrays["encoder.layers.0.weight"])

    def test_save_replaces_the_file_without_leftovers(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "model.sphl"
            save_checkpoint(path, self.arrays, {"epoch": 1})
            save_checkpoint(path, self.arrays, {"epoch": 2})
            _, meta = load_checkpoint(path)
            self.assertEqual(meta, {"epoch": 2})
            self.assertEqual([p.name for p in Path(tmp).iterdir()], ["model.sphl"])

    def test_rejects_corruption(self):
        data = encode_checkpoint(self.arrays)
        with self.assertRaises(CheckpointFormatError):
            decode_checkpoint(b"NOPE" + data[4:])
        with self.assertRaises(CheckpointFormatError):
            decode_checkpoint(data[:-8])
        with self.assertRaises(CheckpointFormatError):
            decode_checkpoint(data + b"\x00")
