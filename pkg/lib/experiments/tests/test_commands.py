import json
import tempfile
from pathlib import Path
from unittest import TestCase

import numpy as np

from ...ar.train import CHECKPOINT_NAME as AR_CHECKPOINT
from ...svae.train import CHECKPOINT_NAME as SVAE_CHECKPOINT
from ..commands import ar_checkpoint, cmd_decode, cmd_gen_data, cmd_train, cmd_train_ar, cmd_train_svae
from ..config import RESOLVED_CONFIG_NAME, config_hash
from ..exceptions import ConfigError, MissingCheckpointError, MissingDatasetError
from ..reports import read_report, strip_metadata
from .tiny import tiny_config


class GenDataTest(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def test_same_seed_same_checksum(self):
        a = cmd_gen_data(tiny_config(self.root / "a"))
        b = cmd_gen_data(tiny_config(self.root / "b"))
        self.assertEqual(a["sha256"], b["sha256"])
        self.assertNotEqual(a["sha256"], cmd_gen_data(tiny_config(self.root / "c", seed=6))["sha256"])

    def test_manifest_matches_items(self):
        config = tiny_config(self.root)
        manifest = cmd_gen_data(config)
        images = np.load(self.root / "data" / "images.npy")
        self.assertEqual(images.shape, (manifest["n_items"], *manifest["item_shape"]))
        self.assertEqual(manifest["seed"], config.seeds.data)
        self.assertTrue((self.root / RESOLVED_CONFIG_NAME).exists())

    def test_empty_dataset(self):
        manifest = cmd_gen_data(tiny_config(self.root, dataset={"n_items": 0}))
        self.assertEqual(manifest["n_items"], 0)
        manifest_file = json.loads((self.root / "data" / "manifest.json").read_text())
        self.assertEqual(manifest_file["sha256"], manifest["sha256"])


class TrainSvaeCommandTest(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def test_needs_a_dataset(self):
        with self.assertRaises(MissingDatasetError):
            cmd_train_svae(tiny_config(self.root))

    def test_rerun_is_byte_identical(self):
        reports, checkpoints = [], []
        for name in ("a", "b"):
            config = tiny_config(self.root / name)
            cmd_gen_data(config)
            reports.append(cmd_train_svae(config))
            checkpoints.append((self.root / name / "svae" / SVAE_CHECKPOINT).read_bytes())
        self.assertEqual(checkpoints[0], checkpoints[1])
        self.assertEqual(strip_metadata(reports[0]), strip_metadata(reports[1]))
        self.assertEqual(reports[0]["audit"]["config_hash"], config_hash(config))
        self.assertEqual(reports[0]["audit"]["seeds"]["train"], config.seeds.train)
        self.assertEqual(reports[0]["family"], "S-04")

    def test_dispatch_on_kind(self):
        config = tiny_config(self.root, kind="svae")
        cmd_gen_data(config)
        report = cmd_train(config)
        self.assertEqual(report["command"], "train-svae")


class TrainArAndDecodeTest(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.config = tiny_config(Path(self.tmp.name))

    def test_decode_without_checkpoint(self):
        with self.assertRaises(MissingCheckpointError) as ctx:
            cmd_decode(self.config)
        self.assertEqual(ctx.exception.variants, ["spherical-projected"])

    def test_unknown_variant(self):
        with self.assertRaises(ConfigError):
            cmd_train_ar(self.config, variants=["nope"])

    def test_resume_needs_one_variant(self):
        with self.assertRaises(ConfigError):
            cmd_train_ar(self.config, resume=Path("ar.sphl"))

    def test_train_then_decode(self):
        reports = cmd_train_ar(self.config, variants=["spherical-projected"])
        self.assertEqual(list(reports), ["spherical-projected"])
        self.assertTrue(ar_checkpoint(self.config, "spherical-projected").exists())
        summary = cmd_decode(self.config)
        tokens = np.load(self.config.out_path / "decode" / "spherical-projected" / "tokens.npy")
        self.assertEqual(tokens.shape, (3, 4, 4))
        np.testing.assert_allclose(np.linalg.norm(tokens, axis=-1), 2.0, atol=1e-9)
        self.assertEqual(summary["guard_count"], 0)
        self.assertLessEqual(summary["token_norm_std"], 1e-9)
        written = read_report(self.config.out_path / "decode" / "spherical-projected" / "decode_summary.json")
        self.assertEqual(strip_metadata(written), strip_metadata(summary))

    def test_refeed_override(self):
        config = tiny_config(Path(self.tmp.name), decode={"refeed": "raw"})
        cmd_train_ar(config, variants=["spherical-projected"])
        summary = cmd_decode(config)
        self.assertEqual(summary["refeed"], "raw")
        self.assertEqual(summary["n_steps"], 2)

    def test_resume_continues_the_step_counter(self):
        cmd_train_ar(self.config, variants=["gaussian-raw"])
        first = ar_checkpoint(self.config, "gaussian-raw")
        saved = Path(self.tmp.name) / "first.sphl"
        saved.write_bytes(first.read_bytes())
        longer = tiny_config(Path(self.tmp.name), ar={"epochs": 2})
        cmd_train_ar(longer, variants=["gaussian-raw"], resume=saved)
        log = (longer.out_path / "ar" / "gaussian-raw" / "ar_train_log.csv").read_text().splitlines()
        self.assertEqual(len(log), 3)
        self.assertTrue(log[1].startswith("0,"))
        self.assertTrue(log[2].startswith("1,"))
        self.assertNotEqual(saved.read_bytes(), ar_checkpoint(longer, "gaussian-raw").read_bytes())
        self.assertEqual(AR_CHECKPOINT, first.name)
