"""
Synthetic image dataset and the patch tokenizer

Items are small grayscale grids holding one anti-aliased shape (an ellipse or
a bar) at a random pose, plus pixel noise. The class label is the shape kind.
Regeneration from (spec, seed) is exact.
"""

import hashlib
import io
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import rng as rng_streams
from .exceptions import InputShapeError, SvaeError

logger = logging.getLogger(__name__)

SHAPE_KINDS = ("ellipse", "bar")


@dataclass(frozen=True)
class DatasetSpec:
    n_items: int = 512
    image_size: int = 8
    patch_size: int = 4
    shapes: tuple[str, ...] = SHAPE_KINDS
    noise: float = 0.05
    supersample: int = 4

    def __post_init__(self):
        if self.n_items < 0:
            raise SvaeError(f"n_items must be nonnegative, got {self.n_items}")
        if self.image_size % self.patch_size:
            raise SvaeError(
                f"patch_size {self.patch_size} does not divide image_size {self.image_size}"
            )
        unknown = sorted(set(self.shapes) - set(SHAPE_KINDS))
        if unknown or not self.shapes:
            raise SvaeError(f"Unknown shape kinds: {unknown or 'none given'}")

    @property
    def grid(self) -> tuple[int, int]:
        side = self.image_size // self.patch_size
        return side, side

    @property
    def patch_dim(self) -> int:
        return self.patch_size * self.patch_size


@dataclass(eq=False)
class ToyDataset:
    images: np.ndarray  # (n, H, W)
    labels: np.ndarray  # (n,) index into spec.shapes
    spec: DatasetSpec
    seed: int
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.images.shape[0]

    @property
    def n_classes(self) -> int:
        return len(self.spec.shapes)

    def patches(self) -> np.ndarray:
        return patchify(self.images, self.spec.patch_size)

    def checksum(self) -> str:
        h = hashlib.sha256()
        h.update(_npy_bytes(self.images))
        h.update(_npy_bytes(self.labels))
        return h.hexdigest()

    def mean_predictor_mse(self) -> float:
        """MSE of predicting every image by the dataset mean image"""
        if len(self) == 0:
            return 0.0
        return float(np.mean((self.images - self.images.mean(axis=0)) ** 2))


def patchify(images: np.ndarray, patch: int) -> np.ndarray:
    """(n, H, W) -> (n, h*w, patch*patch), patches in raster order"""
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 3 or images.shape[1] % patch or images.shape[2] % patch:
        raise InputShapeError(("n", f"k*{patch}", f"k*{patch}"), images.shape)
    n, height, width = images.shape
    h, w = height // patch, width // patch
    blocks = images.reshape(n, h, patch, w, patch).transpose(0, 1, 3, 2, 4)
    return blocks.reshape(n, h * w, patch * patch)


def unpatchify(patches: np.ndarray, grid: tuple[int, int], patch: int) -> np.ndarray:
    n = patches.shape[0]
    h, w = grid
    blocks = np.asarray(patches).reshape(n, h, w, patch, patch).transpose(0, 1, 3, 2, 4)
    return blocks.reshape(n, h * patch, w * patch)


def _render(kind: str, size: int, supersample: int, rng: np.random.Generator) -> np.ndarray:
    fine = size * supersample
    coords = (np.arange(fine) + 0.5) / fine * 2.0 - 1.0
    y, x = np.meshgrid(coords, coords, indexing="ij")
    cx, cy = rng.uniform(-0.4, 0.4, size=2)
    angle = rng.uniform(0.0, np.pi)
    c, s = np.cos(angle), np.sin(angle)
    xr = c * (x - cx) + s * (y - cy)
    yr = -s * (x - cx) + c * (y - cy)
    if kind == "ellipse":
        a, b = rng.uniform(0.25, 0.7, size=2)
        inside = (xr / a) ** 2 + (yr / b) ** 2 <= 1.0
    else:
        half_length = rng.uniform(0.5, 0.9)
        half_width = rng.uniform(0.1, 0.25)
        inside = (np.abs(xr) <= half_length) & (np.abs(yr) <= half_width)
    # box-filter the fine grid down to the target resolution
    return inside.astype(np.float64).reshape(size, supersample, size, supersample).mean(axis=(1, 3))


def generate_dataset(spec: DatasetSpec, seed: int) -> ToyDataset:
    rng = rng_streams.stream(seed, "dataset")
    labels = rng.integers(0, len(spec.shapes), size=spec.n_items)
    images = np.empty((spec.n_items, spec.image_size, spec.image_size))
    for i, label in enumerate(labels):
        images[i] = _render(spec.shapes[label], spec.image_size, spec.supersample, rng)
    images += spec.noise * rng.standard_normal(images.shape)
    logger.debug("Generated %d items (%s) from seed %d", spec.n_items, ",".join(spec.shapes), seed)
    return ToyDataset(images=images, labels=labels.astype(np.int64), spec=spec, seed=seed)


def _npy_bytes(array: np.ndarray) -> bytes:
    buffer = io.BytesIO()
    np.save(buffer, array, allow_pickle=False)
    return buffer.getvalue()


def save_dataset(dataset: ToyDataset, directory: Path) -> dict:
    """Write images.npy, labels.npy and manifest.json; returns the manifest"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "images.npy").write_bytes(_npy_bytes(dataset.images))
    (directory / "labels.npy").write_bytes(_npy_bytes(dataset.labels))
    manifest = {
        "spec": {**asdict(dataset.spec), "shapes": list(dataset.spec.shapes)},
        "seed": dataset.seed,
        "n_items": len(dataset),
        "item_shape": [dataset.spec.image_size, dataset.spec.image_size],
        "sha256": dataset.checksum(),
    }
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def load_dataset(directory: Path) -> ToyDataset:
    directory = Path(directory)
    try:
        manifest = json.loads((directory / "manifest.json").read_text())
        images = np.load(directory / "images.npy", allow_pickle=False)
        labels = np.load(directory / "labels.npy", allow_pickle=False)
    except (OSError, ValueError) as e:
        raise SvaeError(f"Cannot read dataset in {directory}: {e}") from e
    spec = DatasetSpec(**{**manifest["spec"], "shapes": tuple(manifest["spec"]["shapes"])})
    dataset = ToyDataset(images=images, labels=labels, spec=spec, seed=manifest["seed"])
    if dataset.checksum() != manifest["sha256"]:
        raise SvaeError(f"Dataset checksum mismatch in {directory}")
    return dataset
