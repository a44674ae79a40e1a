"""Dataset manifests, folder ingestion, and adapted-dataset materialization.

A manifest is the unit of dataset identity across the pipeline: a list of
(relative path, label, class name, domain tag, provenance) records plus the
class list and a root directory. Manifests serialize to a tab-separated
text format with a small header so they diff cleanly and stream.

Dataset folders follow root/<class>/<image> for one domain; adapted copies
preserve the class structure under a new root, so an original image and its
style-mapped counterpart share the same relative path.
"""

from __future__ import annotations

import io
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .disentangle import DOMAIN_TAGS, ImageBatch
from .ioutil import atomic_write_bytes, atomic_write_text
from .networks import GeneratorPair

logger = logging.getLogger(__name__)

PROVENANCE_ORIGINAL = "original"
KEEP_TRANSLATED = "translated"
KEEP_RECONSTRUCTED = "reconstructed"

_IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".webp"}
_MANIFEST_MAGIC = "#styleshift-manifest"
_MANIFEST_VERSION = "v1"


def adapted_provenance(checkpoint_id: str, direction: str) -> str:
    return f"adapted:{checkpoint_id}:{direction}"


@dataclass(frozen=True)
class ManifestRecord:
    path: str  # relative to the manifest root, posix separators
    label: int
    class_name: str
    domain: str
    provenance: str = PROVENANCE_ORIGINAL


@dataclass
class DatasetManifest:
    records: list[ManifestRecord]
    class_names: list[str]
    root: str
    dataset_id: str = ""

    @property
    def k(self) -> int:
        return len(self.class_names)

    def __len__(self) -> int:
        return len(self.records)

    def resolve(self, record: ManifestRecord) -> Path:
        return Path(self.root) / record.path

    def validate(self, check_files: bool = True) -> None:
        seen: set[str] = set()
        for rec in self.records:
            if rec.path in seen:
                raise ValueError(f"duplicate path in manifest: {rec.path}")
            seen.add(rec.path)
            if not (0 <= rec.label < self.k):
                raise ValueError(f"label {rec.label} out of range [0, {self.k}) for {rec.path}")
            if self.class_names[rec.label] != rec.class_name:
                raise ValueError(
                    f"label/class mismatch for {rec.path}: index {rec.label} is "
                    f"{self.class_names[rec.label]!r}, record says {rec.class_name!r}"
                )
        if check_files:
            for rec in self.records:
                if not self.resolve(rec).is_file():
                    raise FileNotFoundError(f"manifest references missing file: {self.resolve(rec)}")

    def header_provenance(self) -> str:
        kinds = {rec.provenance for rec in self.records}
        if len(kinds) == 1:
            return next(iter(kinds))
        return "mixed" if kinds else PROVENANCE_ORIGINAL

    def serialize(self) -> str:
        lines = [
            f"{_MANIFEST_MAGIC}\t{_MANIFEST_VERSION}",
            f"#dataset_id\t{self.dataset_id}",
            f"#k\t{self.k}",
            f"#root\t{self.root}",
            f"#provenance\t{self.header_provenance()}",
            "#class_names\t" + "\t".join(self.class_names),
            "#fields\tpath\tlabel\tclass_name\tdomain\tprovenance",
        ]
        for rec in self.records:
            lines.append(
                f"{rec.path}\t{rec.label}\t{rec.class_name}\t{rec.domain}\t{rec.provenance}"
            )
        return "\n".join(lines) + "\n"

    def save(self, path: Path) -> None:
        atomic_write_text(Path(path), self.serialize())

    @staticmethod
    def parse(text: str) -> "DatasetManifest":
        lines = [line for line in text.splitlines() if line.strip()]
        if not lines or not lines[0].startswith(_MANIFEST_MAGIC):
            raise ValueError("not a styleshift manifest")
        header: dict[str, list[str]] = {}
        records: list[ManifestRecord] = []
        for line in lines[1:]:
            if line.startswith("#"):
                parts = line[1:].split("\t")
                header[parts[0]] = parts[1:]
                continue
            path, label, class_name, domain, provenance = line.split("\t")
            records.append(
                ManifestRecord(
                    path=path,
                    label=int(label),
                    class_name=class_name,
                    domain=domain,
                    provenance=provenance,
                )
            )
        class_names = header.get("class_names", [])
        manifest = DatasetManifest(
            records=records,
            class_names=class_names,
            root=header.get("root", ["."])[0],
            dataset_id=header.get("dataset_id", [""])[0],
        )
        declared_k = int(header.get("k", [str(manifest.k)])[0])
        if declared_k != manifest.k:
            raise ValueError(f"manifest header k={declared_k} but {manifest.k} classes listed")
        return manifest

    @staticmethod
    def load(path: Path) -> "DatasetManifest":
        return DatasetManifest.parse(Path(path).read_text(encoding="utf-8"))

    def subsample(self, fraction: float, seed: int) -> "DatasetManifest":
        """Deterministic per-class subsample keeping at least one record per class."""
        if not (0 < fraction <= 1):
            raise ValueError(f"fraction must be in (0, 1], got {fraction}")
        if fraction == 1.0:
            return self
        rng = np.random.default_rng(seed)
        kept: list[ManifestRecord] = []
        for label in range(self.k):
            bucket = [r for r in self.records if r.label == label]
            if not bucket:
                continue
            n_keep = max(1, int(round(fraction * len(bucket))))
            idx = rng.permutation(len(bucket))[:n_keep]
            kept.extend(bucket[i] for i in sorted(idx))
        return replace(self, records=kept)

    def split_eval(self, eval_fraction: float) -> tuple["DatasetManifest", "DatasetManifest"]:
        """Deterministic stratified split into (train, eval) manifests.

        Every ceil(1/fraction)-th record of each class, in sorted path order,
        lands in the eval part; no randomness so splits survive re-runs.
        """
        if not (0 <= eval_fraction < 1):
            raise ValueError(f"eval fraction must be in [0, 1), got {eval_fraction}")
        if eval_fraction == 0:
            return self, replace(self, records=[])
        stride = max(2, math.ceil(1.0 / eval_fraction))
        train, holdout = [], []
        for label in range(self.k):
            bucket = sorted(
                (r for r in self.records if r.label == label), key=lambda r: r.path
            )
            for i, rec in enumerate(bucket):
                (holdout if i % stride == stride - 1 else train).append(rec)
        return replace(self, records=train), replace(self, records=holdout)


def ingest(root: Path, domain: str, dataset_id: str = "") -> DatasetManifest:
    """Build a manifest from a root/<class>/<image> folder hierarchy.

    Labels are assigned by sorted class-folder name, so the indexing depends
    only on the class set. Undecodable images are skipped with a warning.
    """
    root = Path(root)
    if domain not in DOMAIN_TAGS:
        raise ValueError(f"domain must be one of {DOMAIN_TAGS}")
    if not root.is_dir():
        raise ValueError(f"dataset root does not exist: {root}")
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not class_dirs:
        raise ValueError(f"no class folders under {root}")
    class_names = [p.name for p in class_dirs]

    records: list[ManifestRecord] = []
    skipped = 0
    for label, class_dir in enumerate(class_dirs):
        for img_path in sorted(class_dir.iterdir()):
            if img_path.suffix.lower() not in _IMAGE_SUFFIXES or not img_path.is_file():
                continue
            try:
                with Image.open(img_path) as im:
                    im.verify()
            except Exception as exc:
                skipped += 1
                logger.warning("skipping undecodable image %s: %s", img_path, exc)
                continue
            records.append(
                ManifestRecord(
                    path=img_path.relative_to(root).as_posix(),
                    label=label,
                    class_name=class_names[label],
                    domain=domain,
                )
            )
    if not records:
        raise ValueError(f"no decodable images under {root} ({skipped} skipped)")
    manifest = DatasetManifest(
        records=records,
        class_names=class_names,
        root=str(root),
        dataset_id=dataset_id or root.name,
    )
    manifest.validate(check_files=False)
    return manifest


def load_image(path: Path, resolution: int | None = None) -> torch.Tensor:
    """Read an image file into a (3, H, W) float tensor in [0, 1]."""
    with Image.open(path) as im:
        im = im.convert("RGB")
        if resolution is not None and im.size != (resolution, resolution):
            im = im.resize((resolution, resolution), Image.BILINEAR)
        arr = np.asarray(im, dtype=np.float32) / 255.0
    return torch.from_numpy(arr).permute(2, 0, 1).contiguous()


def save_image(path: Path, pixels: torch.Tensor) -> None:
    """Write a (3, H, W) tensor in [0, 1] to a lossless PNG."""
    arr = (pixels.detach().clamp(0, 1).permute(1, 2, 0).numpy() * 255.0).round().astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    atomic_write_bytes(Path(path), buf.getvalue())


def load_images(
    manifest: DatasetManifest, resolution: int | None = None
) -> tuple[torch.Tensor, torch.Tensor]:
    """Load every manifest image into (pixels, labels) tensors, manifest order."""
    if not manifest.records:
        raise ValueError("manifest is empty")
    pixels = torch.stack(
        [load_image(manifest.resolve(rec), resolution) for rec in manifest.records]
    )
    labels = torch.tensor([rec.label for rec in manifest.records], dtype=torch.long)
    return pixels, labels


def load_batch(
    manifest: DatasetManifest,
    indices,
    resolution: int | None = None,
    domain_tag: str | None = None,
) -> ImageBatch:
    recs = [manifest.records[i] for i in indices]
    pixels = torch.stack([load_image(manifest.resolve(r), resolution) for r in recs])
    tag = domain_tag or recs[0].domain
    return ImageBatch(pixels=pixels, domain_tag=tag)


@dataclass
class AdaptedDatasetSpec:
    """Where adapted copies come from and where they land.

    keep selects which generator output is stored: the one-pass translation
    (the default) or the two-pass cycle reconstruction.
    """

    checkpoint: str | None
    output_root: str
    keep: str = KEEP_TRANSLATED
    dataset_id: str = ""
    resolution: int | None = None

    def __post_init__(self):
        if self.keep not in (KEEP_TRANSLATED, KEEP_RECONSTRUCTED):
            raise ValueError(f"keep must be translated or reconstructed, got {self.keep!r}")


def _checkpoint_id(spec: AdaptedDatasetSpec) -> str:
    if spec.checkpoint is None:
        return "stub"
    return Path(spec.checkpoint).stem


def materialize_adapted(
    manifest: DatasetManifest,
    spec: AdaptedDatasetSpec,
    pair: GeneratorPair | None = None,
    batch_size: int = 32,
    workers: int = 0,
) -> DatasetManifest:
    """Translate every manifest image and write an adapted dataset.

    Source-domain records go through U_s, target-domain records through
    U_t; with keep=reconstructed the partner generator is applied on top.
    Labels, class names, and record counts are preserved; provenance is
    rewritten to name the checkpoint and direction. Output paths mirror the
    input's relative paths, so original/adapted pairs align by path.
    """
    if not manifest.records:
        raise ValueError("manifest is empty")
    if pair is None:
        if spec.checkpoint is None:
            raise ValueError("spec has no checkpoint and no generator pair was given")
        from .gan_training import load_gan_checkpoint

        pair = load_gan_checkpoint(spec.checkpoint).pair
    ckpt_id = _checkpoint_id(spec)
    out_root = Path(spec.output_root)

    def adapt_chunk(chunk: list[ManifestRecord]) -> list[ManifestRecord]:
        pixels = torch.stack(
            [load_image(manifest.resolve(r), spec.resolution) for r in chunk]
        )
        out_records = []
        with torch.no_grad():
            by_domain: dict[str, list[int]] = {}
            for i, rec in enumerate(chunk):
                by_domain.setdefault(rec.domain, []).append(i)
            adapted = torch.empty_like(pixels)
            for domain, idxs in by_domain.items():
                first = pair.u_s if domain == "source" else pair.u_t
                second = pair.u_t if domain == "source" else pair.u_s
                sub = pixels[idxs]
                out = first(sub)
                if spec.keep == KEEP_RECONSTRUCTED:
                    out = second(out)
                adapted[idxs] = out
        for i, rec in enumerate(chunk):
            out_path = out_root / rec.path
            out_path = out_path.with_suffix(".png")
            save_image(out_path, adapted[i])
            direction = f"{rec.domain}-to-adapted"
            out_records.append(
                replace(
                    rec,
                    path=out_path.relative_to(out_root).as_posix(),
                    provenance=adapted_provenance(ckpt_id, direction),
                )
            )
        return out_records

    chunks = [
        manifest.records[i : i + batch_size]
        for i in range(0, len(manifest.records), batch_size)
    ]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(adapt_chunk, chunks))
    else:
        results = [adapt_chunk(chunk) for chunk in chunks]

    records = [rec for chunk in results for rec in chunk]
    adapted_manifest = DatasetManifest(
        records=records,
        class_names=list(manifest.class_names),
        root=str(out_root),
        dataset_id=spec.dataset_id or f"{manifest.dataset_id}_adapted",
    )
    adapted_manifest.validate(check_files=False)
    return adapted_manifest


def merge_manifests(
    parts: list[DatasetManifest], dataset_id: str, root: str | None = None
) -> DatasetManifest:
    """Concatenate manifests sharing a class list, rebasing paths onto one root.

    Supports mixing adapted instances generated from several checkpoints
    into one training set; the per-record provenance keeps them apart.
    """
    if not parts:
        raise ValueError("nothing to merge")
    base = parts[0]
    root = root if root is not None else base.root
    records: list[ManifestRecord] = []
    for part in parts:
        if part.class_names != base.class_names:
            raise ValueError("manifests disagree on class names")
        rel = Path(os.path.relpath(part.root, root)).as_posix()
        for rec in part.records:
            path = rec.path if rel == "." else f"{rel}/{rec.path}"
            records.append(replace(rec, path=path))
    merged = DatasetManifest(
        records=records,
        class_names=list(base.class_names),
        root=root,
        dataset_id=dataset_id,
    )
    merged.validate(check_files=False)
    return merged
