"""Synthetic two-domain shape datasets for desk-scale experiments.

Domains share class semantics (what shape is drawn) but differ in style:
foreground palette plus background treatment. The built-in styles are

  warm-plain    warm foreground colors on a plain light background
  cool-texture  cool foreground colors on a dark noisy checker texture
  mono-stripes  magenta/purple foregrounds on gray diagonal stripes
                (meant as a held-out unseen style)

Rendering is fully deterministic: every image gets its own RNG derived from
(seed, style, class, index), so regeneration is byte-identical regardless
of order.
"""

from __future__ import annotations

import colorsys
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .data import DatasetManifest, ManifestRecord
from .determinism import derive_seed
from .ioutil import atomic_write_bytes

SHAPES = ("circle", "crescent", "cross", "diamond", "ring", "square", "star", "triangle")
STYLES = ("warm-plain", "cool-texture", "mono-stripes")

_SUPERSAMPLE = 4


@dataclass(frozen=True)
class SyntheticSpec:
    classes: int = 8
    per_class: int = 25
    resolution: int = 64

    def __post_init__(self):
        if not (2 <= self.classes <= len(SHAPES)):
            raise ValueError(f"classes must be in [2, {len(SHAPES)}], got {self.classes}")
        if self.per_class < 1:
            raise ValueError("per_class must be >= 1")
        if self.resolution < 16:
            raise ValueError("resolution must be >= 16")


def _hsv(rng, hue_range, sat_range=(0.75, 1.0), val_range=(0.75, 1.0)) -> np.ndarray:
    h = rng.uniform(*hue_range) % 1.0
    s = rng.uniform(*sat_range)
    v = rng.uniform(*val_range)
    return np.array(colorsys.hsv_to_rgb(h, s, v), dtype=np.float32) * 255.0


def _background(style: str, res: int, rng) -> np.ndarray:
    yy, xx = np.mgrid[0:res, 0:res]
    if style == "warm-plain":
        base = np.array(
            [rng.uniform(225, 250), rng.uniform(215, 240), rng.uniform(190, 220)],
            dtype=np.float32,
        )
        return np.broadcast_to(base, (res, res, 3)).copy()
    if style == "cool-texture":
        tile = max(4, res // 8)
        phase = rng.integers(0, tile, size=2)
        checker = ((xx + phase[0]) // tile + (yy + phase[1]) // tile) % 2
        c1 = np.array([rng.uniform(15, 35), rng.uniform(25, 55), rng.uniform(70, 110)])
        c2 = c1 * rng.uniform(0.35, 0.55)
        bg = np.where(checker[..., None] == 0, c1, c2).astype(np.float32)
        bg += rng.normal(0.0, 9.0, size=bg.shape).astype(np.float32)
        return bg
    if style == "mono-stripes":
        width = max(4, res // 10)
        phase = int(rng.integers(0, 2 * width))
        stripes = ((xx + yy + phase) // width) % 2
        g1 = rng.uniform(150, 185)
        g2 = rng.uniform(55, 90)
        gray = np.where(stripes == 0, g1, g2).astype(np.float32)
        return np.repeat(gray[..., None], 3, axis=2)
    raise ValueError(f"unknown style {style!r}; known styles: {STYLES}")


def _foreground_color(style: str, rng) -> np.ndarray:
    if style == "warm-plain":
        return _hsv(rng, (0.00, 0.13))
    if style == "cool-texture":
        return _hsv(rng, (0.50, 0.70), val_range=(0.80, 1.0))
    if style == "mono-stripes":
        return _hsv(rng, (0.80, 0.92))
    raise ValueError(f"unknown style {style!r}; known styles: {STYLES}")


def _rotate(points, cx, cy, angle):
    cos_a, sin_a = np.cos(angle), np.sin(angle)
    return [
        (cx + (x - cx) * cos_a - (y - cy) * sin_a, cy + (x - cx) * sin_a + (y - cy) * cos_a)
        for x, y in points
    ]


def _shape_mask(shape: str, res: int, rng) -> np.ndarray:
    """Antialiased [0, 1] mask of one shape instance with jitter and rotation."""
    size = res * _SUPERSAMPLE
    mask = Image.new("L", (size, size), 0)
    draw = ImageDraw.Draw(mask)
    cx = size / 2 + rng.uniform(-0.08, 0.08) * size
    cy = size / 2 + rng.uniform(-0.08, 0.08) * size
    r = rng.uniform(0.28, 0.40) * size
    angle = rng.uniform(0, 2 * np.pi)

    if shape == "circle":
        draw.ellipse([cx - r, cy - r, cx + r, cy + r], fill=255)
    elif shape == "ring":
        draw.ellipse([cx - r, cy - r, cx + r, cy + r], fill=255)
        ri = 0.55 * r
        draw.ellipse([cx - ri, cy - ri, cx + ri, cy + ri], fill=0)
    elif shape == "crescent":
        draw.ellipse([cx - r, cy - r, cx + r, cy + r], fill=255)
        dx, dy = 0.55 * r * np.cos(angle), 0.55 * r * np.sin(angle)
        draw.ellipse(
            [cx + dx - 0.9 * r, cy + dy - 0.9 * r, cx + dx + 0.9 * r, cy + dy + 0.9 * r], fill=0
        )
    elif shape == "square":
        pts = [(cx - r, cy - r), (cx + r, cy - r), (cx + r, cy + r), (cx - r, cy + r)]
        draw.polygon(_rotate([(x, y) for x, y in pts], cx, cy, angle % (np.pi / 2)), fill=255)
    elif shape == "diamond":
        pts = [(cx, cy - 1.3 * r), (cx + 0.75 * r, cy), (cx, cy + 1.3 * r), (cx - 0.75 * r, cy)]
        draw.polygon(_rotate(pts, cx, cy, rng.uniform(-0.3, 0.3)), fill=255)
    elif shape == "triangle":
        pts = [
            (cx + r * np.cos(angle + 2 * np.pi * i / 3), cy + r * np.sin(angle + 2 * np.pi * i / 3))
            for i in range(3)
        ]
        draw.polygon(pts, fill=255)
    elif shape == "cross":
        w = 0.36 * r
        bar1 = [(cx - r, cy - w), (cx + r, cy - w), (cx + r, cy + w), (cx - r, cy + w)]
        bar2 = [(cx - w, cy - r), (cx + w, cy - r), (cx + w, cy + r), (cx - w, cy + r)]
        a = rng.uniform(-0.4, 0.4)
        draw.polygon(_rotate(bar1, cx, cy, a), fill=255)
        draw.polygon(_rotate(bar2, cx, cy, a), fill=255)
    elif shape == "star":
        pts = []
        for i in range(10):
            rad = r if i % 2 == 0 else 0.45 * r
            theta = angle + np.pi * i / 5
            pts.append((cx + rad * np.cos(theta), cy + rad * np.sin(theta)))
        draw.polygon(pts, fill=255)
    else:
        raise ValueError(f"unknown shape {shape!r}")

    mask = mask.resize((res, res), Image.BOX)
    return np.asarray(mask, dtype=np.float32)[..., None] / 255.0


def render_image(shape: str, style: str, res: int, rng) -> np.ndarray:
    """One (res, res, 3) uint8 image of a shape rendered in a style."""
    bg = _background(style, res, rng)
    fg = _foreground_color(style, rng)
    m = _shape_mask(shape, res, rng)
    img = bg * (1.0 - m) + fg * m
    return np.clip(img, 0, 255).astype(np.uint8)


def make_synthetic_domain(
    seed: int,
    spec: SyntheticSpec,
    out_root: Path,
    style: str,
    domain_tag: str,
    dataset_id: str,
) -> DatasetManifest:
    """Render one domain into out_root/<class>/<index>.png and return its manifest."""
    if style not in STYLES:
        raise ValueError(f"unknown style {style!r}; known styles: {STYLES}")
    out_root = Path(out_root)
    class_names = sorted(SHAPES[: spec.classes])
    records = []
    for label, shape in enumerate(class_names):
        for idx in range(spec.per_class):
            rng = np.random.default_rng(derive_seed(seed, style, shape, idx))
            img = render_image(shape, style, spec.resolution, rng)
            rel = f"{shape}/{idx:04d}.png"
            buf = io.BytesIO()
            Image.fromarray(img).save(buf, format="PNG")
            atomic_write_bytes(out_root / rel, buf.getvalue())
            records.append(
                ManifestRecord(path=rel, label=label, class_name=shape, domain=domain_tag)
            )
    manifest = DatasetManifest(
        records=records, class_names=class_names, root=str(out_root), dataset_id=dataset_id
    )
    manifest.validate(check_files=False)
    return manifest


def make_synthetic_domains(
    seed: int,
    spec: SyntheticSpec,
    out_root: Path,
    styles: tuple[str, str] = ("warm-plain", "cool-texture"),
) -> tuple[DatasetManifest, DatasetManifest]:
    """Two domains sharing shape classes but differing in style."""
    out_root = Path(out_root)
    source = make_synthetic_domain(seed, spec, out_root / "source", styles[0], "source", "source")
    target = make_synthetic_domain(seed, spec, out_root / "target", styles[1], "target", "target")
    return source, target
