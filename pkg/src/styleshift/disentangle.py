"""Content/style disentanglement through a frozen convolutional backbone.

An image batch is pushed through a fixed VGG-16-layout feature extractor.
The content representation is the activation of the second conv of the
deepest stage (relu5_2); the style representation is the list of Gram
matrices of the final activations of stages 1 through 5 (relu1_2, relu2_2,
relu3_3, relu4_3, relu5_3). Style distances are sums of per-layer mean
squared Gram differences, which makes them resolution-invariant thanks to
the 1/(C*H*W) Gram normalization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import torch
import torch.nn as nn

DOMAIN_TAGS = ("source", "target")

# VGG-16 convolutional layout: number of convs per stage and reference widths.
_STAGE_CONVS = (2, 2, 3, 3, 3)
_STAGE_WIDTHS = (64, 128, 256, 512, 512)

STYLE_TAPS = ("relu1_2", "relu2_2", "relu3_3", "relu4_3", "relu5_3")
CONTENT_TAP = "relu5_2"

# Stats for mapping [0, 1] RGB onto the range ImageNet-trained weights expect.
_INPUT_MEAN = (0.485, 0.456, 0.406)
_INPUT_STD = (0.229, 0.224, 0.225)


@dataclass(frozen=True)
class BackboneConfig:
    """How to build the fixed feature extractor.

    width scales the reference VGG-16 channel counts (1.0 = full size);
    weights_path points at a local state-dict file, otherwise the filters
    are drawn from a seeded deterministic initialization.
    """

    width: float = 1.0
    weights_path: str | None = None
    init_seed: int = 0
    input_sizes: tuple[int, ...] = (32, 48, 64, 96, 128, 160, 192, 224, 256)


@dataclass
class ImageBatch:
    """A batch of square RGB images, pixel values in the backbone input range."""

    pixels: torch.Tensor
    domain_tag: str = "source"

    def __post_init__(self):
        p = self.pixels
        if p.dim() != 4 or p.shape[1] != 3:
            raise ValueError(f"expected (N, 3, H, W) pixels, got {tuple(p.shape)}")
        if p.shape[0] < 1:
            raise ValueError("batch must contain at least one image")
        if p.shape[2] != p.shape[3]:
            raise ValueError(f"images must be square, got {p.shape[2]}x{p.shape[3]}")
        if not torch.isfinite(p).all():
            raise ValueError("non-finite pixel values")
        if self.domain_tag not in DOMAIN_TAGS:
            raise ValueError(f"domain_tag must be one of {DOMAIN_TAGS}")

    @property
    def resolution(self) -> int:
        return int(self.pixels.shape[2])


@dataclass
class ContentRepr:
    """Deep feature map of one designated backbone layer, shape (N, C, H, W)."""

    features: torch.Tensor


@dataclass
class StyleRepr:
    """Batch-averaged Gram matrices, one per style tap, shallow to deep."""

    grams: list[torch.Tensor]
    layer_ids: list[str] = field(default_factory=lambda: list(STYLE_TAPS))


def gram_matrix(features: torch.Tensor) -> torch.Tensor:
    """Normalized Gram matrix (F @ F.T) / (C*H*W) of a (C, H, W) feature map."""
    if features.dim() != 3:
        raise ValueError(f"expected (C, H, W) features, got {tuple(features.shape)}")
    c, h, w = features.shape
    if c < 1 or h * w < 1:
        raise ValueError("empty channel or spatial extent")
    if not torch.isfinite(features).all():
        raise ValueError("non-finite features")
    flat = features.reshape(c, h * w)
    return (flat @ flat.t()) / (c * h * w)


def _gram_batch(features: torch.Tensor) -> torch.Tensor:
    """Per-image Gram matrices of a (N, C, H, W) activation, shape (N, C, C)."""
    n, c, h, w = features.shape
    flat = features.reshape(n, c, h * w)
    return torch.bmm(flat, flat.transpose(1, 2)) / (c * h * w)


class FeatureBackbone(nn.Module):
    """Fixed VGG-16-layout extractor exposing named relu taps.

    Parameters are frozen at construction and never see an optimizer; the
    module stays in eval mode. Inputs flow through with gradients intact so
    the GAN generators can be trained through it.
    """

    def __init__(self, config: BackboneConfig):
        super().__init__()
        self.config = config
        widths = [max(8, round(w * config.width)) for w in _STAGE_WIDTHS]

        generator = torch.Generator().manual_seed(config.init_seed)
        convs = nn.ModuleDict()
        in_ch = 3
        for stage, (n_convs, width) in enumerate(zip(_STAGE_CONVS, widths), start=1):
            for conv_idx in range(1, n_convs + 1):
                conv = nn.Conv2d(in_ch, width, kernel_size=3, padding=1)
                with torch.no_grad():
                    nn.init.kaiming_normal_(conv.weight, generator=generator)
                    nn.init.zeros_(conv.bias)
                convs[f"conv{stage}_{conv_idx}"] = conv
                in_ch = width
        self.convs = convs
        self.pool = nn.MaxPool2d(2)
        self.register_buffer("input_mean", torch.tensor(_INPUT_MEAN).view(1, 3, 1, 1))
        self.register_buffer("input_std", torch.tensor(_INPUT_STD).view(1, 3, 1, 1))

        if config.weights_path is not None:
            state = torch.load(config.weights_path, map_location="cpu", weights_only=True)
            self.load_state_dict(state)
            self._identifier = f"vgg16-w{config.width}-file:{Path(config.weights_path).name}"
        else:
            self._identifier = f"vgg16-w{config.width}-seed:{config.init_seed}"

        for p in self.parameters():
            p.requires_grad_(False)
        self.eval()

    @property
    def identifier(self) -> str:
        return self._identifier

    @property
    def frozen(self) -> bool:
        return True

    @property
    def style_taps(self) -> tuple[str, ...]:
        return STYLE_TAPS

    @property
    def content_tap(self) -> str:
        return CONTENT_TAP

    def train(self, mode: bool = True):
        # Frozen backbone: ignore requests to enter training mode.
        return super().train(False)

    def _check_input(self, pixels: torch.Tensor) -> None:
        if pixels.dim() != 4 or pixels.shape[1] != 3:
            raise ValueError(f"expected (N, 3, H, W) input, got {tuple(pixels.shape)}")
        size = int(pixels.shape[2])
        if pixels.shape[2] != pixels.shape[3] or size not in self.config.input_sizes:
            raise ValueError(
                f"input size {tuple(pixels.shape[2:])} not in configured set "
                f"{self.config.input_sizes}"
            )

    def taps(self, pixels: torch.Tensor, wanted: set[str]) -> dict[str, torch.Tensor]:
        """Run the net and collect the requested relu activations."""
        self._check_input(pixels)
        x = (pixels - self.input_mean) / self.input_std
        out: dict[str, torch.Tensor] = {}
        remaining = set(wanted)
        for stage, n_convs in enumerate(_STAGE_CONVS, start=1):
            for conv_idx in range(1, n_convs + 1):
                x = torch.relu(self.convs[f"conv{stage}_{conv_idx}"](x))
                name = f"relu{stage}_{conv_idx}"
                if name in remaining:
                    out[name] = x
                    remaining.discard(name)
            if not remaining:
                return out
            x = self.pool(x)
        if remaining:
            raise ValueError(f"unknown taps requested: {sorted(remaining)}")
        return out

    def forward(self, pixels: torch.Tensor) -> dict[str, torch.Tensor]:
        return self.taps(pixels, set(STYLE_TAPS) | {CONTENT_TAP})


def load_backbone(config: BackboneConfig | None = None) -> FeatureBackbone:
    return FeatureBackbone(config or BackboneConfig())


def extract_content(batch: ImageBatch, backbone: FeatureBackbone) -> ContentRepr:
    """Content representation: activations at the deep content tap."""
    taps = backbone.taps(batch.pixels, {backbone.content_tap})
    return ContentRepr(features=taps[backbone.content_tap])


def extract_style(batch: ImageBatch, backbone: FeatureBackbone) -> StyleRepr:
    """Style representation: per-image Grams at each style tap, averaged over the batch."""
    taps = backbone.taps(batch.pixels, set(backbone.style_taps))
    grams = [_gram_batch(taps[name]).mean(dim=0) for name in backbone.style_taps]
    return StyleRepr(grams=grams, layer_ids=list(backbone.style_taps))


def content_distance(a: ContentRepr, b: ContentRepr) -> torch.Tensor:
    if a.features.shape != b.features.shape:
        raise ValueError(
            f"content shape mismatch: {tuple(a.features.shape)} vs {tuple(b.features.shape)}"
        )
    return ((a.features - b.features) ** 2).mean()


def style_layer_distances(a: StyleRepr, b: StyleRepr) -> list[torch.Tensor]:
    """Per-layer mean squared Gram differences, shallow to deep."""
    if a.layer_ids != b.layer_ids:
        raise ValueError(f"style layer mismatch: {a.layer_ids} vs {b.layer_ids}")
    distances = []
    for ga, gb in zip(a.grams, b.grams):
        if ga.shape != gb.shape:
            raise ValueError(f"gram shape mismatch: {tuple(ga.shape)} vs {tuple(gb.shape)}")
        distances.append(((ga - gb) ** 2).mean())
    return distances


def style_distance(a: StyleRepr, b: StyleRepr) -> torch.Tensor:
    """Pseudometric between style representations: sum of per-layer MSEs."""
    parts = style_layer_distances(a, b)
    total = parts[0]
    for part in parts[1:]:
        total = total + part
    return total
