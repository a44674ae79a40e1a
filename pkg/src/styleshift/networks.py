"""Generator and discriminator networks for the style transfer GAN."""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn

from .disentangle import ImageBatch


class _Down(nn.Module):
    def __init__(self, in_ch: int, out_ch: int, normalize: bool = True):
        super().__init__()
        layers = [nn.Conv2d(in_ch, out_ch, 4, stride=2, padding=1)]
        if normalize:
            layers.append(nn.InstanceNorm2d(out_ch))
        layers.append(nn.LeakyReLU(0.2, inplace=True))
        self.block = nn.Sequential(*layers)

    def forward(self, x):
        return self.block(x)


class _Up(nn.Module):
    def __init__(self, in_ch: int, out_ch: int):
        super().__init__()
        self.block = nn.Sequential(
            nn.ConvTranspose2d(in_ch, out_ch, 4, stride=2, padding=1),
            nn.InstanceNorm2d(out_ch),
            nn.ReLU(inplace=True),
        )

    def forward(self, x):
        return self.block(x)


class UnetGenerator(nn.Module):
    """Encoder-decoder image translator with skip connections.

    Output pixels pass through tanh and are remapped to [0, 1], matching the
    input convention, so translated batches can be fed straight back into
    the backbone or the partner generator.
    """

    def __init__(self, base_channels: int = 32, depth: int = 3, in_channels: int = 3):
        super().__init__()
        if depth < 2:
            raise ValueError("unet depth must be at least 2")
        self.depth = depth
        widths = [base_channels * (2**i) for i in range(depth)]

        downs = [_Down(in_channels, widths[0], normalize=False)]
        for i in range(1, depth):
            downs.append(_Down(widths[i - 1], widths[i]))
        self.downs = nn.ModuleList(downs)

        ups = []
        for i in range(depth - 1, 0, -1):
            in_ch = widths[i] if i == depth - 1 else widths[i] * 2
            ups.append(_Up(in_ch, widths[i - 1]))
        self.ups = nn.ModuleList(ups)
        self.head = nn.ConvTranspose2d(widths[0] * 2, in_channels, 4, stride=2, padding=1)

    def _check_input(self, x: torch.Tensor) -> None:
        if x.dim() != 4:
            raise ValueError(f"expected (N, C, H, W) input, got {tuple(x.shape)}")
        size = int(x.shape[2])
        if x.shape[2] != x.shape[3] or size % (2**self.depth) != 0 or size < 2**self.depth * 2:
            raise ValueError(
                f"input size {tuple(x.shape[2:])} incompatible with unet depth {self.depth}"
            )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        self._check_input(x)
        skips = []
        h = x
        for down in self.downs:
            h = down(h)
            skips.append(h)
        h = skips[-1]
        for i, up in enumerate(self.ups):
            h = up(h if i == 0 else torch.cat([h, skips[-1 - i]], dim=1))
        h = self.head(torch.cat([h, skips[0]], dim=1))
        return (torch.tanh(h) + 1.0) / 2.0


class IdentityGenerator(nn.Module):
    """Pass-through stand-in for a generator; used as a test double."""

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x.clone()


class PatchDiscriminator(nn.Module):
    """Convolutional real/fake critic emitting a patch-level logit map."""

    def __init__(self, base_channels: int = 32, n_layers: int = 3, in_channels: int = 3):
        super().__init__()
        layers = [_Down(in_channels, base_channels, normalize=False)]
        ch = base_channels
        for _ in range(n_layers - 1):
            layers.append(_Down(ch, ch * 2))
            ch *= 2
        layers.append(nn.Conv2d(ch, 1, 3, padding=1))
        self.net = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)

    def image_scores(self, x: torch.Tensor) -> torch.Tensor:
        """Per-image realness probability: patch sigmoid scores averaged."""
        return torch.sigmoid(self.forward(x)).mean(dim=(1, 2, 3))


@dataclass
class GeneratorPair:
    """Source and target generators, same architecture, independent weights."""

    u_s: nn.Module
    u_t: nn.Module


@dataclass
class DiscriminatorSet:
    """Style critics for each domain plus the shared realism critic."""

    style_s: nn.Module
    style_t: nn.Module
    content: nn.Module


def build_generator_pair(base_channels: int = 32, depth: int = 3) -> GeneratorPair:
    return GeneratorPair(
        u_s=UnetGenerator(base_channels=base_channels, depth=depth),
        u_t=UnetGenerator(base_channels=base_channels, depth=depth),
    )


def build_discriminator_set(base_channels: int = 32, n_layers: int = 3) -> DiscriminatorSet:
    return DiscriminatorSet(
        style_s=PatchDiscriminator(base_channels=base_channels, n_layers=n_layers),
        style_t=PatchDiscriminator(base_channels=base_channels, n_layers=n_layers),
        content=PatchDiscriminator(base_channels=base_channels, n_layers=n_layers),
    )


def translate(generator: nn.Module, batch: ImageBatch) -> ImageBatch:
    """Apply a generator to a batch; output keeps the input's shape and domain tag."""
    out = generator(batch.pixels)
    if out.shape != batch.pixels.shape:
        raise ValueError(
            f"generator changed shape: {tuple(batch.pixels.shape)} -> {tuple(out.shape)}"
        )
    return ImageBatch(pixels=out, domain_tag=batch.domain_tag)
