"""Loss terms for the stochastic style transfer GAN.

Six terms feed the weighted total:

  intra             MSE between content representations of each domain's
                    input and its translated image (structure preserved)
  cross             MSE between style representations across domains: the
                    translation of the target must match the source style
                    and vice versa
  reconstruction    pixel MSE of the two round trips U_t(U_s(I_s)) and
                    U_s(U_t(I_t))
  adv_style_source  adversarial term where the source style critic judges
                    real source images against translations of the target
  adv_style_target  the mirrored term for the target style critic
  adv_content       shared realism critic judging pooled originals against
                    pooled translations, each image scored independently

Adversarial terms use the non-saturating cross-entropy readout on per-image
probabilities clamped to [EPS, 1 - EPS]. The generator-side value is the
label-flipped cross-entropy of the same two expectations, so generator and
discriminator losses coincide at the 0.5 equilibrium; the real-image
expectation carries no generator gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import torch

from .disentangle import (
    ContentRepr,
    ImageBatch,
    StyleRepr,
    content_distance,
    style_distance,
)

EPS = 1e-7


def _pixels(x) -> torch.Tensor:
    return x.pixels if isinstance(x, ImageBatch) else x


def _content(x) -> ContentRepr:
    return x if isinstance(x, ContentRepr) else ContentRepr(features=x)


def _mse(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {tuple(a.shape)} vs {tuple(b.shape)}")
    return ((a - b) ** 2).mean()


def loss_intra(c_s, c_su, c_t, c_tu) -> torch.Tensor:
    """Content mismatch within each domain: MSE(c_s, c_su) + MSE(c_t, c_tu)."""
    return content_distance(_content(c_s), _content(c_su)) + content_distance(
        _content(c_t), _content(c_tu)
    )


def loss_cross(s_s: StyleRepr, s_t: StyleRepr, s_su: StyleRepr, s_tu: StyleRepr) -> torch.Tensor:
    """Style mismatch across domains: translated-from-target vs source style and vice versa."""
    return style_distance(s_s, s_tu) + style_distance(s_t, s_su)


def loss_reconstruction(i_s, i_srec, i_t, i_trec) -> torch.Tensor:
    """Cycle reconstruction error: MSE(I_s, I_srec) + MSE(I_t, I_trec)."""
    return _mse(_pixels(i_s), _pixels(i_srec)) + _mse(_pixels(i_t), _pixels(i_trec))


@dataclass(frozen=True)
class LossWeights:
    """Non-negative weights for the six terms; the reference setting is all ones."""

    intra: float = 1.0
    cross: float = 1.0
    reconstruction: float = 1.0
    adv_style_source: float = 1.0
    adv_style_target: float = 1.0
    adv_content: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (value >= 0):
                raise ValueError(f"loss weight {f.name} must be >= 0, got {value}")


@dataclass
class GanLossTerms:
    """The six generator-side loss values, in the order the weights apply."""

    intra: torch.Tensor
    cross: torch.Tensor
    reconstruction: torch.Tensor
    adv_style_source: torch.Tensor
    adv_style_target: torch.Tensor
    adv_content: torch.Tensor


@dataclass
class AdversarialLosses:
    """Generator-side and discriminator-side values for the three critics."""

    gen_style_source: torch.Tensor
    gen_style_target: torch.Tensor
    gen_content: torch.Tensor
    disc_style_source: torch.Tensor
    disc_style_target: torch.Tensor
    disc_content: torch.Tensor

    @property
    def disc_total(self) -> torch.Tensor:
        return self.disc_style_source + self.disc_style_target + self.disc_content


def _probs(disc, images: torch.Tensor) -> torch.Tensor:
    return disc.image_scores(images).clamp(EPS, 1.0 - EPS)


def _nll_real(p: torch.Tensor) -> torch.Tensor:
    return -torch.log(p).mean()


def _nll_fake(p: torch.Tensor) -> torch.Tensor:
    return -torch.log(1.0 - p).mean()


def adversarial_losses(real_s, real_t, gen_s, gen_t, discs) -> AdversarialLosses:
    """Adversarial terms for both sides of the min-max game.

    real_s/real_t are original batches; gen_s = U_s(I_s), gen_t = U_t(I_t).
    The style critics cross domains: the source critic scores real source
    images against gen_t, the target critic scores real target images
    against gen_s. Fakes are detached on the discriminator side only.
    """
    xs, xt = _pixels(real_s), _pixels(real_t)
    gs, gt = _pixels(gen_s), _pixels(gen_t)
    for name, fake in (("gen_s", gs), ("gen_t", gt)):
        if fake.shape[1:] != xs.shape[1:]:
            raise ValueError(
                f"{name} shape {tuple(fake.shape)} incompatible with real batch "
                f"{tuple(xs.shape)}"
            )
    if xs.shape[1:] != xt.shape[1:]:
        raise ValueError("source and target batches must share resolution")

    reals = torch.cat([xs, xt], dim=0)
    fakes = torch.cat([gs, gt], dim=0)

    disc_style_source = _nll_real(_probs(discs.style_s, xs)) + _nll_fake(
        _probs(discs.style_s, gt.detach())
    )
    disc_style_target = _nll_real(_probs(discs.style_t, xt)) + _nll_fake(
        _probs(discs.style_t, gs.detach())
    )
    disc_content = _nll_real(_probs(discs.content, reals)) + _nll_fake(
        _probs(discs.content, fakes.detach())
    )

    gen_style_source = _nll_real(_probs(discs.style_s, gt)) + _nll_fake(
        _probs(discs.style_s, xs)
    )
    gen_style_target = _nll_real(_probs(discs.style_t, gs)) + _nll_fake(
        _probs(discs.style_t, xt)
    )
    gen_content = _nll_real(_probs(discs.content, fakes)) + _nll_fake(
        _probs(discs.content, reals)
    )

    return AdversarialLosses(
        gen_style_source=gen_style_source,
        gen_style_target=gen_style_target,
        gen_content=gen_content,
        disc_style_source=disc_style_source,
        disc_style_target=disc_style_target,
        disc_content=disc_content,
    )


def total_loss(terms: GanLossTerms, weights: LossWeights) -> torch.Tensor:
    """Weighted sum of the six generator-side terms."""
    total = None
    for f in fields(GanLossTerms):
        value = getattr(terms, f.name)
        value = value if isinstance(value, torch.Tensor) else torch.as_tensor(float(value))
        if not torch.isfinite(value).all():
            raise ValueError(f"non-finite loss term: {f.name}")
        contribution = getattr(weights, f.name) * value
        total = contribution if total is None else total + contribution
    return total
