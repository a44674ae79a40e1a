"""Training loop for the stochastic style transfer GAN.

Each step draws an independently shuffled source batch and target batch (no
correspondence assumed), runs one discriminator update and then one
generator update, and logs every loss term. One checkpoint is written per
epoch, named by the 1-based epoch index, and is self-describing: it stores
the architecture settings needed to rebuild the networks.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import torch

from .data import DatasetManifest, load_images
from .determinism import seed_everything
from .disentangle import FeatureBackbone, ImageBatch, extract_content, extract_style
from .gan_losses import (
    GanLossTerms,
    LossWeights,
    adversarial_losses,
    loss_cross,
    loss_intra,
    loss_reconstruction,
    total_loss,
)
from .ioutil import MetricsLog, atomic_torch_save, stable_hash
from .networks import (
    DiscriminatorSet,
    GeneratorPair,
    build_discriminator_set,
    build_generator_pair,
)

logger = logging.getLogger(__name__)

_GAN_FORMAT = "styleshift-gan-v1"


@dataclass
class GanConfig:
    epochs: int = 10
    batch_size: int = 8
    resolution: int = 64
    seed: int = 0
    gen_channels: int = 24
    gen_depth: int = 3
    disc_channels: int = 24
    disc_layers: int = 3
    lr: float = 2e-4
    betas: tuple[float, float] = (0.5, 0.999)
    weights: LossWeights = field(default_factory=LossWeights)
    checkpoint_dir: str = "checkpoints"
    metrics_path: str | None = None

    def arch_dict(self) -> dict:
        return {
            "resolution": self.resolution,
            "gen_channels": self.gen_channels,
            "gen_depth": self.gen_depth,
            "disc_channels": self.disc_channels,
            "disc_layers": self.disc_layers,
        }

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["weights"] = vars(self.weights).copy()
        d["betas"] = list(self.betas)
        return d


@dataclass
class GanState:
    pair: GeneratorPair
    discs: DiscriminatorSet
    gen_opt: torch.optim.Optimizer
    disc_opt: torch.optim.Optimizer
    config: GanConfig
    epoch: int = 0
    seed: int = 0


def init_gan(config: GanConfig) -> GanState:
    seed_everything(config.seed)
    pair = build_generator_pair(base_channels=config.gen_channels, depth=config.gen_depth)
    discs = build_discriminator_set(
        base_channels=config.disc_channels, n_layers=config.disc_layers
    )
    gen_params = list(pair.u_s.parameters()) + list(pair.u_t.parameters())
    disc_params = (
        list(discs.style_s.parameters())
        + list(discs.style_t.parameters())
        + list(discs.content.parameters())
    )
    return GanState(
        pair=pair,
        discs=discs,
        gen_opt=torch.optim.Adam(gen_params, lr=config.lr, betas=config.betas),
        disc_opt=torch.optim.Adam(disc_params, lr=config.lr, betas=config.betas),
        config=config,
        epoch=0,
        seed=config.seed,
    )


def checkpoint_path(checkpoint_dir: Path, epoch: int) -> Path:
    return Path(checkpoint_dir) / f"gan_epoch{epoch:03d}.pt"


def save_gan_checkpoint(state: GanState, path: Path) -> None:
    payload = {
        "format": _GAN_FORMAT,
        "epoch": state.epoch,
        "seed": state.seed,
        "config_hash": stable_hash(state.config.to_dict()),
        "config": state.config.to_dict(),
        "arch": state.config.arch_dict(),
        "u_s": state.pair.u_s.state_dict(),
        "u_t": state.pair.u_t.state_dict(),
        "d_style_s": state.discs.style_s.state_dict(),
        "d_style_t": state.discs.style_t.state_dict(),
        "d_content": state.discs.content.state_dict(),
        "gen_opt": state.gen_opt.state_dict(),
        "disc_opt": state.disc_opt.state_dict(),
    }
    atomic_torch_save(payload, Path(path))


def load_gan_checkpoint(path: Path) -> GanState:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    if payload.get("format") != _GAN_FORMAT:
        raise ValueError(f"not a styleshift GAN checkpoint: {path}")
    cfg_dict = dict(payload["config"])
    cfg_dict["weights"] = LossWeights(**cfg_dict["weights"])
    cfg_dict["betas"] = tuple(cfg_dict["betas"])
    config = GanConfig(**cfg_dict)
    state = init_gan(config)
    state.pair.u_s.load_state_dict(payload["u_s"])
    state.pair.u_t.load_state_dict(payload["u_t"])
    state.discs.style_s.load_state_dict(payload["d_style_s"])
    state.discs.style_t.load_state_dict(payload["d_style_t"])
    state.discs.content.load_state_dict(payload["d_content"])
    state.gen_opt.load_state_dict(payload["gen_opt"])
    state.disc_opt.load_state_dict(payload["disc_opt"])
    state.epoch = payload["epoch"]
    state.seed = payload["seed"]
    return state


def gan_step(
    state: GanState,
    batch_s: torch.Tensor,
    batch_t: torch.Tensor,
    backbone: FeatureBackbone,
) -> dict[str, float]:
    """One discriminator update followed by one generator update."""
    weights = state.config.weights

    # Discriminator phase: fakes are produced without graph and detached inside.
    with torch.no_grad():
        fake_s = state.pair.u_s(batch_s)
        fake_t = state.pair.u_t(batch_t)
    adv_d = adversarial_losses(batch_s, batch_t, fake_s, fake_t, state.discs)
    state.disc_opt.zero_grad(set_to_none=True)
    adv_d.disc_total.backward()
    state.disc_opt.step()

    # Generator phase: fresh translations with graph, cycle, representations.
    i_su = state.pair.u_s(batch_s)
    i_tu = state.pair.u_t(batch_t)
    i_srec = state.pair.u_t(i_su)
    i_trec = state.pair.u_s(i_tu)

    with torch.no_grad():
        c_s = extract_content(ImageBatch(batch_s, "source"), backbone)
        c_t = extract_content(ImageBatch(batch_t, "target"), backbone)
        s_s = extract_style(ImageBatch(batch_s, "source"), backbone)
        s_t = extract_style(ImageBatch(batch_t, "target"), backbone)
    c_su = extract_content(ImageBatch(i_su, "source"), backbone)
    c_tu = extract_content(ImageBatch(i_tu, "target"), backbone)
    s_su = extract_style(ImageBatch(i_su, "source"), backbone)
    s_tu = extract_style(ImageBatch(i_tu, "target"), backbone)

    adv_g = adversarial_losses(batch_s, batch_t, i_su, i_tu, state.discs)
    terms = GanLossTerms(
        intra=loss_intra(c_s, c_su, c_t, c_tu),
        cross=loss_cross(s_s, s_t, s_su, s_tu),
        reconstruction=loss_reconstruction(batch_s, i_srec, batch_t, i_trec),
        adv_style_source=adv_g.gen_style_source,
        adv_style_target=adv_g.gen_style_target,
        adv_content=adv_g.gen_content,
    )
    gen_total = total_loss(terms, weights)
    state.gen_opt.zero_grad(set_to_none=True)
    gen_total.backward()
    state.gen_opt.step()

    return {
        "l_in": float(terms.intra.detach()),
        "l_cross": float(terms.cross.detach()),
        "l_rec": float(terms.reconstruction.detach()),
        "l_adv1": float(terms.adv_style_source.detach()),
        "l_adv2": float(terms.adv_style_target.detach()),
        "l_adv3": float(terms.adv_content.detach()),
        "gen_total": float(gen_total.detach()),
        "disc_total": float(adv_d.disc_total.detach()),
    }


def train_gan(
    source: DatasetManifest,
    target: DatasetManifest,
    config: GanConfig,
    backbone: FeatureBackbone,
) -> list[Path]:
    """Train for config.epochs epochs; returns the checkpoint paths written."""
    if not source.records or not target.records:
        raise ValueError("source and target manifests must be non-empty")
    src_images, _ = load_images(source, config.resolution)
    tgt_images, _ = load_images(target, config.resolution)

    state = init_gan(config)
    shuffle_gen = torch.Generator().manual_seed(config.seed)
    batch = config.batch_size
    steps = min(src_images.shape[0], tgt_images.shape[0]) // batch
    if steps == 0:
        raise ValueError(
            f"batch size {batch} exceeds dataset size "
            f"{min(src_images.shape[0], tgt_images.shape[0])}"
        )

    ckpt_dir = Path(config.checkpoint_dir)
    written: list[Path] = []
    with MetricsLog(config.metrics_path) as log:
        for epoch in range(1, config.epochs + 1):
            src_order = torch.randperm(src_images.shape[0], generator=shuffle_gen)
            tgt_order = torch.randperm(tgt_images.shape[0], generator=shuffle_gen)
            epoch_terms: dict[str, float] = {}
            for step in range(steps):
                bs = src_images[src_order[step * batch : (step + 1) * batch]]
                bt = tgt_images[tgt_order[step * batch : (step + 1) * batch]]
                step_metrics = gan_step(state, bs, bt, backbone)
                for term, value in step_metrics.items():
                    log.log(epoch, step, term, value)
                    epoch_terms[term] = epoch_terms.get(term, 0.0) + value
            for term, total in epoch_terms.items():
                log.log(epoch, -1, f"epoch_mean/{term}", total / steps)
            log.flush()
            state.epoch = epoch
            path = checkpoint_path(ckpt_dir, epoch)
            save_gan_checkpoint(state, path)
            written.append(path)
            logger.info(
                "gan epoch %d/%d: gen_total=%.4f disc_total=%.4f",
                epoch,
                config.epochs,
                epoch_terms.get("gen_total", 0.0) / steps,
                epoch_terms.get("disc_total", 0.0) / steps,
            )
    return written
