"""Teacher-student self-ensembling classifier.

The student trains supervised on labeled source-domain instances (original
and style-mapped); in ensemble mode it additionally minimizes a consistency
penalty between its predictions on original target images and the teacher's
predictions on the style-mapped counterparts. The teacher is a gradient-free
copy whose parameters track the student by exponential moving average.
"""

from __future__ import annotations

import copy
import enum
import logging
import math
from dataclasses import dataclass, field

import torch
import torch.nn as nn
import torch.nn.functional as F

from .data import DatasetManifest, load_images
from .determinism import seed_everything
from .ioutil import MetricsLog, atomic_torch_save, stable_hash

logger = logging.getLogger(__name__)


class TrainMode(str, enum.Enum):
    """What data a classifier trains on.

    base: original source only, supervised.
    tune: original plus adapted source, supervised (simple augmentation).
    ensemble: tune's supervised data plus unsupervised consistency on
              (original, adapted) target pairs.
    """

    BASE = "base"
    TUNE = "tune"
    ENSEMBLE = "ensemble"


class ConvClassifier(nn.Module):
    """Small convolutional classifier: stride-2 conv blocks, GAP, linear head."""

    def __init__(self, num_classes: int, base_channels: int = 32, blocks: int = 4):
        super().__init__()
        layers = []
        in_ch = 3
        ch = base_channels
        for i in range(blocks):
            layers += [
                nn.Conv2d(in_ch, ch, 3, stride=2, padding=1),
                nn.GroupNorm(4, ch),
                nn.ReLU(inplace=True),
            ]
            in_ch = ch
            if i < blocks - 2:
                ch *= 2
        self.features = nn.Sequential(*layers)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.head = nn.Linear(in_ch, num_classes)
        self.num_classes = num_classes

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.pool(self.features(x)).flatten(1)
        return self.head(h)

    def probabilities(self, x: torch.Tensor) -> torch.Tensor:
        return F.softmax(self.forward(x), dim=1)


def supervised_loss(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Softmax cross-entropy, averaged over the batch."""
    if logits.dim() != 2:
        raise ValueError(f"expected (N, k) logits, got {tuple(logits.shape)}")
    if not torch.isfinite(logits).all():
        raise ValueError("non-finite logits")
    k = logits.shape[1]
    if labels.numel() and (labels.min() < 0 or labels.max() >= k):
        raise ValueError(f"labels out of range [0, {k})")
    return F.cross_entropy(logits, labels)


def consistency_loss(student_probs: torch.Tensor, teacher_probs: torch.Tensor) -> torch.Tensor:
    """Mean squared difference between student and teacher class probabilities."""
    if student_probs.shape != teacher_probs.shape:
        raise ValueError(
            f"shape mismatch: {tuple(student_probs.shape)} vs {tuple(teacher_probs.shape)}"
        )
    for name, probs in (("student", student_probs), ("teacher", teacher_probs)):
        sums = probs.sum(dim=1)
        if not torch.allclose(sums, torch.ones_like(sums), atol=1e-4):
            raise ValueError(f"{name} rows are not normalized probability vectors")
    return ((student_probs - teacher_probs) ** 2).mean()


@dataclass
class EnsembleState:
    """Student/teacher pair plus the EMA and consistency settings."""

    student: nn.Module
    teacher: nn.Module
    ema_decay: float = 0.99
    consistency_weight: float = 1.0
    step: int = 0

    def __post_init__(self):
        if not (0.0 <= self.ema_decay <= 1.0):
            raise ValueError(f"ema_decay must be in [0, 1], got {self.ema_decay}")
        if self.consistency_weight < 0:
            raise ValueError("consistency_weight must be >= 0")


def init_ensemble(
    num_classes: int,
    base_channels: int = 32,
    ema_decay: float = 0.99,
    consistency_weight: float = 1.0,
) -> EnsembleState:
    student = ConvClassifier(num_classes, base_channels=base_channels)
    teacher = copy.deepcopy(student)
    for p in teacher.parameters():
        p.requires_grad_(False)
    teacher.eval()
    return EnsembleState(
        student=student,
        teacher=teacher,
        ema_decay=ema_decay,
        consistency_weight=consistency_weight,
    )


def ema_update(state: EnsembleState) -> EnsembleState:
    """teacher <- decay * teacher + (1 - decay) * student, elementwise.

    Floating-point buffers follow the same rule; the student is untouched.
    """
    alpha = state.ema_decay
    t_params = list(state.teacher.parameters())
    s_params = list(state.student.parameters())
    if len(t_params) != len(s_params) or any(
        tp.shape != sp.shape for tp, sp in zip(t_params, s_params)
    ):
        raise ValueError("teacher/student architecture mismatch")
    with torch.no_grad():
        for tp, sp in zip(t_params, s_params):
            if tp.grad is not None:
                raise RuntimeError("teacher parameters must never carry gradients")
            tp.mul_(alpha).add_(sp, alpha=1.0 - alpha)
        for tb, sb in zip(state.teacher.buffers(), state.student.buffers()):
            if tb.dtype.is_floating_point:
                tb.mul_(alpha).add_(sb, alpha=1.0 - alpha)
            else:
                tb.copy_(sb)
    return state


def train_step(
    state: EnsembleState,
    optimizer: torch.optim.Optimizer,
    sup_batch: tuple[torch.Tensor, torch.Tensor],
    unsup_pair: tuple[torch.Tensor, torch.Tensor] | None = None,
    w_u: float | None = None,
    symmetric: bool = False,
    confidence_threshold: float | None = None,
) -> tuple[EnsembleState, dict]:
    """One gradient step on L_sup + w_u * L_unsup, then exactly one EMA update.

    In the consistency term the student consumes the original target images
    and the teacher their style-mapped counterparts; unsup_pair rows must be
    aligned views of the same underlying image. With symmetric=True the
    mirrored assignment is added as well.
    """
    images, labels = sup_batch
    weight = state.consistency_weight if w_u is None else w_u

    logits = state.student(images)
    l_sup = supervised_loss(logits, labels)
    metrics = {"sup_loss": float(l_sup.detach())}

    loss = l_sup
    if unsup_pair is not None:
        originals, mapped = unsup_pair
        if originals.shape != mapped.shape:
            raise ValueError(
                f"unsupervised pair length/shape mismatch: "
                f"{tuple(originals.shape)} vs {tuple(mapped.shape)}"
            )
        student_probs = F.softmax(state.student(originals), dim=1)
        with torch.no_grad():
            teacher_probs = F.softmax(state.teacher(mapped), dim=1)
        if confidence_threshold is not None:
            keep = teacher_probs.max(dim=1).values >= confidence_threshold
            student_probs = student_probs[keep]
            teacher_probs = teacher_probs[keep]
        if student_probs.shape[0] > 0:
            l_unsup = consistency_loss(student_probs, teacher_probs)
        else:
            l_unsup = logits.new_zeros(())
        if symmetric:
            student_probs_m = F.softmax(state.student(mapped), dim=1)
            with torch.no_grad():
                teacher_probs_o = F.softmax(state.teacher(originals), dim=1)
            l_unsup = l_unsup + consistency_loss(student_probs_m, teacher_probs_o)
        loss = loss + weight * l_unsup
        metrics["unsup_loss"] = float(l_unsup.detach())
        metrics["consistency_weight"] = float(weight)

    optimizer.zero_grad(set_to_none=True)
    loss.backward()
    optimizer.step()
    ema_update(state)
    state.step += 1
    metrics["total_loss"] = float(loss.detach())
    return state, metrics


@dataclass
class ModeData:
    """Manifests required by a training mode; target pairs align by path."""

    source: DatasetManifest
    source_adapted: DatasetManifest | None = None
    target: DatasetManifest | None = None
    target_adapted: DatasetManifest | None = None

    def for_mode(self, mode: TrainMode) -> None:
        if mode in (TrainMode.TUNE, TrainMode.ENSEMBLE) and self.source_adapted is None:
            raise ValueError(f"mode {mode.value} needs an adapted source manifest")
        if mode == TrainMode.ENSEMBLE and (self.target is None or self.target_adapted is None):
            raise ValueError("mode ensemble needs original and adapted target manifests")
        manifests = [
            m
            for m in (self.source, self.source_adapted, self.target, self.target_adapted)
            if m is not None
        ]
        ks = {m.k for m in manifests}
        if len(ks) != 1:
            raise ValueError(f"manifests disagree on class count: {sorted(ks)}")


@dataclass
class ClassifierConfig:
    epochs: int = 20
    batch_size: int = 32
    lr: float = 1e-3
    base_channels: int = 32
    resolution: int = 64
    ema_decay: float = 0.99
    consistency_weight: float = 1.0
    ramp_fraction: float = 0.1  # 0 disables the ramp-up
    symmetric_consistency: bool = False
    confidence_threshold: float | None = None
    seed: int = 0
    metrics_path: str | None = None
    checkpoint_path: str | None = None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _aligned_pairs(
    target: DatasetManifest, adapted: DatasetManifest
) -> list[tuple[int, int]]:
    """Indices of (original, adapted) records sharing a relative path (modulo suffix)."""
    key = lambda p: p.rsplit(".", 1)[0]
    adapted_by_path = {key(rec.path): i for i, rec in enumerate(adapted.records)}
    pairs = []
    for i, rec in enumerate(target.records):
        j = adapted_by_path.get(key(rec.path))
        if j is not None:
            pairs.append((i, j))
    if not pairs:
        raise ValueError("no aligned (original, adapted) target pairs; paths do not match")
    return pairs


def ramp_weight(base: float, step: int, total_steps: int, ramp_fraction: float) -> float:
    """Linear ramp of the consistency weight over the first fraction of steps."""
    if ramp_fraction <= 0:
        return base
    ramp_steps = max(1, int(math.ceil(ramp_fraction * total_steps)))
    return base * min(1.0, (step + 1) / ramp_steps)


def train_classifier(
    mode: TrainMode, data: ModeData, config: ClassifierConfig
) -> tuple[EnsembleState, list[dict]]:
    """Train one classifier in the given mode; returns final state and metrics.

    Supervised batches mix original and adapted source records uniformly at
    random. In ensemble mode every step also draws a batch of aligned
    (original, adapted) target pairs for the consistency term.
    """
    mode = TrainMode(mode)
    data.for_mode(mode)
    seed_everything(config.seed)

    sup_manifests = [data.source]
    if mode in (TrainMode.TUNE, TrainMode.ENSEMBLE) and data.source_adapted is not None:
        sup_manifests.append(data.source_adapted)
    sup_images, sup_labels = [], []
    for manifest in sup_manifests:
        imgs, labels = load_images(manifest, config.resolution)
        sup_images.append(imgs)
        sup_labels.append(labels)
    sup_images = torch.cat(sup_images)
    sup_labels = torch.cat(sup_labels)

    unsup_orig = unsup_mapped = None
    if mode == TrainMode.ENSEMBLE:
        t_imgs, _ = load_images(data.target, config.resolution)
        tm_imgs, _ = load_images(data.target_adapted, config.resolution)
        pairs = _aligned_pairs(data.target, data.target_adapted)
        unsup_orig = t_imgs[[i for i, _ in pairs]]
        unsup_mapped = tm_imgs[[j for _, j in pairs]]

    state = init_ensemble(
        num_classes=data.source.k,
        base_channels=config.base_channels,
        ema_decay=config.ema_decay,
        consistency_weight=config.consistency_weight,
    )
    optimizer = torch.optim.Adam(state.student.parameters(), lr=config.lr)

    n = sup_images.shape[0]
    batch = min(config.batch_size, n)
    steps_per_epoch = n // batch
    total_steps = max(1, config.epochs * steps_per_epoch)
    shuffle_gen = torch.Generator().manual_seed(config.seed)

    unsup_order: list[int] = []

    def next_unsup_batch() -> tuple[torch.Tensor, torch.Tensor]:
        nonlocal unsup_order
        if len(unsup_order) < batch:
            refill = torch.randperm(unsup_orig.shape[0], generator=shuffle_gen).tolist()
            unsup_order.extend(refill)
        take, unsup_order = unsup_order[:batch], unsup_order[batch:]
        return unsup_orig[take], unsup_mapped[take]

    metrics_rows: list[dict] = []
    with MetricsLog(config.metrics_path) as log:
        for epoch in range(1, config.epochs + 1):
            order = torch.randperm(n, generator=shuffle_gen)
            epoch_metrics: list[dict] = []
            for step_in_epoch in range(steps_per_epoch):
                idx = order[step_in_epoch * batch : (step_in_epoch + 1) * batch]
                sup = (sup_images[idx], sup_labels[idx])
                unsup = None
                w_u = 0.0
                if mode == TrainMode.ENSEMBLE:
                    unsup = next_unsup_batch()
                    w_u = ramp_weight(
                        config.consistency_weight,
                        state.step,
                        total_steps,
                        config.ramp_fraction,
                    )
                state, step_metrics = train_step(
                    state,
                    optimizer,
                    sup,
                    unsup_pair=unsup,
                    w_u=w_u,
                    symmetric=config.symmetric_consistency,
                    confidence_threshold=config.confidence_threshold,
                )
                epoch_metrics.append(step_metrics)
                for term, value in step_metrics.items():
                    log.log(epoch, step_in_epoch, term, value)
            if epoch_metrics:
                for term in epoch_metrics[0]:
                    mean = sum(m[term] for m in epoch_metrics) / len(epoch_metrics)
                    log.log(epoch, -1, f"epoch_mean/{term}", mean)
                    metrics_rows.append(
                        {"epoch": epoch, "term": f"epoch_mean/{term}", "value": mean}
                    )
            log.flush()

    if config.checkpoint_path is not None:
        save_classifier_checkpoint(state, mode, data.source.class_names, config)
    return state, metrics_rows


def eval_network(state: EnsembleState, mode: TrainMode, read: str = "auto") -> nn.Module:
    """Which network evaluation reads: the teacher in ensemble mode, else the student."""
    if read == "student":
        return state.student
    if read == "teacher":
        return state.teacher
    return state.teacher if TrainMode(mode) == TrainMode.ENSEMBLE else state.student


def save_classifier_checkpoint(
    state: EnsembleState,
    mode: TrainMode,
    class_names: list[str],
    config: ClassifierConfig,
) -> None:
    payload = {
        "format": "styleshift-clf-v1",
        "mode": TrainMode(mode).value,
        "class_names": list(class_names),
        "base_channels": config.base_channels,
        "seed": config.seed,
        "step": state.step,
        "ema_decay": state.ema_decay,
        "consistency_weight": state.consistency_weight,
        "config_hash": stable_hash(config.to_dict()),
        "student": state.student.state_dict(),
        "teacher": state.teacher.state_dict(),
    }
    atomic_torch_save(payload, config.checkpoint_path)


def load_classifier_checkpoint(path) -> tuple[EnsembleState, TrainMode, list[str]]:
    payload = torch.load(path, map_location="cpu", weights_only=True)
    if payload.get("format") != "styleshift-clf-v1":
        raise ValueError(f"not a classifier checkpoint: {path}")
    k = len(payload["class_names"])
    state = init_ensemble(
        num_classes=k,
        base_channels=payload["base_channels"],
        ema_decay=payload["ema_decay"],
        consistency_weight=payload["consistency_weight"],
    )
    state.student.load_state_dict(payload["student"])
    state.teacher.load_state_dict(payload["teacher"])
    state.step = payload["step"]
    return state, TrainMode(payload["mode"]), payload["class_names"]
