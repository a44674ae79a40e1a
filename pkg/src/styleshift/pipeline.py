"""Experiment orchestration: data -> gan -> generate -> classifiers -> evaluate.

Every stage checks for its own artifacts and skips work that is already on
disk, so a rerun of a finished experiment only reloads the transfer matrix
and an interrupted one resumes at the first incomplete stage. Any stage
failure aborts the run with the stage name; artifacts written so far stay.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

from .config import ConfigError, KeyValueConfig
from .data import (
    AdaptedDatasetSpec,
    DatasetManifest,
    ingest,
    materialize_adapted,
    merge_manifests,
)
from .determinism import derive_seed, seed_everything
from .disentangle import BackboneConfig, FeatureBackbone, load_backbone
from .ensemble import (
    ClassifierConfig,
    ModeData,
    TrainMode,
    eval_network,
    load_classifier_checkpoint,
    train_classifier,
)
from .evaluation import (
    ANNOTATION_SUP_ADAPTED,
    ANNOTATION_SUP_ORIGINAL,
    ANNOTATION_UNSEEN,
    ANNOTATION_UNSUP,
    MatrixCell,
    TransferMatrix,
    evaluate_model,
    render_report,
)
from .gan_losses import LossWeights
from .gan_training import GanConfig, checkpoint_path, load_gan_checkpoint, train_gan
from .ioutil import atomic_write_text
from .synthetic import SyntheticSpec, make_synthetic_domain, make_synthetic_domains

logger = logging.getLogger(__name__)

STAGES = ("data", "gan", "generate", "classifiers", "evaluate")

_ORIGINAL_ALIASES = ("source", "target", "holdout")
_ADAPTED_ALIASES = ("source_adapted", "target_adapted")


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage}: {message}")
        self.stage = stage


@dataclass
class RosterEntry:
    """One classifier to train: its mode plus the dataset aliases it consumes."""

    name: str
    mode: TrainMode
    sup: list[str] = field(default_factory=list)
    unsup: list[str] = field(default_factory=list)

    @staticmethod
    def with_mode_defaults(name: str, mode: TrainMode) -> "RosterEntry":
        mode = TrainMode(mode)
        sup = {
            TrainMode.BASE: ["source"],
            TrainMode.TUNE: ["source", "source_adapted"],
            TrainMode.ENSEMBLE: ["source", "source_adapted"],
        }[mode]
        unsup = ["target", "target_adapted"] if mode == TrainMode.ENSEMBLE else []
        return RosterEntry(name=name, mode=mode, sup=list(sup), unsup=list(unsup))


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    output_root: str = "runs/experiment"
    seed: int = 0
    deterministic: bool = True

    # data
    synthetic: bool = True
    classes: int = 8
    per_class: int = 25
    resolution: int = 64
    source_style: str = "warm-plain"
    target_style: str = "cool-texture"
    holdout_style: str = ""  # empty = no held-out domain
    source_root: str = ""  # real datasets: root/<class>/<image>
    target_root: str = ""
    holdout_root: str = ""
    subsample_source: float = 1.0
    subsample_target: float = 1.0
    subsample_holdout: float = 1.0
    eval_fraction: float = 0.1
    full_eval: bool = False

    # backbone
    backbone_width: float = 0.25
    backbone_weights: str = ""
    backbone_seed: int = 0

    # gan
    gan_epochs: int = 10
    gan_batch_size: int = 8
    gan_lr: float = 2e-4
    gan_gen_channels: int = 24
    gan_disc_channels: int = 24
    gan_depth: int = 3
    checkpoint_epoch: int = 5
    loss_weights: LossWeights = field(default_factory=LossWeights)
    generate_keep: str = "translated"

    # classifiers
    clf_epochs: int = 25
    clf_batch_size: int = 32
    clf_lr: float = 1e-3
    clf_channels: int = 32
    ema_decay: float = 0.99
    consistency_weight: float = 1.0
    ramp_fraction: float = 0.1
    symmetric_consistency: bool = False
    confidence_threshold: float = 0.0  # 0 disables thresholding
    eval_read: str = "auto"  # auto | teacher | student
    seeds: list[int] = field(default_factory=lambda: [1, 2, 3])

    roster: list[RosterEntry] = field(
        default_factory=lambda: [
            RosterEntry.with_mode_defaults("M_base", TrainMode.BASE),
            RosterEntry.with_mode_defaults("M_tune", TrainMode.TUNE),
            RosterEntry.with_mode_defaults("M_ensemb", TrainMode.ENSEMBLE),
        ]
    )
    eval_datasets: list[str] = field(default_factory=lambda: ["source", "target"])
    top_k: list[int] = field(default_factory=lambda: [1, 5])

    def validate(self) -> None:
        needs_adapted = any(
            alias in _ADAPTED_ALIASES
            for entry in self.roster
            for alias in list(entry.sup) + list(entry.unsup)
        ) or any(alias in _ADAPTED_ALIASES for alias in self.eval_datasets)
        if needs_adapted and self.checkpoint_epoch > self.gan_epochs:
            raise ConfigError(
                f"checkpoint_epoch {self.checkpoint_epoch} exceeds gan_epochs {self.gan_epochs}"
            )
        if not self.roster:
            raise ConfigError("roster is empty")
        if not self.eval_datasets:
            raise ConfigError("eval.datasets is empty")
        known = set(_ORIGINAL_ALIASES) | set(_ADAPTED_ALIASES)
        for alias in self.eval_datasets:
            if alias not in known:
                raise ConfigError(f"unknown eval dataset alias {alias!r}; known: {sorted(known)}")
        for entry in self.roster:
            for alias in list(entry.sup) + list(entry.unsup):
                if alias not in known:
                    raise ConfigError(
                        f"roster entry {entry.name}: unknown dataset alias {alias!r}"
                    )
        if self.eval_read not in ("auto", "teacher", "student"):
            raise ConfigError(f"eval_read must be auto|teacher|student, got {self.eval_read!r}")
        if not self.synthetic and (not self.source_root or not self.target_root):
            raise ConfigError("non-synthetic runs need source_root and target_root")

    @staticmethod
    def from_kv(kv: KeyValueConfig) -> "ExperimentConfig":
        cfg = ExperimentConfig()
        cfg.name = kv.get_str("experiment.name", cfg.name)
        cfg.output_root = kv.get_str("experiment.output_root", cfg.output_root)
        cfg.seed = kv.get_int("experiment.seed", cfg.seed)
        cfg.deterministic = kv.get_bool("experiment.deterministic", cfg.deterministic)

        cfg.synthetic = kv.get_bool("data.synthetic", cfg.synthetic)
        cfg.classes = kv.get_int("data.classes", cfg.classes)
        cfg.per_class = kv.get_int("data.per_class", cfg.per_class)
        cfg.resolution = kv.get_int("data.resolution", cfg.resolution)
        cfg.source_style = kv.get_str("data.source_style", cfg.source_style)
        cfg.target_style = kv.get_str("data.target_style", cfg.target_style)
        cfg.holdout_style = kv.get_str("data.holdout_style", cfg.holdout_style)
        cfg.source_root = kv.get_str("data.source_root", cfg.source_root)
        cfg.target_root = kv.get_str("data.target_root", cfg.target_root)
        cfg.holdout_root = kv.get_str("data.holdout_root", cfg.holdout_root)
        cfg.subsample_source = kv.get_float("data.subsample_source", cfg.subsample_source)
        cfg.subsample_target = kv.get_float("data.subsample_target", cfg.subsample_target)
        cfg.subsample_holdout = kv.get_float("data.subsample_holdout", cfg.subsample_holdout)
        cfg.eval_fraction = kv.get_float("data.eval_fraction", cfg.eval_fraction)
        cfg.full_eval = kv.get_bool("data.full_eval", cfg.full_eval)

        cfg.backbone_width = kv.get_float("backbone.width", cfg.backbone_width)
        cfg.backbone_weights = kv.get_str("backbone.weights", cfg.backbone_weights)
        cfg.backbone_seed = kv.get_int("backbone.seed", cfg.backbone_seed)

        cfg.gan_epochs = kv.get_int("gan.epochs", cfg.gan_epochs)
        cfg.gan_batch_size = kv.get_int("gan.batch_size", cfg.gan_batch_size)
        cfg.gan_lr = kv.get_float("gan.lr", cfg.gan_lr)
        cfg.gan_gen_channels = kv.get_int("gan.gen_channels", cfg.gan_gen_channels)
        cfg.gan_disc_channels = kv.get_int("gan.disc_channels", cfg.gan_disc_channels)
        cfg.gan_depth = kv.get_int("gan.depth", cfg.gan_depth)
        cfg.checkpoint_epoch = kv.get_int("gan.checkpoint_epoch", cfg.checkpoint_epoch)
        cfg.generate_keep = kv.get_str("gan.generate_keep", cfg.generate_keep)
        cfg.loss_weights = LossWeights(
            intra=kv.get_float("gan.lambda_intra", 1.0),
            cross=kv.get_float("gan.lambda_cross", 1.0),
            reconstruction=kv.get_float("gan.lambda_reconstruction", 1.0),
            adv_style_source=kv.get_float("gan.lambda_adv_style_source", 1.0),
            adv_style_target=kv.get_float("gan.lambda_adv_style_target", 1.0),
            adv_content=kv.get_float("gan.lambda_adv_content", 1.0),
        )

        cfg.clf_epochs = kv.get_int("clf.epochs", cfg.clf_epochs)
        cfg.clf_batch_size = kv.get_int("clf.batch_size", cfg.clf_batch_size)
        cfg.clf_lr = kv.get_float("clf.lr", cfg.clf_lr)
        cfg.clf_channels = kv.get_int("clf.channels", cfg.clf_channels)
        cfg.ema_decay = kv.get_float("clf.ema_decay", cfg.ema_decay)
        cfg.consistency_weight = kv.get_float("clf.consistency_weight", cfg.consistency_weight)
        cfg.ramp_fraction = kv.get_float("clf.ramp_fraction", cfg.ramp_fraction)
        cfg.symmetric_consistency = kv.get_bool(
            "clf.symmetric_consistency", cfg.symmetric_consistency
        )
        cfg.confidence_threshold = kv.get_float(
            "clf.confidence_threshold", cfg.confidence_threshold
        )
        cfg.eval_read = kv.get_str("clf.eval_read", cfg.eval_read)
        cfg.seeds = kv.get_int_list("clf.seeds", cfg.seeds)

        roster_spec = kv.get_list("roster", None)
        if roster_spec is not None:
            cfg.roster = []
            for item in roster_spec:
                if ":" not in item:
                    raise ConfigError(f"roster entry must be name:mode, got {item!r}")
                name, mode = item.split(":", 1)
                entry = RosterEntry.with_mode_defaults(name.strip(), TrainMode(mode.strip()))
                sup = kv.get_list(f"roster.{entry.name}.sup", None)
                unsup = kv.get_list(f"roster.{entry.name}.unsup", None)
                if sup is not None:
                    entry.sup = sup
                if unsup is not None:
                    entry.unsup = unsup
                cfg.roster.append(entry)

        cfg.eval_datasets = kv.get_list("eval.datasets", cfg.eval_datasets)
        cfg.top_k = kv.get_int_list("eval.top_k", cfg.top_k)

        unknown = kv.unknown_keys(known_prefixes=("roster.",))
        if unknown:
            raise ConfigError(f"{kv.source}: unknown config keys: {unknown}")
        cfg.validate()
        return cfg

    @staticmethod
    def from_file(path: Path) -> "ExperimentConfig":
        return ExperimentConfig.from_kv(KeyValueConfig.from_file(path))


@dataclass
class ExperimentPaths:
    root: Path

    @property
    def manifests(self) -> Path:
        return self.root / "manifests"

    @property
    def data(self) -> Path:
        return self.root / "data"

    @property
    def gan_dir(self) -> Path:
        return self.root / "gan"

    @property
    def adapted(self) -> Path:
        return self.root / "adapted"

    @property
    def classifiers(self) -> Path:
        return self.root / "classifiers"

    @property
    def matrix_path(self) -> Path:
        return self.root / "matrix.json"

    def manifest_path(self, alias: str, part: str) -> Path:
        return self.manifests / f"{alias}_{part}.tsv"

    def model_checkpoint(self, model: str) -> Path:
        return self.classifiers / model / "final.pt"


class Experiment:
    """Holds config, paths, and lazily built shared pieces (the backbone)."""

    def __init__(self, config: ExperimentConfig):
        config.validate()
        self.config = config
        self.paths = ExperimentPaths(Path(config.output_root))
        self._backbone: FeatureBackbone | None = None

    @property
    def backbone(self) -> FeatureBackbone:
        if self._backbone is None:
            cfg = self.config
            self._backbone = load_backbone(
                BackboneConfig(
                    width=cfg.backbone_width,
                    weights_path=cfg.backbone_weights or None,
                    init_seed=cfg.backbone_seed,
                )
            )
        return self._backbone

    # ---------------- stage: data ----------------

    def _original_aliases(self) -> list[str]:
        aliases = ["source", "target"]
        if (self.config.synthetic and self.config.holdout_style) or (
            not self.config.synthetic and self.config.holdout_root
        ):
            aliases.append("holdout")
        return aliases

    def stage_data(self) -> dict[str, DatasetManifest]:
        cfg = self.config
        aliases = self._original_aliases()
        wanted = [(alias, part) for alias in aliases for part in ("train", "eval")]
        if all(self.paths.manifest_path(a, p).exists() for a, p in wanted):
            logger.info("stage data: manifests present, skipping")
            return {
                f"{a}_{p}": DatasetManifest.load(self.paths.manifest_path(a, p))
                for a, p in wanted
            }

        seed_everything(derive_seed(cfg.seed, "data"))
        manifests: dict[str, DatasetManifest] = {}
        if cfg.synthetic:
            spec = SyntheticSpec(
                classes=cfg.classes, per_class=cfg.per_class, resolution=cfg.resolution
            )
            source, target = make_synthetic_domains(
                derive_seed(cfg.seed, "synthetic"),
                spec,
                self.paths.data,
                styles=(cfg.source_style, cfg.target_style),
            )
            full = {"source": source, "target": target}
            if cfg.holdout_style:
                # The held-out style is rendered as an extra target-tagged domain.
                full["holdout"] = make_synthetic_domain(
                    derive_seed(cfg.seed, "synthetic"),
                    spec,
                    self.paths.data / "holdout",
                    cfg.holdout_style,
                    "target",
                    "holdout",
                )
        else:
            full = {
                "source": ingest(Path(cfg.source_root), "source", "source"),
                "target": ingest(Path(cfg.target_root), "target", "target"),
            }
            if cfg.holdout_root:
                full["holdout"] = ingest(Path(cfg.holdout_root), "target", "holdout")

        fractions = {
            "source": cfg.subsample_source,
            "target": cfg.subsample_target,
            "holdout": cfg.subsample_holdout,
        }
        for alias, manifest in full.items():
            manifest = manifest.subsample(
                fractions[alias], derive_seed(cfg.seed, "subsample", alias)
            )
            train, evalpart = manifest.split_eval(cfg.eval_fraction)
            for part, m in (("train", train), ("eval", evalpart)):
                m = replace(m, dataset_id=alias)
                m.save(self.paths.manifest_path(alias, part))
                manifests[f"{alias}_{part}"] = m
        return manifests

    # ---------------- stage: gan ----------------

    def gan_config(self) -> GanConfig:
        cfg = self.config
        return GanConfig(
            epochs=cfg.gan_epochs,
            batch_size=cfg.gan_batch_size,
            resolution=cfg.resolution,
            seed=derive_seed(cfg.seed, "gan"),
            gen_channels=cfg.gan_gen_channels,
            gen_depth=cfg.gan_depth,
            disc_channels=cfg.gan_disc_channels,
            lr=cfg.gan_lr,
            weights=cfg.loss_weights,
            checkpoint_dir=str(self.paths.gan_dir / "checkpoints"),
            metrics_path=str(self.paths.gan_dir / "metrics.jsonl"),
        )

    def stage_gan(
        self, manifests: dict[str, DatasetManifest], epoch: int | None = None
    ) -> Path | None:
        if not self.adapted_aliases_needed():
            logger.info("stage gan: no adapted datasets required, skipping")
            return None
        epoch = epoch if epoch is not None else self.config.checkpoint_epoch
        gan_cfg = self.gan_config()
        wanted = checkpoint_path(Path(gan_cfg.checkpoint_dir), epoch)
        if wanted.exists():
            logger.info("stage gan: checkpoint %s present, skipping", wanted.name)
            return wanted
        if self.config.gan_epochs > 0:
            train_gan(manifests["source_train"], manifests["target_train"], gan_cfg, self.backbone)
        if not wanted.exists():
            raise FileNotFoundError(
                f"training finished but checkpoint for epoch {epoch} was not produced"
            )
        return wanted

    # ---------------- stage: generate ----------------

    def adapted_aliases_needed(self) -> set[tuple[str, str]]:
        """(alias, part) pairs of adapted datasets the roster and eval list require."""
        needed: set[tuple[str, str]] = set()
        for entry in self.config.roster:
            for alias in list(entry.sup) + list(entry.unsup):
                if alias in _ADAPTED_ALIASES:
                    needed.add((alias, "train"))
        for alias in self.config.eval_datasets:
            if alias in _ADAPTED_ALIASES:
                needed.add((alias, "eval"))
                if self.config.full_eval:
                    needed.add((alias, "train"))
        return needed

    def stage_generate(
        self, manifests: dict[str, DatasetManifest], gan_checkpoint: Path | None
    ) -> dict[str, DatasetManifest]:
        adapted: dict[str, DatasetManifest] = {}
        pair = None
        for alias, part in sorted(self.adapted_aliases_needed()):
            key = f"{alias}_{part}"
            manifest_file = self.paths.manifest_path(alias, part)
            if manifest_file.exists():
                adapted[key] = DatasetManifest.load(manifest_file)
                continue
            if pair is None:
                if gan_checkpoint is None:
                    raise FileNotFoundError("adapted datasets requested but no GAN checkpoint")
                pair = load_gan_checkpoint(gan_checkpoint).pair
            origin = manifests[f"{alias.removesuffix('_adapted')}_{part}"]
            spec = AdaptedDatasetSpec(
                checkpoint=str(gan_checkpoint),
                output_root=str(self.paths.adapted / key),
                keep=self.config.generate_keep,
                dataset_id=alias,
                resolution=self.config.resolution,
            )
            logger.info("stage generate: materializing %s (%d images)", key, len(origin))
            manifest = materialize_adapted(origin, spec, pair=pair)
            manifest.save(manifest_file)
            adapted[key] = manifest
        return adapted

    # ---------------- stage: classifiers ----------------

    def model_names(self) -> list[tuple[RosterEntry, int, str]]:
        out = []
        for entry in self.config.roster:
            for s in self.config.seeds:
                out.append((entry, s, f"{entry.name}@s{s}"))
        return out

    def _mode_data(
        self, entry: RosterEntry, manifests: dict[str, DatasetManifest]
    ) -> ModeData:
        def train_part(alias: str) -> DatasetManifest:
            key = f"{alias}_train"
            if key not in manifests:
                raise KeyError(f"roster entry {entry.name} needs dataset {key}")
            return manifests[key]

        source = train_part(entry.sup[0]) if entry.sup else train_part("source")
        source_adapted = None
        extras = [train_part(alias) for alias in entry.sup[1:]]
        if len(extras) == 1:
            source_adapted = extras[0]
        elif extras:
            source_adapted = merge_manifests(
                extras, dataset_id="source_adapted_mixed", root=str(self.paths.root)
            )
        target = target_adapted = None
        if entry.unsup:
            target = train_part(entry.unsup[0])
            if len(entry.unsup) > 1:
                target_adapted = train_part(entry.unsup[1])
        return ModeData(
            source=source,
            source_adapted=source_adapted,
            target=target,
            target_adapted=target_adapted,
        )

    def stage_classifiers(self, manifests: dict[str, DatasetManifest]) -> list[str]:
        cfg = self.config
        trained = []
        for entry, s, model_name in self.model_names():
            ckpt = self.paths.model_checkpoint(model_name)
            if ckpt.exists():
                logger.info("stage classifiers: %s present, skipping", model_name)
                trained.append(model_name)
                continue
            clf_cfg = ClassifierConfig(
                epochs=cfg.clf_epochs,
                batch_size=cfg.clf_batch_size,
                lr=cfg.clf_lr,
                base_channels=cfg.clf_channels,
                resolution=cfg.resolution,
                ema_decay=cfg.ema_decay,
                consistency_weight=cfg.consistency_weight,
                ramp_fraction=cfg.ramp_fraction,
                symmetric_consistency=cfg.symmetric_consistency,
                confidence_threshold=cfg.confidence_threshold or None,
                seed=derive_seed(cfg.seed, "clf", entry.name, s),
                metrics_path=str(ckpt.parent / "metrics.jsonl"),
                checkpoint_path=str(ckpt),
            )
            logger.info("stage classifiers: training %s (mode=%s)", model_name, entry.mode.value)
            train_classifier(entry.mode, self._mode_data(entry, manifests), clf_cfg)
            trained.append(model_name)
        return trained

    # ---------------- stage: evaluate ----------------

    def _annotation(self, entry: RosterEntry, alias: str) -> str:
        if alias in entry.sup:
            return ANNOTATION_SUP_ADAPTED if alias.endswith("_adapted") else (
                ANNOTATION_SUP_ORIGINAL
            )
        if alias in entry.unsup:
            return ANNOTATION_UNSUP
        return ANNOTATION_UNSEEN

    def _eval_manifest(
        self, alias: str, manifests: dict[str, DatasetManifest]
    ) -> DatasetManifest:
        evalpart = manifests.get(f"{alias}_eval")
        if evalpart is None:
            raise KeyError(f"no eval manifest for dataset alias {alias!r}")
        if not self.config.full_eval:
            return evalpart
        train = manifests.get(f"{alias}_train")
        if train is None or not train.records:
            return evalpart
        merged = replace(evalpart, records=train.records + evalpart.records)
        return merged

    def stage_evaluate(self, manifests: dict[str, DatasetManifest]) -> TransferMatrix:
        cfg = self.config
        if self.paths.matrix_path.exists():
            logger.info("stage evaluate: matrix present, skipping")
            return TransferMatrix.load(self.paths.matrix_path)

        models = [name for _, _, name in self.model_names()]
        matrix = TransferMatrix(
            datasets=list(cfg.eval_datasets), models=models, ks=list(cfg.top_k)
        )
        for entry, s, model_name in self.model_names():
            state, mode, _ = load_classifier_checkpoint(self.paths.model_checkpoint(model_name))
            net = eval_network(state, mode, cfg.eval_read)
            for alias in cfg.eval_datasets:
                manifest = self._eval_manifest(alias, manifests)
                accuracies = evaluate_model(net, manifest, cfg.top_k, cfg.resolution)
                matrix.cells[(alias, model_name)] = MatrixCell(
                    accuracies=accuracies,
                    annotation=self._annotation(entry, alias),
                    dataset_provenance=manifest.header_provenance(),
                    model_info=f"mode={entry.mode.value} seed={s}",
                )
        matrix.save(self.paths.matrix_path)
        for fmt, suffix in (("csv", "report.csv"), ("markdown", "report.md")):
            atomic_write_text(self.paths.root / suffix, render_report(matrix, fmt))
        return matrix


def run_experiment(config: ExperimentConfig, upto: str = "evaluate") -> TransferMatrix | None:
    """Run the pipeline through the named stage; returns the matrix if reached."""
    if upto not in STAGES:
        raise ValueError(f"unknown stage {upto!r}; stages: {STAGES}")
    exp = Experiment(config)
    exp.paths.root.mkdir(parents=True, exist_ok=True)
    snapshot = exp.paths.root / "config.txt"
    if not snapshot.exists():
        atomic_write_text(snapshot, config_snapshot(config))
    seed_everything(config.seed)

    stage = "data"
    try:
        manifests = exp.stage_data()
        if upto == "data":
            return None
        stage = "gan"
        gan_ckpt = exp.stage_gan(manifests)
        if upto == "gan":
            return None
        stage = "generate"
        manifests.update(exp.stage_generate(manifests, gan_ckpt))
        if upto == "generate":
            return None
        stage = "classifiers"
        exp.stage_classifiers(manifests)
        if upto == "classifiers":
            return None
        stage = "evaluate"
        return exp.stage_evaluate(manifests)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(stage, str(exc)) from exc


def config_snapshot(config: ExperimentConfig) -> str:
    """Resolved config as flat key-value text, for run provenance."""
    lines = [f"# resolved config for experiment {config.name!r}"]
    simple = {
        "experiment.name": config.name,
        "experiment.output_root": config.output_root,
        "experiment.seed": config.seed,
        "experiment.deterministic": config.deterministic,
        "data.synthetic": config.synthetic,
        "data.classes": config.classes,
        "data.per_class": config.per_class,
        "data.resolution": config.resolution,
        "data.source_style": config.source_style,
        "data.target_style": config.target_style,
        "data.holdout_style": config.holdout_style,
        "data.source_root": config.source_root,
        "data.target_root": config.target_root,
        "data.holdout_root": config.holdout_root,
        "data.subsample_source": config.subsample_source,
        "data.subsample_target": config.subsample_target,
        "data.subsample_holdout": config.subsample_holdout,
        "data.eval_fraction": config.eval_fraction,
        "data.full_eval": config.full_eval,
        "backbone.width": config.backbone_width,
        "backbone.weights": config.backbone_weights,
        "backbone.seed": config.backbone_seed,
        "gan.epochs": config.gan_epochs,
        "gan.batch_size": config.gan_batch_size,
        "gan.lr": config.gan_lr,
        "gan.gen_channels": config.gan_gen_channels,
        "gan.disc_channels": config.gan_disc_channels,
        "gan.depth": config.gan_depth,
        "gan.checkpoint_epoch": config.checkpoint_epoch,
        "gan.generate_keep": config.generate_keep,
        "gan.lambda_intra": config.loss_weights.intra,
        "gan.lambda_cross": config.loss_weights.cross,
        "gan.lambda_reconstruction": config.loss_weights.reconstruction,
        "gan.lambda_adv_style_source": config.loss_weights.adv_style_source,
        "gan.lambda_adv_style_target": config.loss_weights.adv_style_target,
        "gan.lambda_adv_content": config.loss_weights.adv_content,
        "clf.epochs": config.clf_epochs,
        "clf.batch_size": config.clf_batch_size,
        "clf.lr": config.clf_lr,
        "clf.channels": config.clf_channels,
        "clf.ema_decay": config.ema_decay,
        "clf.consistency_weight": config.consistency_weight,
        "clf.ramp_fraction": config.ramp_fraction,
        "clf.symmetric_consistency": config.symmetric_consistency,
        "clf.confidence_threshold": config.confidence_threshold,
        "clf.eval_read": config.eval_read,
        "clf.seeds": ",".join(str(s) for s in config.seeds),
        "roster": ",".join(f"{e.name}:{e.mode.value}" for e in config.roster),
        "eval.datasets": ",".join(config.eval_datasets),
        "eval.top_k": ",".join(str(k) for k in config.top_k),
    }
    for entry in config.roster:
        simple[f"roster.{entry.name}.sup"] = ",".join(entry.sup)
        simple[f"roster.{entry.name}.unsup"] = ",".join(entry.unsup)
    lines += [f"{k} = {v}" for k, v in simple.items()]
    return "\n".join(lines) + "\n"
