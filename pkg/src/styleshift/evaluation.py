"""Top-k evaluation and transfer-matrix reporting.

The transfer matrix is the experiment's final artifact: rows are evaluation
datasets, columns are trained models, and each cell holds the top-k
accuracies plus an annotation saying how that model saw that dataset during
training (supervised on originals, supervised on adapted copies,
unsupervised, or not at all).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .data import DatasetManifest, load_images
from .ioutil import atomic_write_text

ANNOTATION_SUP_ORIGINAL = "supervised-seen-original"
ANNOTATION_SUP_ADAPTED = "supervised-seen-adapted"
ANNOTATION_UNSUP = "unsupervised-seen"
ANNOTATION_UNSEEN = "unseen"

_ANNOTATION_SHORT = {
    ANNOTATION_SUP_ORIGINAL: "S",
    ANNOTATION_SUP_ADAPTED: "SA",
    ANNOTATION_UNSUP: "U",
    ANNOTATION_UNSEEN: "Z",
}


def top_k_accuracy(probs, labels, k: int) -> float:
    """Fraction of rows whose true label ranks among the k most probable classes.

    Ties are broken toward the lowest class index (stable sort on descending
    probability), so a uniform row predicts classes 0..k-1.
    """
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if probs.ndim != 2:
        raise ValueError(f"expected (N, classes) probabilities, got shape {probs.shape}")
    n, n_classes = probs.shape
    if not (1 <= k <= n_classes):
        raise ValueError(f"k must be in [1, {n_classes}], got {k}")
    if n == 0:
        raise ValueError("no rows to score")
    order = np.argsort(-probs, axis=1, kind="stable")
    hits = (order[:, :k] == labels[:, None]).any(axis=1)
    return float(hits.mean())


def predict_probs(
    model: torch.nn.Module, images: torch.Tensor, batch_size: int = 64
) -> np.ndarray:
    was_training = model.training
    model.eval()
    outs = []
    with torch.no_grad():
        for i in range(0, images.shape[0], batch_size):
            logits = model(images[i : i + batch_size])
            outs.append(torch.softmax(logits, dim=1).numpy())
    if was_training:
        model.train()
    return np.concatenate(outs, axis=0)


def evaluate_model(
    model: torch.nn.Module,
    manifest: DatasetManifest,
    ks: list[int],
    resolution: int | None = None,
    batch_size: int = 64,
) -> dict[int, float]:
    images, labels = load_images(manifest, resolution)
    probs = predict_probs(model, images, batch_size)
    return {k: top_k_accuracy(probs, labels.numpy(), k) for k in ks}


@dataclass
class MatrixCell:
    accuracies: dict[int, float]
    annotation: str
    dataset_provenance: str = "original"
    model_info: str = ""


@dataclass
class TransferMatrix:
    """(evaluation dataset x model) grid of top-k accuracies with annotations."""

    datasets: list[str]
    models: list[str]
    ks: list[int]
    cells: dict[tuple[str, str], MatrixCell] = field(default_factory=dict)

    def cell(self, dataset: str, model: str) -> MatrixCell:
        return self.cells[(dataset, model)]

    def best_model(self, dataset: str, k: int | None = None) -> str:
        """Column with the highest accuracy in this row; ties go to the leftmost."""
        k = self.ks[0] if k is None else k
        best, best_acc = None, -1.0
        for model in self.models:
            acc = self.cells[(dataset, model)].accuracies[k]
            if acc > best_acc:
                best, best_acc = model, acc
        return best

    def to_json(self) -> str:
        payload = {
            "format": "styleshift-matrix-v1",
            "datasets": self.datasets,
            "models": self.models,
            "ks": self.ks,
            "cells": [
                {
                    "dataset": ds,
                    "model": m,
                    "accuracies": {str(k): v for k, v in cell.accuracies.items()},
                    "annotation": cell.annotation,
                    "dataset_provenance": cell.dataset_provenance,
                    "model_info": cell.model_info,
                }
                for (ds, m), cell in sorted(self.cells.items())
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def save(self, path: Path) -> None:
        atomic_write_text(Path(path), self.to_json())

    @staticmethod
    def from_json(text: str) -> "TransferMatrix":
        payload = json.loads(text)
        if payload.get("format") != "styleshift-matrix-v1":
            raise ValueError("not a transfer matrix file")
        matrix = TransferMatrix(
            datasets=payload["datasets"], models=payload["models"], ks=payload["ks"]
        )
        for entry in payload["cells"]:
            matrix.cells[(entry["dataset"], entry["model"])] = MatrixCell(
                accuracies={int(k): v for k, v in entry["accuracies"].items()},
                annotation=entry["annotation"],
                dataset_provenance=entry.get("dataset_provenance", "original"),
                model_info=entry.get("model_info", ""),
            )
        return matrix

    @staticmethod
    def load(path: Path) -> "TransferMatrix":
        return TransferMatrix.from_json(Path(path).read_text(encoding="utf-8"))


def render_report(matrix: TransferMatrix, fmt: str) -> str:
    """Deterministic csv or markdown rendering with best-in-row markers."""
    if not matrix.datasets or not matrix.models:
        raise ValueError("matrix is empty")
    if fmt == "csv":
        return _render_csv(matrix)
    if fmt == "markdown":
        return _render_markdown(matrix)
    raise ValueError(f"unknown report format {fmt!r}; use csv or markdown")


def _render_csv(matrix: TransferMatrix) -> str:
    header = ["dataset", "model", "annotation", "best"] + [f"top{k}" for k in matrix.ks]
    lines = [",".join(header)]
    for ds in matrix.datasets:
        best = matrix.best_model(ds)
        for model in matrix.models:
            cell = matrix.cells[(ds, model)]
            row = [ds, model, cell.annotation, "1" if model == best else "0"]
            row += [f"{cell.accuracies[k]:.6f}" for k in matrix.ks]
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _render_markdown(matrix: TransferMatrix) -> str:
    def fmt_cell(cell: MatrixCell, bold: bool) -> str:
        accs = [f"{cell.accuracies[k]:.4f}" for k in matrix.ks]
        text = accs[0] + (f" ({', '.join(accs[1:])})" if len(accs) > 1 else "")
        if bold:
            text = f"**{text}**"
        return f"{text} [{_ANNOTATION_SHORT[cell.annotation]}]"

    ks_note = ", then ".join(f"top-{k}" for k in matrix.ks)
    lines = [
        f"Cells show {ks_note} accuracy; the best model per row is bold.",
        "Annotations: S = supervised-seen original, SA = supervised-seen adapted, "
        "U = unsupervised-seen, Z = unseen.",
        "",
        "| dataset | " + " | ".join(matrix.models) + " |",
        "|" + "---|" * (len(matrix.models) + 1),
    ]
    for ds in matrix.datasets:
        best = matrix.best_model(ds)
        cells = [fmt_cell(matrix.cells[(ds, m)], m == best) for m in matrix.models]
        lines.append(f"| {ds} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def parse_csv_report(text: str) -> TransferMatrix:
    """Inverse of the csv rendering, for round-trip checks."""
    lines = [line for line in text.splitlines() if line.strip()]
    header = lines[0].split(",")
    ks = [int(col[3:]) for col in header[4:]]
    datasets: list[str] = []
    models: list[str] = []
    matrix = TransferMatrix(datasets=datasets, models=models, ks=ks)
    for line in lines[1:]:
        parts = line.split(",")
        ds, model, annotation = parts[0], parts[1], parts[2]
        if ds not in datasets:
            datasets.append(ds)
        if model not in models:
            models.append(model)
        matrix.cells[(ds, model)] = MatrixCell(
            accuracies={k: float(v) for k, v in zip(ks, parts[4:])},
            annotation=annotation,
        )
    return matrix
