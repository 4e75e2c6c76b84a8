"""Figure rendering for training runs and similarity reports.

Figures are written next to the delimited outputs they illustrate; PNG
metadata is stripped so identical runs produce identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluate import SimilarityReport
from .trainer import EpochReport

_PNG_META = {"Software": None}  # drop the library/version stamp


def plot_training_curves(reports: list[EpochReport], path: str | Path) -> None:
    """Loss and next-token accuracy per epoch, two stacked panels."""
    epochs = [r.epoch for r in reports]
    fig, (ax_loss, ax_acc) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    ax_loss.plot(epochs, [r.mean_loss for r in reports], color="tab:red")
    ax_loss.set_ylabel("mean loss")
    ax_loss.grid(alpha=0.3)
    ax_acc.plot(epochs, [r.next_token_accuracy for r in reports], color="tab:blue")
    ax_acc.set_ylabel("next-token accuracy")
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylim(0, 1.02)
    ax_acc.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)


def plot_similarity(reports: list[SimilarityReport], path: str | Path) -> None:
    """Per-category bars of the two mean max-similarity scores."""
    cats = [r.category for r in reports]
    x = range(len(cats))
    width = 0.38
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(
        [i - width / 2 for i in x],
        [r.k_jaccard_mean for r in reports],
        width,
        label="k-gram jaccard",
        color="tab:blue",
    )
    ax.bar(
        [i + width / 2 for i in x],
        [r.phrase_overlap_mean for r in reports],
        width,
        label="phrase overlap",
        color="tab:orange",
    )
    ax.set_xticks(list(x), [f"category {c}" for c in cats])
    ax.set_ylabel("mean max similarity")
    ax.set_ylim(0, 1.0)
    exploration = reports[0].exploration if reports else 0.0
    ax.set_title(f"exploration = {exploration:g}")
    ax.legend()
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)
