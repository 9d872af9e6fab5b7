"""Score figures rendered next to the tabular report output.

Two grouped bar charts are produced: one for the word-overlap measures
and one for the semantic measures, systems side by side. Rendering uses
the non-interactive Agg backend so the report command works headless.
"""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

if TYPE_CHECKING:  # pragma: no cover - import cycle guard, typing only
    from .harness import EvaluationReport

OVERLAP_METRICS = ("bleu2", "rouge_l")
SEMANTIC_METRICS = ("embedding_average", "greedy_matching", "vector_extrema")

_LABELS = {
    "bleu2": "BLEU@2",
    "rouge_l": "ROUGE-L",
    "embedding_average": "Emb. Average",
    "greedy_matching": "Greedy Match",
    "vector_extrema": "Vec. Extrema",
}


def _grouped_bars(
    reports: Sequence["EvaluationReport"],
    metrics: Sequence[str],
    title: str,
    path: Path,
) -> None:
    positions = np.arange(len(metrics), dtype=float)
    width = 0.8 / max(len(reports), 1)
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    for i, r in enumerate(reports):
        offsets = positions + (i - (len(reports) - 1) / 2.0) * width
        values = [r.scores_x100[m] for m in metrics]
        bars = ax.bar(offsets, values, width=width * 0.95, label=r.system)
        ax.bar_label(bars, fmt="%.2f", fontsize=8, padding=2)
    ax.set_xticks(positions)
    ax.set_xticklabels([_LABELS[m] for m in metrics])
    ax.set_ylabel("score ×100")
    ax.set_title(title)
    ax.set_ylim(0, max(100.0, *(r.scores_x100[m] for r in reports for m in metrics)) * 1.1)
    ax.legend(loc="upper right", fontsize=8)
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_score_figures(
    reports: Sequence["EvaluationReport"], out_dir: str | Path
) -> list[Path]:
    """Write overlap_scores.png and semantic_scores.png into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    overlap = out / "overlap_scores.png"
    semantic = out / "semantic_scores.png"
    _grouped_bars(reports, OVERLAP_METRICS, "Word-overlap measures", overlap)
    _grouped_bars(reports, SEMANTIC_METRICS, "Semantic measures", semantic)
    return [overlap, semantic]
