"""Batch-run reporting: a delimited summary plus rendered figures."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

SUMMARY_COLUMNS = (
    "sample_id",
    "attempt",
    "target",
    "interventions",
    "templates",
    "question_types",
    "transcript_file",
)


def write_summary(out_dir: str | Path, rows: list[dict]) -> Path:
    """One TSV row per conversation."""
    out = Path(out_dir) / "summary.tsv"
    lines = ["\t".join(SUMMARY_COLUMNS)]
    for row in rows:
        lines.append(
            "\t".join(
                [
                    row["sample_id"],
                    row["attempt"],
                    row["target"],
                    str(row["interventions"]),
                    ",".join(row["templates"]),
                    ",".join(row["question_types"]),
                    row["transcript_file"],
                ]
            )
        )
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out


def render_figures(out_dir: str | Path, rows: list[dict]) -> list[Path]:
    """Intervention-count and hypothesis-usage charts for the batch run."""
    out_dir = Path(out_dir)
    written = []

    fig, ax = plt.subplots(figsize=(8, 3.2))
    labels = [f"{r['sample_id']}:{r['attempt']}" for r in rows]
    counts = [r["interventions"] for r in rows]
    ax.bar(range(len(rows)), counts, color="#4878a8")
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(labels, rotation=75, fontsize=6, ha="right")
    ax.set_ylabel("interventions")
    ax.set_ylim(0, 6)
    ax.axhline(2, color="#888888", linewidth=0.8, linestyle="--")
    ax.axhline(5, color="#888888", linewidth=0.8, linestyle="--")
    ax.set_title("Interventions per conversation (bounds 2-5 dashed)")
    fig.tight_layout()
    path = out_dir / "interventions_per_conversation.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    usage: dict[str, int] = {}
    for row in rows:
        for tid in row["templates"]:
            usage[tid] = usage.get(tid, 0) + 1
    ordered = sorted(usage, key=lambda t: int(t[1:]))
    fig, ax = plt.subplots(figsize=(7, 3))
    ax.bar(ordered, [usage[t] for t in ordered], color="#7a9a5a")
    ax.set_ylabel("times selected")
    ax.set_title("Hypothesis template usage across the corpus")
    fig.tight_layout()
    path = out_dir / "hypothesis_usage.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written
