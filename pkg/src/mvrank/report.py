"""Report rendering: JSON, markdown table, delimited CSV, and figures."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import EvalReport  # noqa: E402


def report_payload(report: EvalReport, config: dict, per_dialogue: list[dict]) -> dict:
    payload = {"config": config}
    payload.update(report.as_dict())
    payload["per_dialogue"] = per_dialogue
    return payload


def write_report_json(payload: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=False)
        fh.write("\n")


def render_markdown(report: EvalReport, pool_size: int) -> str:
    ks = sorted(report.recall)
    lines = [
        "# Evaluation report",
        "",
        f"Quantitative (pool size {pool_size}, {report.n_examples} examples):",
        "",
        "| Model | " + " | ".join(f"Recall@{k}" for k in ks) + " |",
        "|" + "---|" * (len(ks) + 1),
        "| this run | " + " | ".join(f"{report.recall[k]:.4f}" for k in ks) + " |",
        "",
        "Qualitative (top-1 selected response vs ground truth):",
        "",
        "| Model | Perplexity | BLEU | ROUGE-1 | ROUGE-L | Distinct-1 | Distinct-2 |",
        "|---|---|---|---|---|---|---|",
        "| this run | "
        f"{report.perplexity:.4f} | {report.bleu:.4f} | {report.rouge1_f:.4f} | "
        f"{report.rougeL_f:.4f} | {report.distinct1:.4f} | {report.distinct2:.4f} |",
        "",
    ]
    return "\n".join(lines)


def write_report_csv(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["metric", "value"])
        for k in sorted(report.recall):
            writer.writerow([f"recall@{k}", f"{report.recall[k]:.6f}"])
        for name in ("bleu", "rouge1_f", "rougeL_f", "distinct1", "distinct2",
                     "perplexity"):
            writer.writerow([name, f"{getattr(report, name):.6f}"])
        writer.writerow(["n_examples", report.n_examples])


# strip the Software tag so repeated runs produce identical bytes
_PNG_META = {"Software": None}


def render_figures(report: EvalReport, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    ks = sorted(report.recall)
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.bar([f"@{k}" for k in ks], [report.recall[k] for k in ks], color="#4878a8")
    ax.set_ylim(0, 1)
    ax.set_ylabel("recall")
    ax.set_title("Recall at k")
    fig.tight_layout()
    path = out_dir / "recall_at_k.png"
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)
    written.append(path)

    names = ["BLEU", "ROUGE-1", "ROUGE-L", "distinct-1", "distinct-2"]
    values = [report.bleu, report.rouge1_f, report.rougeL_f,
              report.distinct1, report.distinct2]
    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    ax.bar(names, values, color="#6aa06a")
    ax.set_ylim(0, 1)
    ax.set_title(f"Text quality (perplexity {report.perplexity:.2f})")
    ax.tick_params(axis="x", labelrotation=20)
    fig.tight_layout()
    path = out_dir / "text_quality.png"
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)
    written.append(path)

    return written
