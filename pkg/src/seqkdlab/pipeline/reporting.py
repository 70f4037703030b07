"""Report serialization: canonical JSON (byte-stable for fixed inputs) and
a human-readable markdown rendering that mirrors the experiment tables."""
from __future__ import annotations

import json
from pathlib import Path

from ..errors import IoError

VARIANT_LABELS = {
    "real": "Real",
    "fwd": "Fwd SeqKD",
    "bwd": "Bwd SeqKD",
    "bidir": "Bidir SeqKD",
}


def report_to_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def write_report(report: dict, path: str | Path, fmt: str = "json") -> None:
    text = report_to_json(report) if fmt == "json" else report_to_markdown(report)
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as e:
        raise IoError(f"cannot write report {path}: {e}") from e


def _fmt(x: float | None, digits: int = 2) -> str:
    return "-" if x is None else f"{x:.{digits}f}"


def report_to_markdown(report: dict) -> str:
    lines: list[str] = []
    lines.append("# Experiment report")
    lines.append("")
    lines.append(f"Config fingerprint: `{report['config_fingerprint']}`; "
                 f"seeds: {report['seeds']}")
    lines.append("")

    ar_rows = {k: v for k, v in report["rows"].items() if "bleu" in v}
    if ar_rows:
        lines.append("## AR translation quality (test split)")
        lines.append("")
        lines.append("| ID | Recipe | BLEU (mean +- std) | Delta vs A1 |")
        lines.append("|----|--------|--------------------|-------------|")
        for row, entry in ar_rows.items():
            b = entry["bleu"]
            delta = entry.get("delta_vs_A1")
            delta_txt = "-" if delta is None else f"{delta:+.2f}"
            desc = (entry.get("manifest") or {}).get("recipe", "")
            lines.append(
                f"| {row} | {desc} | {b['mean']:.2f} +- {b['std']:.2f} | {delta_txt} |"
            )
        lines.append("")

    nar_rows = {k: v for k, v in report["rows"].items() if "bleu_by_iterations" in v}
    if nar_rows:
        lines.append("## NAR translation quality (mask-predict)")
        lines.append("")
        lines.append("| Model | Iterations | BLEU (mean +- std) |")
        lines.append("|-------|------------|--------------------|")
        for row, entry in nar_rows.items():
            for nar_t in sorted(entry["bleu_by_iterations"], key=int):
                b = entry["bleu_by_iterations"][nar_t]
                lines.append(f"| {row} | {nar_t} | {b['mean']:.2f} +- {b['std']:.2f} |")
        lines.append("")

    failures = {
        row: entry["errors"] for row, entry in report["rows"].items() if entry.get("errors")
    }
    if failures:
        lines.append("## Row failures")
        lines.append("")
        for row, errors in failures.items():
            for seed, msg in errors.items():
                lines.append(f"- {row} (seed {seed}): {msg}")
        lines.append("")

    analysis = report.get("analysis") or {}
    if analysis.get("entropy"):
        lines.append("## Corpus-level conditional entropy (lower = simpler)")
        lines.append("")
        lines.append("| Condition | forward | backward |")
        lines.append("|-----------|---------|----------|")
        for variant in ("real", "fwd", "bwd", "bidir"):
            dirs = analysis["entropy"].get(variant)
            if not dirs:
                continue
            f = dirs.get("forward", {}).get("mean")
            b = dirs.get("backward", {}).get("mean")
            lines.append(f"| {VARIANT_LABELS[variant]} | {_fmt(f, 4)} | {_fmt(b, 4)} |")
        lines.append("")
    if analysis.get("faithfulness"):
        lines.append("## Faithfulness to the gold alignment distribution (lower = closer)")
        lines.append("")
        lines.append("| Condition | forward | backward |")
        lines.append("|-----------|---------|----------|")
        for variant in ("fwd", "bwd", "bidir"):  # real row omitted: identically zero
            dirs = analysis["faithfulness"].get(variant)
            if not dirs:
                continue
            f = dirs.get("forward", {}).get("mean")
            b = dirs.get("backward", {}).get("mean")
            lines.append(f"| {VARIANT_LABELS[variant]} | {_fmt(f, 4)} | {_fmt(b, 4)} |")
        lines.append("")
    if analysis.get("flags"):
        lines.append("Analysis flags:")
        for flag in analysis["flags"]:
            lines.append(f"- {flag}")
        lines.append("")

    paraphrase = report.get("paraphrase") or {}
    if paraphrase:
        lines.append("## Machine-generated text quality vs the gold side it replaced")
        lines.append("")
        lines.append("| Side | BLEU | TER | Exact copies |")
        lines.append("|------|------|-----|--------------|")
        for side, entry in paraphrase.items():
            lines.append(
                f"| {side} | {entry['bleu']['mean']:.2f} | {entry['ter']['mean']:.2f} "
                f"| {entry['exact_match_rate']['mean']:.1%} |"
            )
        lines.append("")
        samples = paraphrase.get("src_side", {}).get("samples", [])
        if samples:
            lines.append("Sample paraphrases (source side):")
            lines.append("")
            for s in samples[:3]:
                lines.append(f"- `{s['reference']}` -> `{s['generated']}`")
            lines.append("")

    ablation = report.get("ablation_2ref") or {}
    if ablation:
        lines.append("## Two-reference combination ablation")
        lines.append("")
        lines.append("| Training data | Description | BLEU (mean +- std) |")
        lines.append("|---------------|-------------|--------------------|")
        for combo, entry in ablation.items():
            b = entry["bleu"]
            lines.append(
                f"| {combo} | {entry['description']} | {b['mean']:.2f} +- {b['std']:.2f} |"
            )
        lines.append("")
    return "\n".join(lines) + "\n"
