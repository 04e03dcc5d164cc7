"""Presentation-only SVG rendering of evaluation reports."""

from __future__ import annotations

import json


def _svg(width, height, body) -> str:
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">\n'
            f'{body}</svg>\n')


def metrics_bar_svg(report: dict, title: str = "") -> str:
    """Per-fold accuracy and AUC bars plus mean lines."""
    acc = report["fold_accuracy"]
    auc = report["fold_auc"]
    n = len(acc)
    bw, gap, h0, plot_h = 26, 10, 40, 180
    width = 2 * n * (bw + gap) + 80
    parts = [f'<text x="10" y="20" font-size="14">{title} '
             f'mean acc={report["mean_accuracy"]:.3f} '
             f'mean auc={report["mean_auc"]:.3f}</text>']
    x = 40
    for series, color in ((acc, "#4878a8"), (auc, "#c06040")):
        for v in series:
            bar_h = plot_h * v
            parts.append(f'<rect x="{x}" y="{h0 + plot_h - bar_h:.1f}" '
                         f'width="{bw}" height="{bar_h:.1f}" fill="{color}"/>')
            x += bw + gap
        x += 2 * gap
    parts.append(f'<line x1="30" y1="{h0 + plot_h}" x2="{width - 10}" '
                 f'y2="{h0 + plot_h}" stroke="#333"/>')
    return _svg(width, h0 + plot_h + 20, "\n".join(parts) + "\n")


def confusion_heatmap_svg(report: dict, title: str = "") -> str:
    m = report["confusion_normalized"]
    k = len(m)
    cell = 48
    parts = [f'<text x="10" y="18" font-size="14">{title} confusion (row-normalized)</text>']
    for i, row in enumerate(m):
        for j, v in enumerate(row):
            shade = int(255 - 205 * v)
            parts.append(
                f'<rect x="{30 + j * cell}" y="{30 + i * cell}" width="{cell}" '
                f'height="{cell}" fill="rgb({shade},{shade},255)" stroke="#888"/>')
            parts.append(
                f'<text x="{30 + j * cell + cell / 2}" y="{30 + i * cell + cell / 2 + 4}" '
                f'font-size="11" text-anchor="middle">{v:.2f}</text>')
    size = 40 + k * cell
    return _svg(size + 20, size, "\n".join(parts) + "\n")


def render_report(report_path: str, out_prefix: str) -> list:
    with open(report_path, encoding="utf-8") as fh:
        report = json.load(fh)
    outputs = []
    for name, svg in (("metrics", metrics_bar_svg(report)),
                      ("confusion", confusion_heatmap_svg(report))):
        path = f"{out_prefix}_{name}.svg"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(svg)
        outputs.append(path)
    return outputs
