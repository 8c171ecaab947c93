"""Audit report assembly, canonical JSON serialization, SVG scatter plots,
and text summaries.

Reports are self-contained: the pool, configs, verdicts, divergence sets, and
geometry are all stored, so re-running doctrine evaluation on a parsed report
reproduces its verdicts exactly, and every plotted element derives from
report content alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .canonical import dumps_canonical
from .doctrine import (
    DiConfig,
    DivergenceReport,
    UdapConfig,
    Verdict,
    di_config_from_dict,
    divergence_from_dict,
    udap_config_from_dict,
    verdict_from_dict,
)
from .errors import IncompleteReport
from .search import CandidatePool, pool_from_dict

SCHEMA_VERSION = 1

METHOD_NOTES = {
    "significance": "statistical significance is operationalized as a pooled "
    "two-proportion z-test; regulators specify no particular procedure",
    "split": "train/holdout proportions and preprocessing are tool defaults "
    "(holdout fraction and seed recorded under dataset.split)",
    "reweighing": "the reweighing intervention is a stand-in for "
    "reduction-style mitigations; whether it spans a comparable "
    "accuracy/disparity range is an empirical question, not assumed",
}


@dataclass(frozen=True)
class AuditReport:
    dataset: dict
    pool: CandidatePool
    di_configs: tuple[DiConfig, ...]
    udap_configs: tuple[UdapConfig, ...]
    di_verdict: Verdict | None
    udap_verdict: Verdict | None
    divergence: DivergenceReport | None
    geometry: tuple[dict, ...]
    tool_version: str
    generated_at: str
    notes: dict = field(default_factory=lambda: dict(METHOD_NOTES))

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "tool_version": self.tool_version,
            "generated_at": self.generated_at,
            "dataset": dict(self.dataset),
            "pool": self.pool.to_dict(),
            "configs": {
                "di": [c.to_dict() for c in self.di_configs],
                "udap": [c.to_dict() for c in self.udap_configs],
            },
            "verdicts": {
                "di": self.di_verdict.to_dict() if self.di_verdict else None,
                "udap": self.udap_verdict.to_dict() if self.udap_verdict else None,
            },
            "divergence": self.divergence.to_dict() if self.divergence else None,
            "geometry": [dict(g) for g in self.geometry],
            "notes": dict(self.notes),
        }


def report_from_dict(raw: dict) -> AuditReport:
    verdicts = raw.get("verdicts", {})
    return AuditReport(
        dataset=dict(raw["dataset"]),
        pool=pool_from_dict(raw["pool"]),
        di_configs=tuple(di_config_from_dict(c) for c in raw["configs"]["di"]),
        udap_configs=tuple(udap_config_from_dict(c) for c in raw["configs"]["udap"]),
        di_verdict=verdict_from_dict(verdicts["di"]) if verdicts.get("di") else None,
        udap_verdict=verdict_from_dict(verdicts["udap"]) if verdicts.get("udap") else None,
        divergence=divergence_from_dict(raw["divergence"]) if raw.get("divergence") else None,
        geometry=tuple(raw.get("geometry", ())),
        tool_version=raw["tool_version"],
        generated_at=raw["generated_at"],
        notes=dict(raw.get("notes", {})),
    )


def load_report(path: str) -> AuditReport:
    with open(path, encoding="utf-8") as fh:
        return report_from_dict(json.load(fh))


def emit_json(report: AuditReport, path: str) -> None:
    """Canonical serialization: sorted keys, floats at 6 significant digits.
    Raises IncompleteReport when verdicts or divergence are missing."""
    if report.di_verdict is None or report.udap_verdict is None or report.divergence is None:
        raise IncompleteReport("report lacks verdicts or divergence sets")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(report.to_dict()))


def behavioral_duplicates(pool: CandidatePool) -> list[list[str]]:
    """Groups of distinct specs with identical holdout prediction vectors."""
    by_bits: dict[str, list[str]] = {}
    for r in pool.records:
        by_bits.setdefault(r.prediction_bits, []).append(r.id)
    return [sorted(ids) for bits, ids in sorted(by_bits.items()) if len(ids) > 1]


# --- SVG scatter -----------------------------------------------------------

_W, _H = 840, 600
_LEFT, _RIGHT, _TOP, _BOTTOM = 80, 30, 40, 70

_COLOR_BASELINE = "#d62728"
_COLOR_FRONTIER = "#f2c744"
_COLOR_PLAIN = "#9aa0a6"
_COLOR_INTERVENED = "#1f77b4"
_COLOR_DI = "#2ca02c"
_COLOR_TRIGGER_DI = "#ff7f0e"
_COLOR_TRIGGER_UDAP = "#b22222"
# darkest shade is the steepest (largest k) tradeoff
_UDAP_SHADES = ["#08306b", "#2171b5", "#6baed6", "#c6dbef"]


def _domain(values: list[float], min_pad: float) -> tuple[float, float]:
    lo, hi = min(values), max(values)
    pad = max(min_pad, 0.06 * (hi - lo))
    return lo - pad, hi + pad


def _clip_segment(
    p0: tuple[float, float], p1: tuple[float, float], y_lo: float, y_hi: float
) -> tuple[tuple[float, float], tuple[float, float]] | None:
    (x0, y0), (x1, y1) = p0, p1
    if y0 == y1:
        return (p0, p1) if y_lo <= y0 <= y_hi else None
    t_lo, t_hi = 0.0, 1.0
    for bound in (y_lo, y_hi):
        t = (bound - y0) / (y1 - y0)
        lower = (y1 > y0) == (bound == y_lo)
        if lower:
            t_lo = max(t_lo, t)
        else:
            t_hi = min(t_hi, t)
    if t_lo >= t_hi:
        return None
    at = lambda t: (x0 + t * (x1 - x0), y0 + t * (y1 - y0))
    return at(t_lo), at(t_hi)


def emit_svg_scatter(report: AuditReport, path: str) -> None:
    """Write the accuracy/disparity scatter as standalone SVG 1.1.

    The x axis is disparity with severity decreasing rightward (reversed);
    y is accuracy. Baseline is red, frontier models yellow, intervention
    models drawn as blue triangles, DI floors dotted green, UDAP tradeoffs
    solid blue (darker = steeper k), trigger thresholds vertical orange/red.
    Points carry data-* attributes so structure is assertable by parsing.
    """
    records = report.pool.records
    geometry = report.geometry
    if not records:
        raise IncompleteReport("no records to plot")

    disps = [r.disparity for r in records]
    accs = [r.accuracy for r in records]
    for g in geometry:
        if g["kind"] == "trigger_line":
            disps.append(g["disparity"])
        elif g["kind"].startswith("di_"):
            accs.append(g["accuracy"])
    d_lo, d_hi = _domain(disps, 0.01)
    a_lo, a_hi = _domain(accs, 0.005)

    pw = _W - _LEFT - _RIGHT
    ph = _H - _TOP - _BOTTOM
    xpx = lambda d: _LEFT + (d_hi - d) / (d_hi - d_lo) * pw  # reversed axis
    ypx = lambda a: _TOP + (a_hi - a) / (a_hi - a_lo) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" data-disp-min="{d_lo:.6f}" data-disp-max="{d_hi:.6f}" '
        f'data-acc-min="{a_lo:.6f}" data-acc-max="{a_hi:.6f}" data-px-left="{_LEFT}" '
        f'data-px-right="{_LEFT + pw}" data-px-top="{_TOP}" data-px-bottom="{_TOP + ph}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="#ffffff"/>',
        f'<rect x="{_LEFT}" y="{_TOP}" width="{pw}" height="{ph}" fill="none" stroke="#cccccc"/>',
    ]

    # axes: 6 ticks each
    for i in range(6):
        d = d_lo + (d_hi - d_lo) * i / 5
        x = xpx(d)
        out.append(
            f'<line x1="{x:.2f}" y1="{_TOP + ph}" x2="{x:.2f}" y2="{_TOP + ph + 5}" stroke="#666666"/>'
        )
        out.append(
            f'<text x="{x:.2f}" y="{_TOP + ph + 20}" font-size="11" text-anchor="middle" '
            f'fill="#444444">{d:.3f}</text>'
        )
        a = a_lo + (a_hi - a_lo) * i / 5
        y = ypx(a)
        out.append(
            f'<line x1="{_LEFT - 5}" y1="{y:.2f}" x2="{_LEFT}" y2="{y:.2f}" stroke="#666666"/>'
        )
        out.append(
            f'<text x="{_LEFT - 9}" y="{y + 4:.2f}" font-size="11" text-anchor="end" '
            f'fill="#444444">{a:.3f}</text>'
        )
    out.append(
        f'<text x="{_LEFT + pw / 2:.1f}" y="{_H - 22}" font-size="13" text-anchor="middle" '
        f'fill="#222222">demographic disparity (severity decreases to the right)</text>'
    )
    out.append(
        f'<text x="18" y="{_TOP + ph / 2:.1f}" font-size="13" text-anchor="middle" '
        f'fill="#222222" transform="rotate(-90 18 {_TOP + ph / 2:.1f})">holdout accuracy</text>'
    )

    udap_ks = sorted(
        {g["k"] for g in geometry if g["kind"] == "udap_tradeoff"}, reverse=True
    )
    shade_of = {
        k: _UDAP_SHADES[min(i, len(_UDAP_SHADES) - 1)] for i, k in enumerate(udap_ks)
    }

    for g in geometry:
        kind = g["kind"]
        if kind in ("di_accuracy_floor", "di_ci_floor", "di_previous_floor"):
            y = ypx(g["accuracy"])
            if not (_TOP <= y <= _TOP + ph):
                continue
            cls = {"di_accuracy_floor": "di-line", "di_ci_floor": "di-ci-line",
                   "di_previous_floor": "di-prev-line"}[kind]
            out.append(
                f'<line class="{cls}" x1="{_LEFT}" y1="{y:.2f}" x2="{_LEFT + pw}" y2="{y:.2f}" '
                f'stroke="{_COLOR_DI}" stroke-width="1.6" stroke-dasharray="5 4" '
                f'data-accuracy="{g["accuracy"]:.6f}"/>'
            )
        elif kind == "udap_tradeoff":
            k = g["k"]
            acc_at = lambda d: g["anchor_accuracy"] + (d - g["anchor_disparity"]) / k
            seg = _clip_segment((d_lo, acc_at(d_lo)), (d_hi, acc_at(d_hi)), a_lo, a_hi)
            if seg is None:
                continue
            (dx0, ay0), (dx1, ay1) = seg
            out.append(
                f'<line class="udap-line" x1="{xpx(dx0):.2f}" y1="{ypx(ay0):.2f}" '
                f'x2="{xpx(dx1):.2f}" y2="{ypx(ay1):.2f}" stroke="{shade_of[k]}" '
                f'stroke-width="1.8" data-k="{k:g}"/>'
            )
        elif kind == "trigger_line":
            x = xpx(g["disparity"])
            if not (_LEFT <= x <= _LEFT + pw):
                continue
            color = _COLOR_TRIGGER_DI if g["doctrine"] == "di" else _COLOR_TRIGGER_UDAP
            out.append(
                f'<line class="trigger-line" x1="{x:.2f}" y1="{_TOP}" x2="{x:.2f}" '
                f'y2="{_TOP + ph}" stroke="{color}" stroke-width="1.4" '
                f'stroke-dasharray="2 3" data-doctrine="{g["doctrine"]}" '
                f'data-disparity="{g["disparity"]:.6f}"/>'
            )

    baseline_id = report.pool.baseline_id
    for r in records:
        x, y = xpx(r.disparity), ypx(r.accuracy)
        if r.id == baseline_id:
            fill = _COLOR_BASELINE
        elif r.on_frontier:
            fill = _COLOR_FRONTIER
        elif r.intervened:
            fill = _COLOR_INTERVENED
        else:
            fill = _COLOR_PLAIN
        attrs = (
            f'data-id="{r.id}" data-disparity="{r.disparity:.6f}" '
            f'data-accuracy="{r.accuracy:.6f}" data-frontier="{str(r.on_frontier).lower()}" '
            f'data-baseline="{str(r.id == baseline_id).lower()}" '
            f'data-intervened="{str(r.intervened).lower()}"'
        )
        if r.intervened:
            pts = f"{x:.2f},{y - 5:.2f} {x - 4.5:.2f},{y + 4:.2f} {x + 4.5:.2f},{y + 4:.2f}"
            out.append(
                f'<polygon class="model-point" points="{pts}" fill="{fill}" '
                f'stroke="#333333" stroke-width="0.6" {attrs}/>'
            )
        else:
            out.append(
                f'<circle class="model-point" cx="{x:.2f}" cy="{y:.2f}" r="4.5" '
                f'fill="{fill}" stroke="#333333" stroke-width="0.6" {attrs}/>'
            )
        if r.label:
            out.append(
                f'<text class="point-label" x="{x + 7:.2f}" y="{y - 6:.2f}" font-size="12" '
                f'font-weight="bold" fill="#111111">{r.label}</text>'
            )

    out.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")


# --- text summary ----------------------------------------------------------


def _verdict_lines(v: Verdict, title: str) -> list[str]:
    lines = [f"{title}:"]
    lines.append(f"  triggered: {'yes' if v.triggered else 'no'}")
    for reason in v.trigger_reasons:
        lines.append(f"    - {reason}")
    lines.append(f"  conclusion: {v.conclusion}")
    if v.gate_reason:
        lines.append(f"  gate: {v.gate_reason}")
    lines.append(f"  acceptable alternatives: {len(v.acceptable_ids)}")
    return lines


def _bucket_lines(name: str, ids: tuple[str, ...]) -> list[str]:
    if not ids:
        return [f"  {name}: none"]
    shown = ", ".join(ids[:3]) + (" ..." if len(ids) > 3 else "")
    return [f"  {name}: {len(ids)} ({shown})"]


def emit_summary(report: AuditReport) -> str:
    """Human-readable audit outcome: verdicts, divergence counts, baseline
    metrics, and search provenance."""
    if report.di_verdict is None or report.udap_verdict is None or report.divergence is None:
        raise IncompleteReport("summary needs verdicts and divergence sets")
    pool = report.pool
    b = pool.baseline
    air = "undefined" if b.air is None else f"{b.air:g}"
    lines = [
        "fairaudit summary",
        "=================",
        f"dataset fingerprint: {report.dataset.get('fingerprint', 'n/a')}",
        f"pool: {len(pool.records)} models, accuracy floor {pool.accuracy_floor:g}",
        f"baseline: {b.id}",
        f"  accuracy {b.accuracy:g}, disparity {b.disparity:g}, AIR {air}, p {b.p:g}",
        "",
    ]
    lines += _verdict_lines(report.di_verdict, "disparate impact")
    lines.append("")
    lines += _verdict_lines(report.udap_verdict, "UDAP unfairness")
    lines.append("")
    div = report.divergence
    if not (div.di_only or div.udap_only or div.both):
        lines.append("divergence: both doctrines accept no alternatives")
    else:
        lines.append("divergence of acceptable alternatives:")
        lines += _bucket_lines("DI only", div.di_only)
        lines += _bucket_lines("UDAP only", div.udap_only)
        lines += _bucket_lines("both doctrines", div.both)
        lines += _bucket_lines("neither", div.neither)
    lines.append("")
    lines.append("search provenance (kept/trained):")
    for p in pool.provenance:
        lines.append(f"  {p['search']}: {p['kept']}/{p['total']}")
    dupes = behavioral_duplicates(pool)
    if dupes:
        lines.append(f"behavioral duplicates: {len(dupes)} group(s) share identical predictions")
    lines.append("")
    lines.append("method notes:")
    for key in sorted(report.notes):
        lines.append(f"  {key}: {report.notes[key]}")
    return "\n".join(lines) + "\n"
