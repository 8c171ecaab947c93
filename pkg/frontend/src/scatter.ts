// SVG scatter rendering. Point classification (colors) comes strictly from
// the latest /api/verdict response; this module never computes acceptable
// sets itself. Axis orientation matches the engine's plots: disparity
// decreasing in severity from left to right, accuracy upward.

import type { DivergenceClass, GeometryDto, ReportDto, VerdictPayload } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

const W = 760;
const H = 520;
const M = { left: 64, right: 20, top: 20, bottom: 48 };

export const CLASS_COLORS: Record<DivergenceClass, string> = {
  baseline: "#d62728",
  both: "#7b3294",
  di_only: "#2ca02c",
  udap_only: "#1f77b4",
  neither: "#9aa0a6",
  pending: "#555555",
};

export function classify(
  id: string,
  baselineId: string | null,
  verdict: VerdictPayload | null,
): DivergenceClass {
  if (id === baselineId) return "baseline";
  if (!verdict) return "pending";
  const d = verdict.divergence;
  if (d.both.includes(id)) return "both";
  if (d.di_only.includes(id)) return "di_only";
  if (d.udap_only.includes(id)) return "udap_only";
  return "neither";
}

interface Scale {
  x(disp: number): number;
  y(acc: number): number;
  dLo: number;
  dHi: number;
  aLo: number;
  aHi: number;
}

function makeScale(report: ReportDto, geometry: GeometryDto[]): Scale {
  const disps = report.pool.records.map((r) => r.disparity);
  const accs = report.pool.records.map((r) => r.accuracy);
  for (const g of geometry) {
    if (g.kind === "trigger_line" && g.disparity !== undefined) disps.push(g.disparity);
    if (g.kind.startsWith("di_") && g.accuracy !== undefined) accs.push(g.accuracy);
  }
  const pad = (lo: number, hi: number, min: number) => {
    const p = Math.max(min, 0.06 * (hi - lo));
    return [lo - p, hi + p];
  };
  const [dLo, dHi] = pad(Math.min(...disps), Math.max(...disps), 0.01);
  const [aLo, aHi] = pad(Math.min(...accs), Math.max(...accs), 0.005);
  const pw = W - M.left - M.right;
  const ph = H - M.top - M.bottom;
  return {
    x: (d) => M.left + ((dHi - d) / (dHi - dLo)) * pw, // reversed
    y: (a) => M.top + ((aHi - a) / (aHi - aLo)) * ph,
    dLo,
    dHi,
    aLo,
    aHi,
  };
}

function el(doc: Document, tag: string, attrs: Record<string, string>): SVGElement {
  const node = doc.createElementNS(SVG_NS, tag) as SVGElement;
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
}

function drawGeometry(doc: Document, svg: SVGElement, geometry: GeometryDto[], s: Scale): void {
  const ks = [...new Set(geometry.filter((g) => g.kind === "udap_tradeoff").map((g) => g.k!))].sort(
    (a, b) => b - a,
  );
  const shades = ["#08306b", "#2171b5", "#6baed6", "#c6dbef"];
  for (const g of geometry) {
    if (g.kind === "udap_tradeoff") {
      const accAt = (d: number) => g.anchor_accuracy! + (d - g.anchor_disparity!) / g.k!;
      svg.appendChild(
        el(doc, "line", {
          class: "geo-udap",
          x1: s.x(s.dLo).toFixed(1),
          y1: s.y(accAt(s.dLo)).toFixed(1),
          x2: s.x(s.dHi).toFixed(1),
          y2: s.y(accAt(s.dHi)).toFixed(1),
          stroke: shades[Math.min(ks.indexOf(g.k!), shades.length - 1)],
          "stroke-width": "1.6",
          "data-k": String(g.k),
        }),
      );
    } else if (g.kind.startsWith("di_") && g.accuracy !== undefined) {
      const y = s.y(g.accuracy).toFixed(1);
      svg.appendChild(
        el(doc, "line", {
          class: "geo-di",
          x1: String(M.left),
          y1: y,
          x2: String(W - M.right),
          y2: y,
          stroke: "#2ca02c",
          "stroke-dasharray": "5 4",
          "stroke-width": "1.4",
        }),
      );
    } else if (g.kind === "trigger_line" && g.disparity !== undefined) {
      const x = s.x(g.disparity).toFixed(1);
      svg.appendChild(
        el(doc, "line", {
          class: "geo-trigger",
          x1: x,
          y1: String(M.top),
          x2: x,
          y2: String(H - M.bottom),
          stroke: g.doctrine === "di" ? "#ff7f0e" : "#b22222",
          "stroke-dasharray": "2 3",
          "stroke-width": "1.2",
          "data-doctrine": g.doctrine ?? "",
        }),
      );
    }
  }
}

/** Build the full scatter SVG; classification uses only the verdict payload. */
export function renderScatter(
  doc: Document,
  report: ReportDto,
  verdict: VerdictPayload | null,
): SVGElement {
  const geometry = verdict ? verdict.geometry : report.geometry;
  const baselineId = verdict ? verdict.params.baseline : report.pool.baseline_id;
  const s = makeScale(report, geometry);
  const svg = el(doc, "svg", {
    xmlns: SVG_NS,
    viewBox: `0 0 ${W} ${H}`,
    width: String(W),
    height: String(H),
    class: "scatter",
  });
  svg.appendChild(
    el(doc, "rect", {
      x: String(M.left),
      y: String(M.top),
      width: String(W - M.left - M.right),
      height: String(H - M.top - M.bottom),
      fill: "none",
      stroke: "#cccccc",
    }),
  );

  // axis ticks
  for (let i = 0; i <= 5; i++) {
    const d = s.dLo + ((s.dHi - s.dLo) * i) / 5;
    const tx = el(doc, "text", {
      class: "tick",
      x: s.x(d).toFixed(1),
      y: String(H - M.bottom + 16),
      "text-anchor": "middle",
      "font-size": "10",
      fill: "#555555",
    });
    tx.textContent = d.toFixed(3);
    svg.appendChild(tx);
    const a = s.aLo + ((s.aHi - s.aLo) * i) / 5;
    const ty = el(doc, "text", {
      class: "tick",
      x: String(M.left - 6),
      y: (s.y(a) + 3).toFixed(1),
      "text-anchor": "end",
      "font-size": "10",
      fill: "#555555",
    });
    ty.textContent = a.toFixed(3);
    svg.appendChild(ty);
  }
  const xl = el(doc, "text", {
    x: String((M.left + W - M.right) / 2),
    y: String(H - 10),
    "text-anchor": "middle",
    "font-size": "12",
    fill: "#222222",
  });
  xl.textContent = "demographic disparity (severity decreases →)";
  svg.appendChild(xl);

  drawGeometry(doc, svg, geometry, s);

  for (const r of report.pool.records) {
    const cls = classify(r.id, baselineId, verdict);
    const x = s.x(r.disparity);
    const y = s.y(r.accuracy);
    const common = {
      class: "pt",
      fill: CLASS_COLORS[cls],
      stroke: r.on_frontier ? "#b8860b" : "#333333",
      "stroke-width": r.on_frontier ? "2" : "0.6",
      "data-id": r.id,
      "data-divergence": cls,
      "data-frontier": String(r.on_frontier),
    };
    const node =
      r.intervention_kind !== "none"
        ? el(doc, "polygon", {
            ...common,
            points: `${x.toFixed(1)},${(y - 5).toFixed(1)} ${(x - 4.5).toFixed(1)},${(y + 4).toFixed(1)} ${(x + 4.5).toFixed(1)},${(y + 4).toFixed(1)}`,
          })
        : el(doc, "circle", { ...common, cx: x.toFixed(1), cy: y.toFixed(1), r: "4.5" });
    const title = doc.createElementNS(SVG_NS, "title");
    title.textContent = `${r.id}\naccuracy ${r.accuracy}, disparity ${r.disparity}`;
    node.appendChild(title);
    svg.appendChild(node);
    if (r.label) {
      const lab = el(doc, "text", {
        class: "pt-label",
        x: (x + 7).toFixed(1),
        y: (y - 6).toFixed(1),
        "font-size": "11",
        "font-weight": "bold",
        fill: "#111111",
      });
      lab.textContent = r.label;
      svg.appendChild(lab);
    }
  }
  return svg;
}
