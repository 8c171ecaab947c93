// Explorer wiring: sliders issue debounced /api/verdict requests; the
// rendered classification always corresponds to the most recent completed
// response (stale responses are dropped by token). Verdicts are server-
// authoritative; the client only redraws.

import { ApiClient, ApiError, type FetchLike } from "./api.js";
import { renderScatter } from "./scatter.js";
import type { ReportDto, VerdictPayload } from "./types.js";
import {
  DEFAULT_PARAMS,
  decodeParams,
  encodeParams,
  type ExplorerParams,
} from "./url-state.js";

export interface AppOptions {
  apiBase?: string;
  fetchFn?: FetchLike;
  debounceMs?: number;
  win?: Window | null;
}

export interface ExplorerState {
  report: ReportDto | null;
  params: ExplorerParams;
  verdict: VerdictPayload | null;
  pending: boolean;
  error: string | null;
}

interface ControlSpec {
  key: "delta" | "k" | "tauPf" | "tauInj";
  label: string;
  min: number;
  max: number;
  step: number;
}

const CONTROLS: ControlSpec[] = [
  { key: "delta", label: "DI accuracy tolerance δ", min: 0, max: 0.1, step: 0.001 },
  { key: "k", label: "UDAP slope k", min: 0.25, max: 10, step: 0.25 },
  { key: "tauPf", label: "DI trigger τ_pf", min: 0, max: 0.5, step: 0.005 },
  { key: "tauInj", label: "UDAP trigger τ_inj", min: 0, max: 0.5, step: 0.005 },
];

export class ExplorerApp {
  private readonly api: ApiClient;
  private readonly debounceMs: number;
  private readonly win: Window | null;
  private readonly doc: Document;
  private token = 0;
  private debounceTimer: ReturnType<typeof setTimeout> | null = null;
  private inflight: Promise<void> = Promise.resolve();

  readonly state: ExplorerState = {
    report: null,
    params: { ...DEFAULT_PARAMS },
    verdict: null,
    pending: false,
    error: null,
  };

  constructor(private readonly root: HTMLElement, opts: AppOptions = {}) {
    this.win = opts.win ?? (typeof window === "undefined" ? null : window);
    this.doc = root.ownerDocument;
    this.debounceMs = opts.debounceMs ?? 250;
    const base = opts.apiBase ?? "";
    this.api = new ApiClient(base, opts.fetchFn);
  }

  /** Load the report, restore params from the URL, and fetch the first
   * verdict. Errors surface in the UI rather than throwing. */
  async start(): Promise<void> {
    this.buildSkeleton();
    let report: ReportDto;
    try {
      report = await this.api.getReport();
    } catch (err) {
      this.showError(err instanceof ApiError ? err.message : String(err));
      return;
    }
    this.state.report = report;
    const defaults: ExplorerParams = {
      diDeltas: report.configs.di
        .map((c) => c.lda_rule.delta)
        .filter((d): d is number => d !== null),
      udapKs: report.configs.udap.map((c) => c.k),
      tauPf: report.configs.di[0]?.tau_pf ?? DEFAULT_PARAMS.tauPf,
      tauInj: report.configs.udap[0]?.tau_inj ?? DEFAULT_PARAMS.tauInj,
      baseline: null,
    };
    if (defaults.diDeltas.length === 0) defaults.diDeltas = [...DEFAULT_PARAMS.diDeltas];
    const search = this.win ? this.win.location.search : "";
    this.state.params = decodeParams(search, defaults);
    this.buildControls();
    await this.issueRequest();
  }

  /** Programmatic parameter update (used by tests and the URL restore);
   * bypasses the debounce and resolves when the verdict is applied. */
  async setParams(params: ExplorerParams): Promise<void> {
    this.state.params = { ...params, diDeltas: [...params.diDeltas], udapKs: [...params.udapKs] };
    this.syncControls();
    await this.issueRequest();
  }

  whenIdle(): Promise<void> {
    return this.inflight;
  }

  private scheduleRequest(): void {
    if (this.debounceTimer !== null) clearTimeout(this.debounceTimer);
    this.debounceTimer = setTimeout(() => {
      this.debounceTimer = null;
      void this.issueRequest();
    }, this.debounceMs);
  }

  private issueRequest(): Promise<void> {
    const mine = ++this.token;
    this.state.pending = true;
    this.setBanner("computing…", "pending");
    const run = async () => {
      try {
        const verdict = await this.api.getVerdict(this.state.params);
        if (mine !== this.token) return; // stale response: drop
        this.state.verdict = verdict;
        this.state.error = null;
        this.state.pending = false;
        this.pushUrl();
        this.redraw();
      } catch (err) {
        if (mine !== this.token) return;
        this.state.pending = false;
        const msg = err instanceof ApiError ? err.message : String(err);
        if (err instanceof ApiError && err.status === 400) {
          this.setBanner(`invalid parameters: ${msg}`, "error");
        } else {
          this.showError(msg);
        }
      }
    };
    this.inflight = run();
    return this.inflight;
  }

  private pushUrl(): void {
    if (!this.win || !this.win.history) return;
    this.win.history.replaceState(null, "", `?${encodeParams(this.state.params)}`);
  }

  // --- DOM -----------------------------------------------------------------

  private buildSkeleton(): void {
    this.root.innerHTML = "";
    const panel = this.doc.createElement("div");
    panel.className = "controls";
    const banner = this.doc.createElement("div");
    banner.className = "banner";
    const errorBox = this.doc.createElement("div");
    errorBox.className = "error-box";
    errorBox.hidden = true;
    const chart = this.doc.createElement("div");
    chart.className = "chart";
    const verdicts = this.doc.createElement("div");
    verdicts.className = "verdicts";
    this.root.append(panel, banner, errorBox, chart, verdicts);
  }

  private buildControls(): void {
    const panel = this.root.querySelector<HTMLElement>(".controls")!;
    panel.innerHTML = "";
    for (const spec of CONTROLS) {
      const wrap = this.doc.createElement("label");
      wrap.className = `control control-${spec.key}`;
      const text = this.doc.createElement("span");
      const slider = this.doc.createElement("input");
      slider.type = "range";
      slider.min = String(spec.min);
      slider.max = String(spec.max);
      slider.step = String(spec.step);
      slider.value = String(this.controlValue(spec.key));
      slider.addEventListener("input", () => {
        this.applyControl(spec.key, Number(slider.value));
        text.textContent = this.controlText(spec);
        this.scheduleRequest();
      });
      text.textContent = this.controlText(spec);
      wrap.append(text, slider);
      panel.appendChild(wrap);
    }

    const baselineWrap = this.doc.createElement("label");
    baselineWrap.className = "control control-baseline";
    const caption = this.doc.createElement("span");
    caption.textContent = "baseline";
    const select = this.doc.createElement("select");
    const keep = this.doc.createElement("option");
    keep.value = "";
    keep.textContent = "report default";
    select.appendChild(keep);
    const maxAcc = this.doc.createElement("option");
    maxAcc.value = "max-accuracy";
    maxAcc.textContent = "max accuracy";
    select.appendChild(maxAcc);
    for (const r of this.state.report?.pool.records ?? []) {
      const opt = this.doc.createElement("option");
      opt.value = `id:${r.id}`;
      opt.textContent = r.id.length > 58 ? `${r.id.slice(0, 55)}…` : r.id;
      select.appendChild(opt);
    }
    select.value = this.state.params.baseline ?? "";
    select.addEventListener("change", () => {
      this.state.params.baseline = select.value === "" ? null : select.value;
      this.scheduleRequest();
    });
    baselineWrap.append(caption, select);
    panel.appendChild(baselineWrap);
  }

  private controlValue(key: ControlSpec["key"]): number {
    const p = this.state.params;
    if (key === "delta") return p.diDeltas[0];
    if (key === "k") return p.udapKs[0];
    if (key === "tauPf") return p.tauPf;
    return p.tauInj;
  }

  private controlText(spec: ControlSpec): string {
    const value = this.controlValue(spec.key);
    if (spec.key === "k") {
      // show both slope conventions so the tradeoff reads either way
      return `${spec.label}: ${value} (c = ${(1 / value).toPrecision(3)})`;
    }
    return `${spec.label}: ${value}`;
  }

  private applyControl(key: ControlSpec["key"], value: number): void {
    const p = this.state.params;
    if (key === "delta") p.diDeltas = [value, ...p.diDeltas.slice(1)];
    else if (key === "k") p.udapKs = [value, ...p.udapKs.slice(1)];
    else if (key === "tauPf") p.tauPf = value;
    else p.tauInj = value;
  }

  private syncControls(): void {
    const panel = this.root.querySelector<HTMLElement>(".controls");
    if (!panel || !panel.childElementCount) return;
    const sliders = panel.querySelectorAll<HTMLInputElement>("input[type=range]");
    CONTROLS.forEach((spec, i) => {
      const slider = sliders[i];
      if (slider) slider.value = String(this.controlValue(spec.key));
    });
    const select = panel.querySelector<HTMLSelectElement>("select");
    if (select) select.value = this.state.params.baseline ?? "";
  }

  private setBanner(text: string, kind: "ok" | "pending" | "warn" | "error"): void {
    const banner = this.root.querySelector<HTMLElement>(".banner");
    if (!banner) return;
    banner.textContent = text;
    banner.dataset.kind = kind;
  }

  private showError(message: string): void {
    const box = this.root.querySelector<HTMLElement>(".error-box");
    if (box) {
      box.hidden = false;
      box.textContent = `error: ${message}`;
    }
    this.state.error = message;
    this.setBanner("server error", "error");
  }

  private redraw(): void {
    const { report, verdict } = this.state;
    if (!report) return;
    const chart = this.root.querySelector<HTMLElement>(".chart")!;
    chart.innerHTML = "";
    chart.appendChild(renderScatter(this.doc, report, verdict));

    if (verdict) {
      const bits: string[] = [];
      if (!verdict.di.triggered) bits.push("DI not triggered");
      if (!verdict.udap.triggered) bits.push("UDAP not triggered");
      if (verdict.udap.gate_reason) bits.push(`UDAP gate: ${verdict.udap.gate_reason}`);
      this.setBanner(bits.length ? bits.join(" · ") : "both doctrines triggered", bits.length ? "warn" : "ok");

      const box = this.root.querySelector<HTMLElement>(".verdicts")!;
      box.innerHTML = "";
      for (const [name, v] of [
        ["disparate impact", verdict.di],
        ["UDAP unfairness", verdict.udap],
      ] as const) {
        const div = this.doc.createElement("div");
        div.className = "verdict";
        div.textContent = `${name}: ${v.conclusion} (${v.acceptable_ids.length} acceptable)`;
        box.appendChild(div);
      }
    }
  }
}

/** Browser entry point. */
export function mount(): void {
  const root = document.getElementById("app");
  if (root) void new ExplorerApp(root as HTMLElement).start();
}
