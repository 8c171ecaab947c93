// Explorer parameters live in the URL query string using exactly the API's
// parameter names, so a view is shareable and the query doubles as the
// /api/verdict request.

export interface ExplorerParams {
  diDeltas: number[];
  udapKs: number[];
  tauPf: number;
  tauInj: number;
  /** baseline policy string ("id:<id>", "max-accuracy", "off-frontier:<eps>")
   *  or null to keep the report's stored baseline */
  baseline: string | null;
}

export const DEFAULT_PARAMS: ExplorerParams = {
  diDeltas: [0.01, 0.02],
  udapKs: [4, 1],
  tauPf: 0.1,
  tauInj: 0.15,
  baseline: null,
};

export function encodeParams(p: ExplorerParams): string {
  const q = new URLSearchParams();
  for (const d of p.diDeltas) q.append("di_delta", String(d));
  for (const k of p.udapKs) q.append("udap_k", String(k));
  q.set("tau_pf", String(p.tauPf));
  q.set("tau_inj", String(p.tauInj));
  if (p.baseline !== null) q.set("baseline", p.baseline);
  return q.toString();
}

export function decodeParams(search: string, fallback: ExplorerParams = DEFAULT_PARAMS): ExplorerParams {
  const q = new URLSearchParams(search.startsWith("?") ? search.slice(1) : search);
  const nums = (name: string): number[] =>
    q.getAll(name).map(Number).filter((v) => Number.isFinite(v));
  const num = (name: string, dflt: number): number => {
    const raw = q.get(name);
    const v = raw === null ? NaN : Number(raw);
    return Number.isFinite(v) ? v : dflt;
  };
  const deltas = nums("di_delta");
  const ks = nums("udap_k");
  return {
    diDeltas: deltas.length ? deltas : [...fallback.diDeltas],
    udapKs: ks.length ? ks : [...fallback.udapKs],
    tauPf: num("tau_pf", fallback.tauPf),
    tauInj: num("tau_inj", fallback.tauInj),
    baseline: q.get("baseline") ?? fallback.baseline,
  };
}

/** Query string for /api/verdict (identical wire names). */
export function toQuery(p: ExplorerParams): string {
  return encodeParams(p);
}
