import { describe, expect, it } from "vitest";

import { DEFAULT_PARAMS, decodeParams, encodeParams, toQuery } from "../src/url-state.js";

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

describe("url state", () => {
  it("round-trips the defaults", () => {
    expect(decodeParams(encodeParams(DEFAULT_PARAMS))).toEqual(DEFAULT_PARAMS);
  });

  it("round-trips 100 random parameter sets exactly", () => {
    const rand = mulberry32(7);
    for (let i = 0; i < 100; i++) {
      const params = {
        diDeltas: [rand() * 0.1, rand() * 0.1].slice(0, 1 + Math.floor(rand() * 2)),
        udapKs: [0.25 + rand() * 10],
        tauPf: rand() * 0.5,
        tauInj: rand() * 0.5,
        baseline: rand() < 0.5 ? null : `id:model-${Math.floor(rand() * 50)}`,
      };
      expect(decodeParams(encodeParams(params))).toEqual(params);
    }
  });

  it("falls back to defaults on junk input", () => {
    const p = decodeParams("?di_delta=banana&tau_pf=nope");
    expect(p.diDeltas).toEqual(DEFAULT_PARAMS.diDeltas);
    expect(p.tauPf).toBe(DEFAULT_PARAMS.tauPf);
  });

  it("handles a leading question mark", () => {
    const qs = `?${encodeParams(DEFAULT_PARAMS)}`;
    expect(decodeParams(qs)).toEqual(DEFAULT_PARAMS);
  });

  it("query string uses the API wire names", () => {
    const q = toQuery({ ...DEFAULT_PARAMS, baseline: "max-accuracy" });
    for (const name of ["di_delta", "udap_k", "tau_pf", "tau_inj", "baseline"]) {
      expect(q).toContain(name);
    }
  });
});
