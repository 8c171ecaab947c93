// DTOs mirroring the report server's JSON (snake_case as served).

export interface ModelRecordDto {
  id: string;
  family: string;
  accuracy: number;
  disparity: number;
  air: number | null;
  p: number;
  on_frontier: boolean;
  intervention_kind: string;
  label: string | null;
}

export interface PoolDto {
  records: ModelRecordDto[];
  baseline_id: string | null;
  accuracy_floor: number;
  provenance: { search: string; kept: number; total: number }[];
}

export interface GeometryDto {
  kind: string;
  accuracy?: number;
  delta?: number | null;
  k?: number;
  c?: number;
  anchor_disparity?: number;
  anchor_accuracy?: number;
  doctrine?: string;
  disparity?: number;
}

export interface DiConfigDto {
  tau_pf: number;
  lda_rule: { kind: string; delta: number | null };
}

export interface UdapConfigDto {
  tau_inj: number;
  k: number;
}

export interface ReportDto {
  pool: PoolDto;
  configs: { di: DiConfigDto[]; udap: UdapConfigDto[] };
  geometry: GeometryDto[];
  dataset: { fingerprint?: string };
}

export interface VerdictDto {
  doctrine: string;
  triggered: boolean;
  trigger_reasons: string[];
  acceptable_ids: string[];
  conclusion: string;
  gate_reason: string | null;
}

export interface DivergenceDto {
  di_only: string[];
  udap_only: string[];
  both: string[];
  neither: string[];
}

export interface VerdictPayload {
  params: {
    di_delta: number[];
    udap_k: number[];
    tau_pf: number;
    tau_inj: number;
    baseline: string | null;
  };
  di: VerdictDto;
  udap: VerdictDto;
  divergence: DivergenceDto;
  geometry: GeometryDto[];
}

export type DivergenceClass = "baseline" | "di_only" | "udap_only" | "both" | "neither" | "pending";
