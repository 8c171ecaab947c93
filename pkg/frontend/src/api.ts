import type { ReportDto, VerdictPayload } from "./types.js";
import { toQuery, type ExplorerParams } from "./url-state.js";

export type FetchLike = (url: string) => Promise<Response>;

export class ApiError extends Error {
  constructor(message: string, readonly status: number | null = null) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly base: string,
    private readonly fetchFn: FetchLike = (url) => fetch(url),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(`${this.base}${path}`);
    } catch (err) {
      throw new ApiError(`server unreachable: ${String(err)}`);
    }
    const body = await resp.text();
    if (!resp.ok) {
      let detail = body;
      try {
        detail = (JSON.parse(body) as { error?: string }).error ?? body;
      } catch {
        // not json; keep raw body
      }
      throw new ApiError(detail, resp.status);
    }
    return JSON.parse(body) as T;
  }

  getReport(): Promise<ReportDto> {
    return this.getJson<ReportDto>("/api/report");
  }

  getVerdict(params: ExplorerParams): Promise<VerdictPayload> {
    return this.getJson<VerdictPayload>(`/api/verdict?${toQuery(params)}`);
  }
}
