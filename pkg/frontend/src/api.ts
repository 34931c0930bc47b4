// Typed client for the similarity service HTTP API.
// All data flows through these endpoints; the client computes nothing itself.

export interface FundSummary {
  fund_id: string;
  name: string;
  category: string;
  domicile: string;
  classifiable: boolean;
}

export interface Benefit {
  kind: string;
  display: string;
}

export interface SimilarResult {
  fund: FundSummary;
  counter: number;
  slices_in_range: number;
  r: number | null;
  benefits: Benefit[];
}

export interface SearchResponse {
  query: { fund: FundSummary; from: string; to: string; k: number };
  results: SimilarResult[];
}

export interface FundDetail {
  fund_id: string;
  name: string;
  category: string;
  domicile: string;
  management_fee: number | null;
  performance_fee: number | null;
  redemption_fee: number | null;
  sharpe_ratio: number | null;
  trailing_returns: Record<string, number | null>;
  extra_fields: Record<string, string>;
  returns: Record<string, number>;
}

export interface FundsPage {
  funds: FundSummary[];
  next_page: string | null;
}

export interface HealthInfo {
  status: string;
  month_range: [string, string];
  funds: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string
  ) {
    super(message);
  }
}

export type FetchFn = typeof globalThis.fetch;

export class ApiClient {
  private readonly fetchFn: FetchFn;

  constructor(
    private readonly baseUrl: string,
    fetchFn?: FetchFn
  ) {
    this.fetchFn = fetchFn ?? globalThis.fetch.bind(globalThis);
  }

  private async get<T>(path: string, params?: Record<string, string>): Promise<T> {
    const url = new URL(path, this.baseUrl);
    for (const [key, value] of Object.entries(params ?? {})) {
      if (value !== "") url.searchParams.set(key, value);
    }
    const response = await this.fetchFn(url.toString());
    const body = await response.json();
    if (!response.ok) {
      throw new ApiError(
        response.status,
        body?.error ?? "unknown",
        body?.message ?? `request failed with ${response.status}`
      );
    }
    return body as T;
  }

  health(): Promise<HealthInfo> {
    return this.get("/health");
  }

  listFunds(filter: string, page?: string): Promise<FundsPage> {
    const params: Record<string, string> = { filter };
    if (page) params.page = page;
    return this.get("/funds", params);
  }

  fundDetail(fundId: string): Promise<FundDetail> {
    return this.get(`/funds/${encodeURIComponent(fundId)}`);
  }

  similar(
    fundId: string,
    range: { from?: string; to?: string },
    k: number
  ): Promise<SearchResponse> {
    const params: Record<string, string> = { k: String(k) };
    if (range.from) params.from = range.from;
    if (range.to) params.to = range.to;
    return this.get(`/funds/${encodeURIComponent(fundId)}/similar`, params);
  }
}
