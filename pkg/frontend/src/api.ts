/**
 * Thin client for the landscape service. Every number shown in the UI
 * comes from these endpoints; nothing is computed locally.
 */

export interface GridDict {
  origin_lat: number;
  origin_lon: number;
  width_m: number;
  height_m: number;
  rows: number;
  cols: number;
}

export interface PmlMetadata {
  program_hash: string;
  db_hash: string;
  seed: number;
  n_ensemble: number;
  n_inf: number;
  timestamp: string;
}

/** One computed landscape: values are row-major, row 0 northernmost. */
export interface PmlDocument {
  grid: GridDict;
  values: number[];
  metadata: PmlMetadata;
}

export interface ParseOk {
  ok: true;
  queries: string[];
}

export interface ParseProblem {
  ok: false;
  line: number;
  column: number;
  message: string;
}

export type ParseResponse = ParseOk | ParseProblem;

export interface InferenceSettings {
  n_ensemble?: number;
  n_inf?: number;
  seed?: number;
  tiling_s?: number;
}

export interface PmlRequest {
  map_ref?: string;
  geojson?: unknown;
  grid?: GridDict;
  params?: InferenceSettings;
  rules: string;
}

export type PmlOutcome =
  | { kind: "done"; pml: PmlDocument }
  | { kind: "queued"; job: string };

export type JobSnapshot =
  | { job: string; status: "queued" | "running" | "cancelled" }
  | { job: string; status: "failed"; error: string }
  | { job: string; status: "done"; result: PmlDocument };

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class PmlClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async post(path: string, body: unknown): Promise<Response> {
    return this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async health(): Promise<boolean> {
    const response = await this.fetchImpl(this.baseUrl + "/api/health");
    return response.ok;
  }

  /** Syntax-check rule text. A 422 is a normal answer, not an error. */
  async parse(rules: string): Promise<ParseResponse> {
    const response = await this.post("/api/parse", { rules });
    if (response.status === 200 || response.status === 422) {
      return (await response.json()) as ParseResponse;
    }
    throw new ApiError(await errorText(response), response.status);
  }

  /** Request a landscape. Small grids answer directly, large ones queue. */
  async computePml(request: PmlRequest): Promise<PmlOutcome> {
    const response = await this.post("/api/pml", request);
    if (response.status === 200) {
      return { kind: "done", pml: (await response.json()) as PmlDocument };
    }
    if (response.status === 202) {
      const body = (await response.json()) as { job: string };
      return { kind: "queued", job: body.job };
    }
    throw new ApiError(await errorText(response), response.status);
  }

  async poll(job: string): Promise<JobSnapshot> {
    const response = await this.fetchImpl(`${this.baseUrl}/api/pml/${job}`);
    if (!response.ok) {
      throw new ApiError(await errorText(response), response.status);
    }
    return (await response.json()) as JobSnapshot;
  }

  /** True when the job was still queued and is now cancelled. */
  async cancel(job: string): Promise<boolean> {
    const response = await this.fetchImpl(`${this.baseUrl}/api/pml/${job}`, {
      method: "DELETE",
    });
    if (response.ok) return true;
    if (response.status === 409) return false;
    throw new ApiError(await errorText(response), response.status);
  }
}

async function errorText(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { error?: string; message?: string };
    return body.error ?? body.message ?? `request failed (${response.status})`;
  } catch {
    return `request failed (${response.status})`;
  }
}
