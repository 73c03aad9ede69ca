// Typed client for the tablechain HTTP service. This file is the only place
// that knows URLs and verbs; everything else consumes the ApiClient interface
// so tests can substitute recorded fixtures.

export type Cell = string | number | boolean | null;

export interface TablePayload {
  columns: string[];
  types: string[];
  cells: Cell[][];
}

export interface SchemaColumn {
  name: string;
  type: string;
  synonyms: string[];
}

export interface UploadResult {
  table_id: string;
  row_count: number;
  schema: { table_name: string; columns: SchemaColumn[] };
}

export interface Correction {
  command_index: number;
  original: string;
  replacement: string;
  method: string;
}

export interface PlotSpec {
  kind: string;
  x: string;
  y: string | null;
  agg: string | null;
  title: string;
}

export interface StepLog {
  command_index: number;
  rows_in: number;
  rows_out: number;
  warnings: string[];
  extra: { plot?: PlotSpec; [key: string]: unknown } | null;
}

export interface Answered {
  kind: "answered";
  chain_text: string;
  corrections: Correction[];
  rationale: string[];
  reply: string;
  result_table: TablePayload;
  step_logs: StepLog[];
  /** present only when the chain mutated data: id of the derived table */
  table_id?: string;
}

export interface Clarification {
  kind: "clarification";
  question: string;
  candidates: string[];
}

export type QueryOutcome = Answered | Clarification;

export interface ServiceError {
  error: string;
  [key: string]: unknown;
}

export interface HistoryEntry {
  seq: number;
  kind: "query" | "commands";
  input: string;
  outcome: "answered" | "clarification" | "error";
  summary: string;
  status: number;
  recorded_at: string;
}

export interface ApiResponse<T> {
  status: number;
  body: T | ServiceError;
}

export interface ApiClient {
  upload(csv: string, name: string): Promise<ApiResponse<UploadResult>>;
  query(tableId: string, text: string): Promise<ApiResponse<QueryOutcome>>;
  commands(tableId: string, chainText: string): Promise<ApiResponse<Answered>>;
  history(tableId: string): Promise<ApiResponse<HistoryEntry[]>>;
}

export function isServiceError(body: unknown): body is ServiceError {
  return typeof body === "object" && body !== null && "error" in body;
}

/** Human-readable one-liner for an error payload. */
export function describeError(status: number, body: unknown): string {
  if (!isServiceError(body)) {
    return `request failed (HTTP ${status})`;
  }
  switch (body.error) {
    case "ParseError":
      return `parse error at line ${body.line}, col ${body.col}: expected ${body.expected}, found ${body.found}`;
    case "AmbiguousColumn":
      return `ambiguous column '${body.name}' (could be ${(body.candidates as string[]).join(", ")})`;
    case "ExecError":
      return `command ${body.command_index} failed: ${body.detail}`;
    case "UnknownTable":
      return "that table is no longer on the server";
    default:
      return `${body.error} (HTTP ${status})`;
  }
}

export class HttpClient implements ApiClient {
  constructor(private baseUrl: string) {}

  private async post<T>(path: string, body: BodyInit, contentType: string): Promise<ApiResponse<T>> {
    const res = await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": contentType },
      body,
    });
    return { status: res.status, body: await res.json() };
  }

  upload(csv: string, name: string) {
    const query = name ? `?name=${encodeURIComponent(name)}` : "";
    return this.post<UploadResult>(`/tables${query}`, csv, "text/csv");
  }

  query(tableId: string, text: string) {
    return this.post<QueryOutcome>(
      `/tables/${tableId}/query`,
      JSON.stringify({ text }),
      "application/json",
    );
  }

  commands(tableId: string, chainText: string) {
    return this.post<Answered>(
      `/tables/${tableId}/commands`,
      JSON.stringify({ chain_text: chainText }),
      "application/json",
    );
  }

  async history(tableId: string): Promise<ApiResponse<HistoryEntry[]>> {
    const res = await fetch(`${this.baseUrl}/tables/${tableId}/history`);
    return { status: res.status, body: await res.json() };
  }
}
