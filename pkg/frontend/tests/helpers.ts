import { readFileSync } from "node:fs";
import { join } from "node:path";
import {
  Answered,
  ApiClient,
  ApiResponse,
  HistoryEntry,
  QueryOutcome,
  UploadResult,
} from "../src/api.js";

interface RecordedCall {
  op: "upload" | "query" | "commands" | "history";
  args: Record<string, unknown>;
  status: number;
  body: unknown;
}

interface SessionFixture {
  table_id: string;
  calls: RecordedCall[];
}

export const MOVIES_CSV =
  "title,box_office,cost\n" +
  "A,100,50\nB,300,100\nC,60,80\nD,240,120\nE,90,30\nF,30,20\n";

export const GOLDEN_QUERY = "Show me the five movies with the highest profit margin";
export const VAGUE_QUERY = "Give me some numbers";
export const PLOT_QUERY = "histogram of cost";
export const TYPO_CHAIN = "SORT cst DESC; SLICE TOP 2";
export const BROKEN_CHAIN = "FROB x";

export function loadFixture(): SessionFixture {
  // import.meta.url is an http: URL under the jsdom environment, so resolve
  // from the package root (vitest runs with cwd = frontend/) instead
  const raw = readFileSync(join(process.cwd(), "tests", "fixtures", "session.json"), "utf-8");
  return JSON.parse(raw) as SessionFixture;
}

function clone<T>(value: T): T {
  return JSON.parse(JSON.stringify(value)) as T;
}

/**
 * ApiClient that replays responses recorded from the real service, so the
 * rendering layer is tested against genuine payload shapes with no HTTP.
 */
export class RecordedClient implements ApiClient {
  readonly fixture = loadFixture();
  readonly log: string[] = [];

  private find(op: string, match: (args: Record<string, unknown>) => boolean): RecordedCall {
    const hit = this.fixture.calls.find((c) => c.op === op && match(c.args));
    if (!hit) {
      throw new Error(`no recorded ${op} call matches`);
    }
    return hit;
  }

  async upload(_csv: string, name: string): Promise<ApiResponse<UploadResult>> {
    this.log.push(`upload:${name}`);
    const call = this.find("upload", (a) => a.name === name);
    return { status: call.status, body: clone(call.body) as UploadResult };
  }

  async query(_tableId: string, text: string): Promise<ApiResponse<QueryOutcome>> {
    this.log.push(`query:${text}`);
    const call = this.find("query", (a) => a.text === text);
    return { status: call.status, body: clone(call.body) as QueryOutcome };
  }

  async commands(_tableId: string, chainText: string): Promise<ApiResponse<Answered>> {
    this.log.push(`commands:${chainText}`);
    const call = this.find("commands", (a) => a.chain_text === chainText);
    return { status: call.status, body: clone(call.body) as Answered };
  }

  async history(_tableId: string): Promise<ApiResponse<HistoryEntry[]>> {
    this.log.push("history");
    const call = this.find("history", () => true);
    return { status: call.status, body: clone(call.body) as HistoryEntry[] };
  }
}

/** RecordedClient whose query() blocks until the test releases it. */
export class GatedClient extends RecordedClient {
  private gate: Promise<void> = Promise.resolve();
  private open: (() => void) | null = null;

  hold(): void {
    this.gate = new Promise((resolve) => {
      this.open = resolve;
    });
  }

  release(): void {
    this.open?.();
    this.open = null;
  }

  override async query(tableId: string, text: string) {
    await this.gate;
    return super.query(tableId, text);
  }
}

export function mount(): HTMLElement {
  document.body.innerHTML = "";
  const root = document.createElement("div");
  document.body.appendChild(root);
  return root;
}

export function golden(): Answered {
  const fixture = loadFixture();
  const call = fixture.calls.find(
    (c) => c.op === "query" && c.args.text === GOLDEN_QUERY,
  );
  if (!call) {
    throw new Error("golden query fixture missing");
  }
  return clone(call.body) as Answered;
}
