/**
 * Typed client for the chat service JSON API.
 *
 * The service is strictly turn-based: one POST per user turn, the reply
 * carries the bot messages, quick-reply button labels, an optional result
 * table and the new conversation state. `fetchImpl` is injectable so tests
 * can capture or fake requests.
 */

export interface TableData {
  headers: string[];
  rows: string[][];
}

export interface TurnResponse {
  messages: string[];
  buttons: string[];
  table: TableData | null;
  state: string;
}

export interface FieldMeta {
  path: string;
  readableName: string;
  synonyms: string[];
  semanticType: string;
  filterable: boolean;
}

export interface BotMeta {
  concept: { name: string; readableName: string; synonyms: string[] };
  fields: FieldMeta[];
  pageSize: number;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ChatClient {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;
  sessionId: string | null = null;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      throw new Error(`${method} ${path} failed: HTTP ${response.status}`);
    }
    return (await response.json()) as T;
  }

  /** Create a server-side session; must run before `send`. */
  async createSession(): Promise<string> {
    const body = await this.request<{ sessionId: string }>("POST", "/api/sessions");
    this.sessionId = body.sessionId;
    return body.sessionId;
  }

  /** Send one user turn and return the bot turn. */
  async send(text: string): Promise<TurnResponse> {
    if (!this.sessionId) {
      throw new Error("no session: call createSession() first");
    }
    return this.request<TurnResponse>(
      "POST",
      `/api/sessions/${encodeURIComponent(this.sessionId)}/messages`,
      { text },
    );
  }

  async meta(): Promise<BotMeta> {
    return this.request<BotMeta>("GET", "/api/bot/meta");
  }
}
