/**
 * Plain-DOM chat view.
 *
 * One conversation per instance. The server owns all dialogue state; the
 * only client state is the session id and the rendered transcript. Quick
 * replies are rendered as chips on the bot turn that offered them;
 * clicking a chip goes through exactly the same path as typing its label,
 * so the HTTP payloads are identical by construction.
 */

import { ChatClient, TableData, TurnResponse } from "./api.js";

export class ChatApp {
  private readonly client: ChatClient;
  private readonly thread: HTMLElement;
  private readonly form: HTMLFormElement;
  private readonly input: HTMLInputElement;
  private readonly sendButton: HTMLButtonElement;
  private readonly banner: HTMLElement;
  private inflight = false;

  constructor(root: HTMLElement, client: ChatClient, title = "Open Data chat") {
    this.client = client;
    root.innerHTML = "";
    root.classList.add("chat-app");

    const header = el("header", "chat-header");
    header.textContent = title;
    this.banner = el("div", "chat-banner");
    this.banner.hidden = true;
    this.thread = el("div", "chat-thread");

    this.form = el("form", "chat-composer") as HTMLFormElement;
    this.input = el("input", "chat-input") as HTMLInputElement;
    this.input.type = "text";
    this.input.placeholder = "Type a message…";
    this.input.setAttribute("aria-label", "Message");
    this.sendButton = el("button", "chat-send") as HTMLButtonElement;
    this.sendButton.type = "submit";
    this.sendButton.textContent = "Send";
    this.form.append(this.input, this.sendButton);
    this.form.addEventListener("submit", (event) => {
      event.preventDefault();
      const text = this.input.value.trim();
      if (text) {
        this.input.value = "";
        void this.sendText(text);
      }
    });

    root.append(header, this.banner, this.thread, this.form);
  }

  get busy(): boolean {
    return this.inflight;
  }

  /** Create the server session; shows a retry banner on failure. */
  async start(): Promise<void> {
    this.banner.hidden = true;
    try {
      await this.client.createSession();
    } catch (error) {
      this.showBanner(`Could not reach the chat service (${describe(error)}).`, () => {
        void this.start();
      });
    }
  }

  /** Send one user turn; chips call this with their label. */
  async sendText(text: string): Promise<void> {
    if (this.inflight) {
      return;
    }
    this.setBusy(true);
    this.appendUserTurn(text);
    try {
      const turn = await this.client.send(text);
      this.appendBotTurn(turn);
    } catch (error) {
      this.appendErrorTurn(text, describe(error));
    } finally {
      this.setBusy(false);
    }
  }

  private setBusy(busy: boolean): void {
    this.inflight = busy;
    this.input.disabled = busy;
    this.sendButton.disabled = busy;
  }

  private appendUserTurn(text: string): void {
    const turn = el("div", "turn user");
    const bubble = el("div", "bubble");
    bubble.textContent = text;
    turn.append(bubble);
    this.appendTurn(turn);
  }

  private appendBotTurn(response: TurnResponse): void {
    const turn = el("div", "turn bot");
    turn.dataset.state = response.state;
    for (const message of response.messages) {
      const bubble = el("div", "bubble");
      bubble.textContent = message;
      turn.append(bubble);
    }
    if (response.table) {
      turn.append(renderTable(response.table));
    }
    if (response.buttons.length > 0) {
      turn.append(this.renderChips(response.buttons));
    }
    this.appendTurn(turn);
  }

  private appendErrorTurn(text: string, reason: string): void {
    const turn = el("div", "turn bot error");
    const bubble = el("div", "bubble");
    bubble.textContent = `Message failed (${reason}).`;
    const retry = el("button", "retry") as HTMLButtonElement;
    retry.type = "button";
    retry.textContent = "Retry";
    retry.addEventListener("click", () => {
      turn.remove();
      void this.sendText(text);
    });
    turn.append(bubble, retry);
    this.appendTurn(turn);
  }

  private renderChips(labels: string[]): HTMLElement {
    const chips = el("div", "chips");
    for (const label of labels) {
      const chip = el("button", "chip") as HTMLButtonElement;
      chip.type = "button";
      chip.textContent = label;
      chip.addEventListener("click", () => {
        void this.sendText(label);
      });
      chips.append(chip);
    }
    return chips;
  }

  private appendTurn(turn: HTMLElement): void {
    this.thread.append(turn);
    this.thread.scrollTop = this.thread.scrollHeight;
  }

  private showBanner(message: string, onRetry: () => void): void {
    this.banner.hidden = false;
    this.banner.innerHTML = "";
    const text = el("span", "banner-text");
    text.textContent = message;
    const retry = el("button", "retry") as HTMLButtonElement;
    retry.type = "button";
    retry.textContent = "Retry";
    retry.addEventListener("click", onRetry);
    this.banner.append(text, retry);
  }
}

export function renderTable(table: TableData): HTMLTableElement {
  const grid = document.createElement("table");
  grid.className = "grid";
  const head = grid.createTHead().insertRow();
  for (const header of table.headers) {
    const cell = document.createElement("th");
    cell.textContent = header;
    head.append(cell);
  }
  const body = grid.createTBody();
  for (const row of table.rows) {
    const tr = body.insertRow();
    for (const value of row) {
      tr.insertCell().textContent = value;
    }
  }
  return grid;
}

function el(tag: string, className: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  return node;
}

function describe(error: unknown): string {
  return error instanceof Error ? error.message : String(error);
}
