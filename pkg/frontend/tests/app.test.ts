// @vitest-environment jsdom
import { beforeEach, describe, expect, it } from "vitest";

import { ChatClient, FetchLike, TurnResponse } from "../src/api.js";
import { ChatApp } from "../src/app.js";

interface Captured {
  url: string;
  body: string | null;
}

function scriptedService(turns: TurnResponse[]) {
  const captured: Captured[] = [];
  let turnIndex = 0;
  const fetchImpl: FetchLike = async (url, init) => {
    captured.push({ url, body: typeof init?.body === "string" ? init.body : null });
    if (url.endsWith("/api/sessions")) {
      return json({ sessionId: "s1" });
    }
    const turn = turns[Math.min(turnIndex, turns.length - 1)];
    turnIndex += 1;
    return json(turn);
  };
  return { captured, fetchImpl };
}

function json(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function turn(partial: Partial<TurnResponse>): TurnResponse {
  return { messages: [], buttons: [], table: null, state: "Idle", ...partial };
}

async function settle(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 0));
}

describe("ChatApp", () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = '<div id="app"></div>';
    root = document.getElementById("app")!;
  });

  it("chip click and typed text produce identical request payloads", async () => {
    const { captured, fetchImpl } = scriptedService([
      turn({ messages: ["pick a filter"], buttons: ["date"], state: "AwaitingFilterField" }),
      turn({ messages: ["how should date compare?"], state: "AwaitingOperator" }),
      turn({ messages: ["pick a filter"], buttons: ["date"], state: "AwaitingFilterField" }),
      turn({ messages: ["how should date compare?"], state: "AwaitingOperator" }),
    ]);
    const app = new ChatApp(root, new ChatClient("http://svc", fetchImpl));
    await app.start();

    await app.sendText("show me the list of air quality data");
    const chip = root.querySelector<HTMLButtonElement>(".chip")!;
    expect(chip.textContent).toBe("date");
    chip.click();
    await settle();
    const chipPayload = captured[captured.length - 1].body;

    await app.sendText("date");
    const typedPayload = captured[captured.length - 1].body;

    expect(chipPayload).toBe(JSON.stringify({ text: "date" }));
    expect(typedPayload).toBe(chipPayload);
  });

  it("renders turns in order: user then bot", async () => {
    const { fetchImpl } = scriptedService([
      turn({ messages: ["first reply", "second line"], state: "AwaitingFilterField" }),
    ]);
    const app = new ChatApp(root, new ChatClient("http://svc", fetchImpl));
    await app.start();
    await app.sendText("hello there");

    const turns = [...root.querySelectorAll(".turn")];
    expect(turns.map((t) => t.className)).toEqual(["turn user", "turn bot"]);
    const bubbles = [...root.querySelectorAll(".bubble")].map((b) => b.textContent);
    expect(bubbles).toEqual(["hello there", "first reply", "second line"]);
  });

  it("renders tables as grids with headers", async () => {
    const { fetchImpl } = scriptedService([
      turn({
        messages: ["Here are 2 result(s)."],
        table: { headers: ["municipality", "magnitude"], rows: [["Barcelona", "42"], ["Girona", "14"]] },
        state: "ShowingResults",
      }),
    ]);
    const app = new ChatApp(root, new ChatClient("http://svc", fetchImpl));
    await app.start();
    await app.sendText("I don't want to add fields");

    const headers = [...root.querySelectorAll(".grid th")].map((c) => c.textContent);
    expect(headers).toEqual(["municipality", "magnitude"]);
    const cells = [...root.querySelectorAll(".grid td")].map((c) => c.textContent);
    expect(cells).toEqual(["Barcelona", "42", "Girona", "14"]);
  });

  it("disables the input while a turn is in flight", async () => {
    let release!: () => void;
    const gate = new Promise<void>((resolve) => (release = resolve));
    const fetchImpl: FetchLike = async (url) => {
      if (url.endsWith("/api/sessions")) {
        return json({ sessionId: "s1" });
      }
      await gate;
      return json(turn({ messages: ["done"] }));
    };
    const app = new ChatApp(root, new ChatClient("http://svc", fetchImpl));
    await app.start();

    const pending = app.sendText("slow question");
    await settle();
    expect(app.busy).toBe(true);
    expect(root.querySelector<HTMLInputElement>(".chat-input")!.disabled).toBe(true);
    release();
    await pending;
    expect(app.busy).toBe(false);
    expect(root.querySelector<HTMLInputElement>(".chat-input")!.disabled).toBe(false);
  });

  it("offers an inline retry on a failed turn", async () => {
    let failNext = true;
    const fetchImpl: FetchLike = async (url) => {
      if (url.endsWith("/api/sessions")) {
        return json({ sessionId: "s1" });
      }
      if (failNext) {
        failNext = false;
        return json({ error: "boom" }, 500);
      }
      return json(turn({ messages: ["recovered"] }));
    };
    const app = new ChatApp(root, new ChatClient("http://svc", fetchImpl));
    await app.start();
    await app.sendText("fragile");

    const retry = root.querySelector<HTMLButtonElement>(".turn.error .retry")!;
    expect(retry).toBeTruthy();
    retry.click();
    await settle();
    await settle();
    const bubbles = [...root.querySelectorAll(".bubble")].map((b) => b.textContent);
    expect(bubbles).toContain("recovered");
    expect(root.querySelector(".turn.error")).toBeNull();
  });

  it("shows a retry banner when the service is unreachable", async () => {
    const fetchImpl: FetchLike = async () => {
      throw new Error("connection refused");
    };
    const app = new ChatApp(root, new ChatClient("http://svc", fetchImpl));
    await app.start();
    const banner = root.querySelector<HTMLElement>(".chat-banner")!;
    expect(banner.hidden).toBe(false);
    expect(banner.textContent).toContain("Could not reach the chat service");
    expect(banner.querySelector(".retry")).toBeTruthy();
  });
});
