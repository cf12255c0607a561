import { describe, expect, it } from "vitest";

import { ChatClient, FetchLike, TurnResponse } from "../src/api.js";

interface Captured {
  url: string;
  method: string;
  body: string | null;
}

function fakeFetch(replies: Array<{ status?: number; body: unknown }>) {
  const captured: Captured[] = [];
  const fetchImpl: FetchLike = async (url, init) => {
    captured.push({
      url,
      method: init?.method ?? "GET",
      body: typeof init?.body === "string" ? init.body : null,
    });
    const reply = replies[Math.min(captured.length - 1, replies.length - 1)];
    return new Response(JSON.stringify(reply.body), {
      status: reply.status ?? 200,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { captured, fetchImpl };
}

const emptyTurn: TurnResponse = { messages: ["hi"], buttons: [], table: null, state: "Idle" };

describe("ChatClient", () => {
  it("creates a session and remembers its id", async () => {
    const { captured, fetchImpl } = fakeFetch([{ body: { sessionId: "abc123" } }]);
    const client = new ChatClient("http://svc:8080/", fetchImpl);
    const id = await client.createSession();
    expect(id).toBe("abc123");
    expect(client.sessionId).toBe("abc123");
    expect(captured[0]).toMatchObject({
      url: "http://svc:8080/api/sessions",
      method: "POST",
    });
  });

  it("posts turns to the session messages endpoint", async () => {
    const { captured, fetchImpl } = fakeFetch([
      { body: { sessionId: "abc123" } },
      { body: emptyTurn },
    ]);
    const client = new ChatClient("http://svc:8080", fetchImpl);
    await client.createSession();
    const turn = await client.send("show me the list of air quality data");
    expect(turn.messages).toEqual(["hi"]);
    expect(captured[1].url).toBe("http://svc:8080/api/sessions/abc123/messages");
    expect(captured[1].body).toBe(JSON.stringify({ text: "show me the list of air quality data" }));
  });

  it("refuses to send without a session", async () => {
    const { fetchImpl } = fakeFetch([{ body: emptyTurn }]);
    const client = new ChatClient("http://svc:8080", fetchImpl);
    await expect(client.send("hello")).rejects.toThrow(/no session/);
  });

  it("surfaces HTTP errors", async () => {
    const { fetchImpl } = fakeFetch([
      { body: { sessionId: "abc123" } },
      { status: 404, body: { error: "unknown session" } },
    ]);
    const client = new ChatClient("http://svc:8080", fetchImpl);
    await client.createSession();
    await expect(client.send("hello")).rejects.toThrow(/HTTP 404/);
  });

  it("fetches bot metadata", async () => {
    const meta = {
      concept: { name: "AirQualityData", readableName: "air quality data", synonyms: [] },
      fields: [],
      pageSize: 10,
    };
    const { captured, fetchImpl } = fakeFetch([{ body: meta }]);
    const client = new ChatClient("http://svc:8080", fetchImpl);
    expect(await client.meta()).toEqual(meta);
    expect(captured[0]).toMatchObject({ url: "http://svc:8080/api/bot/meta", method: "GET" });
  });
});
