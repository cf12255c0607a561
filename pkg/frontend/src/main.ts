/** Boot the chat view against a configurable service base URL (?api=…). */

import { ChatClient } from "./api.js";
import { ChatApp } from "./app.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? "http://127.0.0.1:8080";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app element");
}

const client = new ChatClient(baseUrl);
const app = new ChatApp(root, client);
void app.start().then(async () => {
  if (client.sessionId) {
    try {
      const meta = await client.meta();
      const opener = `show me the list of ${meta.concept.readableName}`;
      const hint = document.createElement("div");
      hint.className = "chips chat-opener";
      const chip = document.createElement("button");
      chip.type = "button";
      chip.className = "chip";
      chip.textContent = opener;
      chip.addEventListener("click", () => {
        hint.remove();
        void app.sendText(opener);
      });
      hint.append(chip);
      root.querySelector(".chat-thread")?.append(hint);
    } catch {
      // metadata is a convenience; the input box still works without it
    }
  }
});
