/** Entry screen (fixture picker) and live session wiring. Optimistic UI is
 * off: every render follows a server response; one session per tab. */

import { ApiError, Client } from "./client.js";
import {
  clearPreview,
  commitMove,
  createView,
  previewMove,
  ViewModel,
} from "./model.js";
import { render } from "./render.js";

function apiBase(): string {
  const meta = document.querySelector('meta[name="api-base"]');
  return meta?.getAttribute("content") ?? "";
}

async function pickFixture(client: Client, root: HTMLElement): Promise<unknown> {
  const { fixtures } = await client.listFixtures();
  return new Promise((resolve) => {
    const doc = root.ownerDocument;
    const panel = doc.createElement("div");
    panel.className = "picker";
    const title = doc.createElement("h2");
    title.textContent = "Pick a shipped problem";
    panel.appendChild(title);
    for (const name of fixtures) {
      const btn = doc.createElement("button");
      btn.textContent = name;
      btn.addEventListener("click", async () => {
        resolve(await client.fixture(name));
      });
      panel.appendChild(btn);
    }
    root.replaceChildren(panel);
  });
}

function wire(client: Client, root: HTMLElement, sid: string, view: ViewModel): void {
  render(view, root);
  root.querySelectorAll("button[data-action]").forEach((el) => {
    const btn = el as HTMLButtonElement;
    const action = btn.dataset.action!;
    btn.addEventListener("click", async (ev) => {
      const mouse = ev as MouseEvent;
      try {
        if (mouse.shiftKey) {
          // shift-click previews the move without committing it
          const ghost = await client.whatif(sid, action);
          wire(client, root, sid, previewMove(view, action, ghost));
        } else {
          const committed = await client.move(sid, action);
          wire(client, root, sid, commitMove(view, committed));
        }
      } catch (err) {
        if (err instanceof ApiError) {
          const note = root.ownerDocument.createElement("div");
          note.className = "inline-rejection";
          note.textContent = JSON.stringify(err.detail);
          root.appendChild(note);
        } else {
          throw err;
        }
      }
    });
  });
  if (view.preview) {
    const back = root.ownerDocument.createElement("button");
    back.textContent = "dismiss preview";
    back.addEventListener("click", () => wire(client, root, sid, clearPreview(view)));
    root.appendChild(back);
  }
}

export async function start(root: HTMLElement): Promise<void> {
  const client = new Client(apiBase());
  const problem = await pickFixture(client, root);
  const payload = await client.createSession(problem);
  const view = createView(payload);
  wire(client, root, payload.id, view);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void start(document.getElementById("app")!);
}
