/** DOM rendering of the view model. Renders exactly the payload; a
 * malformed payload raises before any partial mutation reaches the page. */

import {
  agentCell,
  banner,
  breadcrumb,
  cellKind,
  cellLabels,
  historyBadge,
  moveControls,
  obstacleCells,
  shown,
  ViewModel,
} from "./model.js";
import type { Cell, SessionPayload } from "./types.js";

function assertPayload(p: SessionPayload): void {
  if (
    !p ||
    typeof p.status !== "string" ||
    !p.grid ||
    typeof p.grid.rows !== "number" ||
    typeof p.grid.cols !== "number" ||
    !Array.isArray(p.system) ||
    !Array.isArray(p.trace) ||
    !Array.isArray(p.restrictions) ||
    !p.verdicts
  ) {
    throw new Error("malformed session payload");
  }
}

function sameCell(a: Cell, b: Cell): boolean {
  return a[0] === b[0] && a[1] === b[1];
}

export function render(view: ViewModel, root: HTMLElement): void {
  const p = shown(view);
  try {
    assertPayload(p);
  } catch (err) {
    const panel = root.ownerDocument.createElement("div");
    panel.className = "error-panel";
    panel.textContent = String(err);
    root.replaceChildren(panel);
    return;
  }
  const doc = root.ownerDocument;
  const wrap = doc.createElement("div");
  wrap.className = view.preview ? "session ghost" : "session";

  const table = doc.createElement("table");
  table.className = "grid";
  const obstacles = obstacleCells(p);
  const agent = agentCell(p);
  for (let r = 0; r < p.grid.rows; r++) {
    const row = doc.createElement("tr");
    for (let c = 0; c < p.grid.cols; c++) {
      const cell: Cell = [r, c];
      const td = doc.createElement("td");
      td.className = `cell kind-${cellKind(p, cell)}`;
      td.dataset.row = String(r);
      td.dataset.col = String(c);
      const labels = cellLabels(p, cell);
      if (labels.length) {
        td.dataset.labels = labels.join(",");
      }
      if (obstacles.some((o) => sameCell(o, cell))) {
        td.classList.add("obstacle");
      }
      if (sameCell(p.system, cell)) {
        td.classList.add("system");
        td.textContent = "R";
      }
      if (agent && sameCell(agent, cell)) {
        td.classList.add("agent");
        td.textContent = (td.textContent ?? "") + "A";
      }
      row.appendChild(td);
    }
    table.appendChild(row);
  }
  wrap.appendChild(table);

  const badge = doc.createElement("div");
  badge.className = "history-badge";
  badge.textContent = historyBadge(p);
  wrap.appendChild(badge);

  const crumbs = doc.createElement("div");
  crumbs.className = "breadcrumb";
  crumbs.textContent = breadcrumb(p);
  wrap.appendChild(crumbs);

  const controls = doc.createElement("div");
  controls.className = "controls";
  for (const ctl of moveControls(p)) {
    const btn = doc.createElement("button");
    btn.textContent = ctl.action;
    btn.dataset.action = ctl.action;
    btn.disabled = !ctl.enabled;
    if (ctl.provenance.length || shownRestricted(p.restrictions, ctl.action)) {
      btn.classList.add("restricted");
    }
    if (!ctl.enabled && ctl.provenance.length) {
      btn.title = ctl.provenance
        .map((pr) => `restricted at ${JSON.stringify(pr.history_state)}` +
          ` by cut ${JSON.stringify(pr.edge)}`)
        .join("; ");
    }
    controls.appendChild(btn);
  }
  wrap.appendChild(controls);

  const b = banner(p);
  if (b) {
    const div = doc.createElement("div");
    div.className = `banner ${b.tone}`;
    div.textContent = b.text;
    wrap.appendChild(div);
  }
  root.replaceChildren(wrap);
}

function shownRestricted(restrictions: string[], action: string): boolean {
  return restrictions.includes(action);
}

/** Restricted actions as the DOM shows them, for tests. */
export function restrictedActions(root: HTMLElement): string[] {
  const out: string[] = [];
  root.querySelectorAll("button.restricted").forEach((b) => {
    const a = (b as HTMLButtonElement).dataset.action;
    if (a) out.push(a);
  });
  return out.sort();
}
