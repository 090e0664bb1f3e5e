/** Pure view-model state machine. Every transition consumes a server
 * payload; nothing here decides legality, computes restrictions, or
 * advances the game. Previews are ghost payloads that never touch the
 * committed one. */

import type { Cell, Provenance, SessionPayload } from "./types.js";

export interface ViewModel {
  committed: SessionPayload;
  preview: SessionPayload | null;
  previewAction: string | null;
}

export function createView(payload: SessionPayload): ViewModel {
  return { committed: payload, preview: null, previewAction: null };
}

/** A committed move: the server payload replaces the committed state and
 * clears any preview. */
export function commitMove(_view: ViewModel, payload: SessionPayload): ViewModel {
  return { committed: payload, preview: null, previewAction: null };
}

/** A what-if preview: shown as a ghost, committed state untouched. */
export function previewMove(
  view: ViewModel,
  action: string,
  payload: SessionPayload,
): ViewModel {
  return { committed: view.committed, preview: payload, previewAction: action };
}

export function clearPreview(view: ViewModel): ViewModel {
  return { committed: view.committed, preview: null, previewAction: null };
}

/** The payload currently on screen (ghost wins while it exists). */
export function shown(view: ViewModel): SessionPayload {
  return view.preview ?? view.committed;
}

export interface MoveControl {
  action: string;
  enabled: boolean;
  provenance: Provenance[];
}

/** One control per action the server mentioned at the current cell;
 * restricted ones carry the server's provenance verbatim. */
export function moveControls(p: SessionPayload): MoveControl[] {
  const controls: MoveControl[] = [];
  for (const action of p.available_moves) {
    controls.push({ action, enabled: p.status === "running", provenance: [] });
  }
  for (const action of p.restrictions) {
    controls.push({
      action,
      enabled: false,
      provenance: p.restriction_provenance,
    });
  }
  controls.sort((a, b) => (a.action < b.action ? -1 : a.action > b.action ? 1 : 0));
  return controls;
}

/** The restriction overlay is exactly the server's restriction list. */
export function restrictionOverlay(p: SessionPayload): string[] {
  return [...p.restrictions];
}

export type CellKind =
  | "source"
  | "target"
  | "labeled"
  | "blocked"
  | "plain";

function sameCell(a: Cell, b: Cell): boolean {
  return a[0] === b[0] && a[1] === b[1];
}

/** Presentation-only classification from the payload's own grid/labels. */
export function cellKind(p: SessionPayload, cell: Cell): CellKind {
  for (const c of p.grid.blocked ?? []) if (sameCell(c, cell)) return "blocked";
  for (const c of p.grid.terminal) if (sameCell(c, cell)) return "target";
  if (sameCell(p.grid.init, cell)) return "source";
  for (const cells of Object.values(p.labels)) {
    for (const c of cells) if (sameCell(c, cell)) return "labeled";
  }
  return "plain";
}

export function cellLabels(p: SessionPayload, cell: Cell): string[] {
  const out: string[] = [];
  for (const [name, cells] of Object.entries(p.labels)) {
    for (const c of cells) if (sameCell(c, cell)) out.push(name);
  }
  out.sort();
  return out;
}

/** Obstacle target cells (edges the server reports as blocked right now). */
export function obstacleCells(p: SessionPayload): Cell[] {
  const out: Cell[] = [];
  for (const edge of p.obstacles) {
    const to = edge[1];
    if (Array.isArray(to) && to.length === 2 && typeof to[0] === "number") {
      out.push([to[0] as number, to[1] as number]);
    }
  }
  return out;
}

export function agentCell(p: SessionPayload): Cell | null {
  const a = p.agent;
  if (Array.isArray(a) && a.length === 2 && typeof a[0] === "number") {
    return [a[0] as number, a[1] as number];
  }
  return null; // parked outside the arena or not an agent session
}

export interface Banner {
  tone: "success" | "failure" | "info";
  text: string;
}

export function banner(p: SessionPayload): Banner | null {
  if (p.status === "done-success") {
    return { tone: "success", text: verdictText(p) };
  }
  if (p.status === "done-failure") {
    return { tone: "failure", text: verdictText(p) };
  }
  if (p.status === "terminated") {
    return { tone: "info", text: "session terminated" };
  }
  return null;
}

function verdictText(p: SessionPayload): string {
  const mark = (ok: boolean) => (ok ? "✓" : "✗");
  return `system ${mark(p.verdicts.system)} test ${mark(p.verdicts.test)}`;
}

export function historyBadge(p: SessionPayload): string {
  return JSON.stringify(p.history_state);
}

export function breadcrumb(p: SessionPayload): string {
  return p.trace.map((c) => `(${c[0]},${c[1]})`).join(" → ");
}
