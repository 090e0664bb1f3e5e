/** Wire types: exactly what the session API returns. The client renders
 * these verbatim and adds no rules of its own. */

export type Cell = [number, number];

export interface GridSpec {
  rows: number;
  cols: number;
  init: Cell;
  terminal: Cell[];
  blocked?: Cell[];
}

export interface Provenance {
  history_state: unknown;
  edge: unknown[];
}

export interface SessionPayload {
  id: string;
  status: string; // running | done-success | done-failure | terminated
  grid: GridSpec;
  labels: Record<string, Cell[]>;
  mode: string; // static | reactive | mixed | agent
  system: Cell;
  agent: unknown | null; // cell or park-state name in agent mode
  history_state: unknown;
  trace: Cell[];
  restrictions: string[];
  restriction_provenance: Provenance[];
  available_moves: string[];
  obstacles: unknown[][]; // [from, to] edges currently blocked
  verdicts: { system: boolean; test: boolean };
}

export interface TranscriptStep {
  kind: "create" | "move" | "whatif";
  action?: string;
  payload: SessionPayload;
}

export interface Transcript {
  fixture: string;
  problem: unknown;
  steps: TranscriptStep[];
  final_status: string;
}
