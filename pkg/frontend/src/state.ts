/**
 * Session state for the mission designer. One store, serialized
 * updates, at most one compute request in flight. The displayed
 * landscape is always the last successful result; if the rules or
 * parameters changed after that result was requested it stays on
 * screen but is labeled stale.
 */

import type { GridDict, InferenceSettings, PmlDocument } from "./api.js";
import { DEFAULT_TAU } from "./colormap.js";
import { cellLatLon } from "./heatmap.js";
import type { Diagnostic } from "./diagnostics.js";

export interface SelectedCell {
  row: number;
  col: number;
  lat: number;
  lon: number;
  probability: number;
}

export interface SessionState {
  rules: string;
  diagnostics: Diagnostic[];
  queries: string[];
  grid: GridDict;
  params: InferenceSettings;
  tau: number;
  pml: PmlDocument | null;
  pmlStale: boolean;
  computing: boolean;
  offline: boolean;
  lastError: string | null;
  selected: SelectedCell | null;
}

export interface ComputeTicket {
  revision: number;
}

type Listener = (state: SessionState) => void;

export class SessionStore {
  private state: SessionState;
  private listeners: Listener[] = [];
  // bumped on any edit that would invalidate a result
  private revision = 0;
  private inFlight: ComputeTicket | null = null;

  constructor(rules: string, grid: GridDict, params: InferenceSettings = {}) {
    this.state = {
      rules,
      diagnostics: [],
      queries: [],
      grid,
      params,
      tau: DEFAULT_TAU,
      pml: null,
      pmlStale: false,
      computing: false,
      offline: false,
      lastError: null,
      selected: null,
    };
  }

  getState(): SessionState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private commit(patch: Partial<SessionState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  setRules(rules: string): void {
    if (rules === this.state.rules) return;
    this.revision++;
    this.commit({ rules, pmlStale: this.state.pml !== null });
  }

  setParams(params: InferenceSettings): void {
    this.revision++;
    this.commit({ params, pmlStale: this.state.pml !== null });
  }

  setGrid(grid: GridDict): void {
    this.revision++;
    this.commit({ grid, pmlStale: this.state.pml !== null, selected: null });
  }

  /** The threshold is a pure view setting; it never stales a result. */
  setTau(tau: number): void {
    this.commit({ tau: Math.min(1, Math.max(0, tau)) });
  }

  applyParse(diagnostics: Diagnostic[], queries: string[]): void {
    this.commit({ diagnostics, queries, offline: false });
  }

  canCompute(): boolean {
    return (
      this.state.diagnostics.length === 0 &&
      !this.state.computing &&
      this.state.rules.trim().length > 0
    );
  }

  /**
   * Claim the single compute slot. Returns null while another request
   * is in flight; callers wait for it instead of piling on.
   */
  beginCompute(): ComputeTicket | null {
    if (this.inFlight !== null) return null;
    this.inFlight = { revision: this.revision };
    this.commit({ computing: true, lastError: null });
    return this.inFlight;
  }

  completeCompute(ticket: ComputeTicket, pml: PmlDocument): void {
    if (ticket !== this.inFlight) return; // superseded, drop silently
    this.inFlight = null;
    this.commit({
      pml,
      pmlStale: ticket.revision !== this.revision,
      computing: false,
      offline: false,
      selected: null,
    });
  }

  failCompute(ticket: ComputeTicket, message: string, offline = false): void {
    if (ticket !== this.inFlight) return;
    this.inFlight = null;
    // the previous landscape and the rules text survive a failure
    this.commit({ computing: false, offline, lastError: message });
  }

  markOffline(offline: boolean): void {
    this.commit({ offline });
  }

  selectCell(row: number, col: number): void {
    const { pml } = this.state;
    if (pml === null) return;
    const { rows, cols } = pml.grid;
    if (row < 0 || row >= rows || col < 0 || col >= cols) {
      this.commit({ selected: null });
      return;
    }
    const { lat, lon } = cellLatLon(pml.grid, row, col);
    this.commit({
      selected: {
        row,
        col,
        lat,
        lon,
        probability: pml.values[row * cols + col],
      },
    });
  }
}
