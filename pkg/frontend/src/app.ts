/**
 * DOM wiring for the mission designer page. All logic worth testing
 * lives in the imported modules; this file only moves data between
 * them and the page.
 */

import { PmlClient, type PmlDocument } from "./api.js";
import { describe, fromParseResponse, offsetOf } from "./diagnostics.js";
import { renderLandscape, visibleAreaSquareMeters } from "./heatmap.js";
import { SessionStore } from "./state.js";

const PARSE_DEBOUNCE_MS = 300;
const POLL_INTERVAL_MS = 500;
const CELL_PIXELS = 12;

const STARTER_RULES = `registered.
weight ~ normal(2.0, 0.1).

vlos(R, C) :- distance(R, C, operator) < 500.
open(R, C) :- registered, vlos(R, C), weight < 25.

permit(R, C) :-
    over(R, C, park);
    distance(R, C, primary) < 15.

landscape(R, C) :- permit(R, C), open(R, C).

query(landscape(R, C)).
`;

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

const client = new PmlClient();
const store = new SessionStore(
  STARTER_RULES,
  {
    origin_lat: 49.0,
    origin_lon: 8.0,
    width_m: 160.0,
    height_m: 160.0,
    rows: 30,
    cols: 30,
  },
  { n_ensemble: 20, n_inf: 400, seed: 7 },
);

const rulesBox = byId<HTMLTextAreaElement>("rules");
const diagnosticsBox = byId<HTMLDivElement>("diagnostics");
const computeButton = byId<HTMLButtonElement>("compute");
const tauSlider = byId<HTMLInputElement>("tau");
const tauShow = byId<HTMLSpanElement>("tau-show");
const statusLine = byId<HTMLSpanElement>("status");
const banner = byId<HTMLDivElement>("banner");
const canvas = byId<HTMLCanvasElement>("heatmap");
const inspector = byId<HTMLDivElement>("inspector");

rulesBox.value = store.getState().rules;
tauSlider.value = String(store.getState().tau);

let parseTimer: ReturnType<typeof setTimeout> | undefined;
rulesBox.addEventListener("input", () => {
  store.setRules(rulesBox.value);
  clearTimeout(parseTimer);
  parseTimer = setTimeout(runParse, PARSE_DEBOUNCE_MS);
});

async function runParse(): Promise<void> {
  const rules = store.getState().rules;
  try {
    const response = await client.parse(rules);
    const diagnostics = fromParseResponse(response);
    store.applyParse(diagnostics, response.ok ? response.queries : []);
    if (diagnostics.length > 0) {
      // put the cursor on the problem so the operator can see it
      const offset = offsetOf(rules, diagnostics[0].line, diagnostics[0].column);
      rulesBox.setSelectionRange(offset, offset);
    }
  } catch {
    store.markOffline(true);
  }
}

tauSlider.addEventListener("input", () => {
  store.setTau(Number(tauSlider.value));
});

computeButton.addEventListener("click", () => {
  void runCompute();
});

async function runCompute(): Promise<void> {
  if (!store.canCompute()) return;
  const ticket = store.beginCompute();
  if (ticket === null) return;
  const { rules, grid, params } = store.getState();
  try {
    const outcome = await client.computePml({ map_ref: "park", grid, params, rules });
    if (outcome.kind === "done") {
      store.completeCompute(ticket, outcome.pml);
      return;
    }
    const pml = await waitForJob(outcome.job);
    store.completeCompute(ticket, pml);
  } catch (error) {
    const offline = error instanceof TypeError; // fetch network failure
    store.failCompute(ticket, error instanceof Error ? error.message : String(error), offline);
  }
}

async function waitForJob(job: string): Promise<PmlDocument> {
  for (;;) {
    const snapshot = await client.poll(job);
    if (snapshot.status === "done") return snapshot.result;
    if (snapshot.status === "failed") throw new Error(snapshot.error);
    if (snapshot.status === "cancelled") throw new Error("job cancelled");
    await new Promise((resolve) => setTimeout(resolve, POLL_INTERVAL_MS));
  }
}

canvas.addEventListener("click", (event) => {
  const state = store.getState();
  if (!state.pml) return;
  const rect = canvas.getBoundingClientRect();
  const col = Math.floor((event.clientX - rect.left) / CELL_PIXELS);
  const row = Math.floor((event.clientY - rect.top) / CELL_PIXELS);
  store.selectCell(row, col);
});

function render(): void {
  const state = store.getState();

  computeButton.disabled = !store.canCompute();
  tauShow.textContent = state.tau.toFixed(2);

  banner.hidden = !state.offline && state.lastError === null;
  banner.textContent = state.offline
    ? "server unreachable; edits are kept locally"
    : state.lastError ?? "";

  if (state.diagnostics.length === 0) {
    diagnosticsBox.textContent = state.queries.length
      ? `ok; queries: ${state.queries.join(", ")}`
      : "";
    diagnosticsBox.classList.remove("has-errors");
  } else {
    diagnosticsBox.textContent = state.diagnostics.map(describe).join("\n");
    diagnosticsBox.classList.add("has-errors");
  }

  if (state.computing) {
    statusLine.textContent = "computing...";
  } else if (state.pml) {
    const area = visibleAreaSquareMeters(state.pml, state.tau);
    const label = state.pmlStale ? " (stale: inputs changed)" : "";
    statusLine.textContent =
      `visible area ${Math.round(area)} m^2 at tau=${state.tau.toFixed(2)}${label}`;
  } else {
    statusLine.textContent = "no landscape yet";
  }

  if (state.pml) {
    const image = renderLandscape(state.pml, state.tau, CELL_PIXELS);
    canvas.width = image.width;
    canvas.height = image.height;
    const context = canvas.getContext("2d");
    if (context) {
      context.clearRect(0, 0, image.width, image.height);
      context.putImageData(
        new ImageData(image.pixels, image.width, image.height), 0, 0,
      );
    }
  }

  inspector.textContent = state.selected
    ? `cell (${state.selected.row}, ${state.selected.col})  ` +
      `${state.selected.lat.toFixed(6)}, ${state.selected.lon.toFixed(6)}  ` +
      `p=${state.selected.probability.toFixed(4)}`
    : "";
}

store.subscribe(render);
render();
void runParse();
void client.health().then((ok) => store.markOffline(!ok)).catch(() => store.markOffline(true));
