import { ApiError, Client } from "./api.js";
import {
  PreviewGate,
  foldTimeline,
  planTrajectories,
  positionsOf,
  requestedCost,
} from "./core.js";
import { FieldRenderer, animateMoves } from "./render.js";
import type { Knobs, LogEvent, PreviewDoc, StateSnapshot } from "./types.js";

const $ = (id: string) => document.getElementById(id)!;

const apiBase = new URLSearchParams(location.search).get("api") ?? "";
const client = new Client(apiBase);

let state: StateSnapshot | null = null;
let events: LogEvent[] = [];
let animating = false;
let refreshTimer: ReturnType<typeof setTimeout> | null = null;
let renderer: FieldRenderer;

const knobs: Knobs = { L: 10, gamma: 1.0 };
let lastPreview: PreviewDoc | null = null;

const gate = new PreviewGate(
  (k) => client.preview(state!.session_id, k),
  (p) => showPreview(p),
  150,
  (err) => {
    if (err instanceof ApiError && err.status === 409) return; // decision already taken
    console.error("preview failed", err);
  },
);

function fmt(x: number | null | undefined, digits = 4): string {
  return x === null || x === undefined ? "-" : x.toFixed(digits);
}

function drawField(): void {
  if (!state) return;
  const pending = state.pending_failure;
  renderer.draw(markPending(state), {
    pending: pending ? pending.position : null,
    L: knobs.L,
  });
}

// The snapshot keeps the pending robot deployed until commit; paint it black
// already so the operator sees which marker the decision is about.
function markPending(s: StateSnapshot): StateSnapshot {
  if (!s.pending_failure) return s;
  const rid = s.pending_failure.robot_id;
  return {
    ...s,
    robots: s.robots.map((r) => (r.spec.id === rid ? { ...r, failed: true } : r)),
  };
}

function renderStatus(): void {
  if (!state) return;
  $("session-id").textContent = state.session_id;
  $("lifecycle").textContent = state.lifecycle;
  $("clock").textContent = `${fmt(state.clock, 1)} / ${fmt(state.horizon, 0)}`;
  $("coverage").textContent = fmt(state.coverage, 5);
  const active = state.robots.filter((r) => r.active).length;
  $("robots").textContent = `${active} active, ${state.failed_ids.length} failed, ${state.spare_ids.length} spare`;
  ($("inject") as HTMLButtonElement).disabled = state.lifecycle !== "running";
}

function renderTimeline(): void {
  const list = $("timeline");
  list.innerHTML = "";
  const rows = foldTimeline(events);
  for (const row of rows.slice().reverse()) {
    const li = document.createElement("li");
    const choice =
      row.L === null ? "awaiting decision" : `L=${row.L} γ=${row.gamma}`;
    const ratio = row.ratio === null ? "" : ` ratio ${fmt(row.ratio, 3)}`;
    const req = row.ratio === null ? "" : `, ${row.requested} requested`;
    li.textContent = `t=${fmt(row.t, 1)} robot ${row.robotId}: ${choice}${ratio}${req}`;
    list.appendChild(li);
  }
  $("timeline-empty").style.display = rows.length ? "none" : "block";
}

function showPreview(p: PreviewDoc): void {
  lastPreview = p;
  $("ratio").textContent = fmt(p.ratio_after_local);
  const n = p.robots_requested_count;
  $("requested").textContent = `${n} robot${n === 1 ? "" : "s"} requested`;
  const cost = state ? requestedCost(p.requested_ids, state.robots) : 0;
  $("cost").textContent =
    `${p.estimated_eval_count} gain evaluations` +
    (n > 0 ? `, deploy cost ${fmt(cost, 1)}` : "");
  $("augment").textContent =
    p.ratio_after_augment === null
      ? ""
      : `after adding robots: ${fmt(p.ratio_after_augment)}`;
  $("satisfied").textContent = p.satisfied ? "target met" : "below target";
  $("satisfied").className = p.satisfied ? "ok" : "warn";
  ($("commit") as HTMLButtonElement).disabled = false;
}

function openModal(): void {
  if (!state?.pending_failure) return;
  const p = state.pending_failure;
  $("modal-title").textContent = `Robot ${p.robot_id} failed at t=${fmt(p.t, 1)}`;
  ($("L-slider") as HTMLInputElement).value = String(knobs.L);
  $("L-value").textContent = String(knobs.L);
  ($("gamma-input") as HTMLInputElement).value = String(knobs.gamma);
  $("ratio").textContent = "-";
  $("requested").textContent = "-";
  $("cost").textContent = "-";
  $("augment").textContent = "";
  $("satisfied").textContent = "";
  ($("commit") as HTMLButtonElement).disabled = true;
  $("modal").style.display = "flex";
  gate.request({ ...knobs });
}

function closeModal(): void {
  $("modal").style.display = "none";
}

function scheduleRefresh(): void {
  if (refreshTimer !== null || animating) return;
  refreshTimer = setTimeout(() => {
    refreshTimer = null;
    void refresh();
  }, 120);
}

async function refresh(): Promise<void> {
  if (!state) return;
  state = await client.state(state.session_id);
  renderStatus();
  drawField();
  if (state.lifecycle === "awaiting_operator" && $("modal").style.display === "none") {
    openModal();
  }
}

async function inject(): Promise<void> {
  if (!state) return;
  try {
    await client.injectFailure(state.session_id);
  } catch (err) {
    if (!(err instanceof ApiError && err.status === 409)) throw err;
  }
  await refresh();
}

async function commit(): Promise<void> {
  if (!state) return;
  const before = positionsOf(state.robots);
  ($("commit") as HTMLButtonElement).disabled = true;
  const result = await client.commit(state.session_id, { ...knobs });
  closeModal();
  const fresh = await client.state(state.session_id);
  const moves = planTrajectories(before, positionsOf(fresh.robots));
  state = fresh;
  renderStatus();
  $("last-commit").textContent =
    `committed L=${knobs.L} γ=${knobs.gamma}: ratio ${fmt(result.ratio_achieved, 4)}, ` +
    `${result.requested_robots.ids.length} robots granted`;
  animating = true;
  animateMoves(moves, 900, (positions, done) => {
    renderer.draw(markPending(state!), { animated: positions });
    if (done) {
      animating = false;
      drawField();
      scheduleRefresh();
    }
  });
}

function setL(value: number): void {
  knobs.L = value;
  ($("L-slider") as HTMLInputElement).value = String(value);
  $("L-value").textContent = String(value);
  drawField();
  gate.request({ ...knobs });
}

function wireControls(): void {
  $("inject").addEventListener("click", () => void inject());
  $("commit").addEventListener("click", () => void commit());
  $("new-session").addEventListener("click", () => {
    location.hash = "";
    location.reload();
  });
  const slider = $("L-slider") as HTMLInputElement;
  slider.addEventListener("input", () => setL(Number(slider.value)));
  const gamma = $("gamma-input") as HTMLInputElement;
  gamma.addEventListener("input", () => {
    const v = Math.min(1, Math.max(0, Number(gamma.value) || 0));
    knobs.gamma = v;
    gate.request({ ...knobs });
  });
  for (const btn of document.querySelectorAll<HTMLButtonElement>(".preset")) {
    btn.addEventListener("click", () => setL(Number(btn.dataset.l)));
  }
}

async function boot(): Promise<void> {
  renderer = new FieldRenderer($("field") as HTMLCanvasElement);
  wireControls();
  const sid = location.hash.slice(1);
  if (sid) {
    try {
      state = await client.state(sid);
    } catch {
      state = null; // stale hash, start over
    }
  }
  if (!state) {
    const created = await client.createSession();
    state = await client.state(created.session_id);
    location.hash = state.session_id;
  }
  const slider = $("L-slider") as HTMLInputElement;
  const g = state.grid;
  slider.max = String(Math.max(g.nx, g.ny) * g.cell_size);
  renderStatus();
  drawField();
  renderTimeline();
  // One live stream: the service resends the whole log first, so a reloaded
  // page rebuilds its timeline from the same subscription.
  client.streamEvents(state.session_id, (ev) => {
    events.push(ev);
    renderTimeline();
    if (ev.event !== "PoolGenerated") scheduleRefresh();
  });
  if (state.lifecycle === "awaiting_operator") openModal();
}

void boot();
