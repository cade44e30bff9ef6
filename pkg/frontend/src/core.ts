import type { Knobs, LogEvent, PreviewDoc, RobotRow } from "./types.js";

// Color ramp for the coverage heatmap, dark water to hot yellow.
const STOPS: [number, [number, number, number]][] = [
  [0.0, [10, 18, 46]],
  [0.35, [26, 86, 128]],
  [0.7, [48, 162, 112]],
  [1.0, [250, 220, 64]],
];

export function heatRGB(v: number): [number, number, number] {
  const x = Math.min(1, Math.max(0, v));
  for (let i = 1; i < STOPS.length; i++) {
    const [t1, c1] = STOPS[i];
    if (x <= t1) {
      const [t0, c0] = STOPS[i - 1];
      const u = t1 === t0 ? 0 : (x - t0) / (t1 - t0);
      return [
        Math.round(c0[0] + (c1[0] - c0[0]) * u),
        Math.round(c0[1] + (c1[1] - c0[1]) * u),
        Math.round(c0[2] + (c1[2] - c0[2]) * u),
      ];
    }
  }
  return STOPS[STOPS.length - 1][1];
}

export function heatColor(v: number): string {
  const [r, g, b] = heatRGB(v);
  return `rgb(${r},${g},${b})`;
}

export interface NeighborhoodRect {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

// Square of half-side L around the failure point, clipped to the domain.
export function neighborhoodRect(
  center: [number, number],
  L: number,
  bounds: { x0: number; y0: number; x1: number; y1: number },
): NeighborhoodRect {
  return {
    x0: Math.max(bounds.x0, center[0] - L),
    y0: Math.max(bounds.y0, center[1] - L),
    x1: Math.min(bounds.x1, center[0] + L),
    y1: Math.min(bounds.y1, center[1] + L),
  };
}

export interface TimelineRow {
  t: number;
  robotId: number;
  L: number | null;
  gamma: number | null;
  source: string | null;
  ratio: number | null;
  requested: number;
  satisfied: boolean | null;
  coverageAfter: number | null;
}

/**
 * Fold the event log into one row per failure for the session timeline.
 *
 * A row opens at FailureInjected and is filled in by the OperatorChoice,
 * Reconfigured, and post_reconfigure CoverageSample events that follow it.
 * The fold tolerates a trailing half-finished failure (pending decision).
 */
export function foldTimeline(events: LogEvent[]): TimelineRow[] {
  const rows: TimelineRow[] = [];
  let open: TimelineRow | null = null;
  for (const ev of events) {
    if (ev.event === "FailureInjected") {
      open = {
        t: ev.t,
        robotId: ev.payload.robot_id,
        L: null,
        gamma: null,
        source: null,
        ratio: null,
        requested: 0,
        satisfied: null,
        coverageAfter: null,
      };
      rows.push(open);
    } else if (open && ev.event === "OperatorChoice") {
      open.L = ev.payload.L;
      open.gamma = ev.payload.gamma;
      open.source = ev.payload.source ?? null;
    } else if (open && ev.event === "Reconfigured") {
      open.ratio = ev.payload.ratio_achieved;
      open.requested = (ev.payload.requested_robots?.ids ?? []).length;
      open.satisfied = ev.payload.satisfied ?? null;
    } else if (
      open &&
      ev.event === "CoverageSample" &&
      ev.payload.label === "post_reconfigure"
    ) {
      open.coverageAfter = ev.payload.value;
      open = null;
    }
  }
  return rows;
}

// Deployment cost of the robots a preview says it would request.
export function requestedCost(requestedIds: number[], robots: RobotRow[]): number {
  const byId = new Map(robots.map((r) => [r.spec.id, r.spec.cost]));
  let total = 0;
  for (const id of requestedIds) total += byId.get(id) ?? 0;
  return total;
}

export interface Trajectory {
  robotId: number;
  from: [number, number];
  to: [number, number];
}

/**
 * Straight-line segments for every robot whose position changed between two
 * snapshots. Robots present in only one snapshot are ignored (new grants pop
 * in at their goal; the failed robot simply disappears).
 */
export function planTrajectories(
  before: Map<number, [number, number]>,
  after: Map<number, [number, number]>,
): Trajectory[] {
  const moves: Trajectory[] = [];
  for (const [id, to] of after) {
    const from = before.get(id);
    if (!from) continue;
    if (Math.abs(from[0] - to[0]) < 1e-12 && Math.abs(from[1] - to[1]) < 1e-12) {
      continue;
    }
    moves.push({ robotId: id, from, to });
  }
  moves.sort((a, b) => a.robotId - b.robotId);
  return moves;
}

export function interpolate(tr: Trajectory, u: number): [number, number] {
  const s = Math.min(1, Math.max(0, u));
  return [
    tr.from[0] + (tr.to[0] - tr.from[0]) * s,
    tr.from[1] + (tr.to[1] - tr.from[1]) * s,
  ];
}

export function positionsOf(robots: RobotRow[]): Map<number, [number, number]> {
  const m = new Map<number, [number, number]>();
  for (const r of robots) {
    if (r.active && r.x !== undefined && r.y !== undefined) {
      m.set(r.spec.id, [r.x, r.y]);
    }
  }
  return m;
}

type PreviewFetch = (k: Knobs) => Promise<PreviewDoc>;
type PreviewSink = (p: PreviewDoc, k: Knobs) => void;

/**
 * Debounced single-flight gate in front of the preview endpoint.
 *
 * Slider drags call request() at input rate; the gate waits debounceMs of
 * quiet, then issues at most one HTTP call at a time. Knobs arriving while a
 * call is in flight replace any queued knobs, and a response is dropped when
 * newer knobs are already waiting, so the UI only ever shows the preview for
 * the latest requested state.
 */
export class PreviewGate {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private queued: Knobs | null = null;
  private busy = false;

  constructor(
    private fetchPreview: PreviewFetch,
    private onResult: PreviewSink,
    private debounceMs = 150,
    private onError: (err: unknown) => void = () => {},
  ) {}

  request(k: Knobs): void {
    this.queued = k;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.fire();
    }, this.debounceMs);
  }

  inFlight(): boolean {
    return this.busy;
  }

  private async fire(): Promise<void> {
    if (this.busy || this.queued === null) return;
    const k = this.queued;
    this.queued = null;
    this.busy = true;
    let result: PreviewDoc | null = null;
    try {
      result = await this.fetchPreview(k);
    } catch (err) {
      this.onError(err);
    }
    this.busy = false;
    if (this.queued !== null) {
      // stale: newer knobs arrived while this call was running
      void this.fire();
      return;
    }
    if (result !== null) this.onResult(result, k);
  }
}

// Incremental SSE frame parser; feed it raw chunks, it emits each data line.
export function createSSEParser(onData: (doc: any) => void): (chunk: string) => void {
  let buf = "";
  return (chunk: string) => {
    buf += chunk;
    let cut;
    while ((cut = buf.indexOf("\n\n")) >= 0) {
      const frame = buf.slice(0, cut);
      buf = buf.slice(cut + 2);
      for (const line of frame.split("\n")) {
        if (line.startsWith("data: ")) onData(JSON.parse(line.slice(6)));
      }
    }
  };
}
