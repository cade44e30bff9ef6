// Shapes of the service's JSON responses. Field names mirror the wire
// format exactly; everything displayed in the UI comes from these.

export interface RobotSpec {
  id: number;
  cost: number;
  sense_radius: number;
  sense_area: number;
  decay: number;
  hazard_base: number;
  hazard_quad: number;
  lifespan: number;
}

export interface RobotRow {
  spec: RobotSpec;
  failed: boolean;
  active: boolean;
  x?: number;
  y?: number;
  cell?: number;
}

export interface GridInfo {
  origin: [number, number];
  cell_size: number;
  nx: number;
  ny: number;
  weights: number[];
}

export interface PendingFailure {
  robot_id: number;
  t: number;
  detected_t: number;
  position: [number, number];
}

export interface StateSnapshot {
  session_id: string;
  lifecycle: "running" | "awaiting_operator" | "finished";
  clock: number;
  horizon: number;
  grid: GridInfo;
  robots: RobotRow[];
  failed_ids: number[];
  spare_ids: number[];
  pending_failure: PendingFailure | null;
  coverage: number;
  heatmap: number[];
}

export interface PreviewDoc {
  ratio_after_local: number;
  robots_requested_count: number;
  requested_ids: number[];
  coverage_map_delta: number[];
  estimated_eval_count: number;
  satisfied: boolean;
  ratio_after_augment: number | null;
  L: number;
  gamma: number;
}

export interface CommitDoc {
  new_placement: { robot_id: number; cell: number; x: number; y: number }[];
  ratio_achieved: number;
  requested_robots: { ids: number[]; cardinality: number; certified: boolean };
  ratio_after_augment: number | null;
  satisfied: boolean;
  lifecycle: string;
}

export interface LogEvent {
  event: string;
  t: number;
  payload: any;
}

export interface Knobs {
  L: number;
  gamma: number;
}
