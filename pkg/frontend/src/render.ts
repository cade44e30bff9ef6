import { heatRGB, neighborhoodRect } from "./core.js";
import type { Trajectory } from "./core.js";
import type { GridInfo, RobotRow, StateSnapshot } from "./types.js";

export interface Overlay {
  pending?: [number, number] | null;
  L?: number;
  // robot id -> animated position, overrides the snapshot while moving
  animated?: Map<number, [number, number]>;
}

/** Draws the field: heatmap, robots, sensing disks, neighborhood square. */
export class FieldRenderer {
  private ctx: CanvasRenderingContext2D;
  private cells: HTMLCanvasElement;

  constructor(private canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("no 2d context");
    this.ctx = ctx;
    this.cells = document.createElement("canvas");
  }

  private scale(grid: GridInfo): number {
    const w = grid.nx * grid.cell_size;
    const h = grid.ny * grid.cell_size;
    return Math.min(this.canvas.width / w, this.canvas.height / h);
  }

  // World coordinates to canvas pixels; y axis flipped so north is up.
  private toPx(grid: GridInfo, x: number, y: number): [number, number] {
    const s = this.scale(grid);
    return [
      (x - grid.origin[0]) * s,
      this.canvas.height - (y - grid.origin[1]) * s,
    ];
  }

  draw(state: StateSnapshot, overlay: Overlay = {}): void {
    const grid = state.grid;
    const { ctx } = this;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    this.drawHeatmap(grid, state.heatmap);
    this.drawRobots(grid, state.robots, overlay.animated);
    if (overlay.pending && overlay.L !== undefined) {
      this.drawNeighborhood(grid, overlay.pending, overlay.L);
    }
  }

  private drawHeatmap(grid: GridInfo, heatmap: number[]): void {
    this.cells.width = grid.nx;
    this.cells.height = grid.ny;
    const cctx = this.cells.getContext("2d")!;
    const img = cctx.createImageData(grid.nx, grid.ny);
    for (let iy = 0; iy < grid.ny; iy++) {
      for (let ix = 0; ix < grid.nx; ix++) {
        // heatmap is row-major from the south row up; ImageData rows go down
        const v = heatmap[iy * grid.nx + ix];
        const [r, g, b] = heatRGB(v);
        const o = ((grid.ny - 1 - iy) * grid.nx + ix) * 4;
        img.data[o] = r;
        img.data[o + 1] = g;
        img.data[o + 2] = b;
        img.data[o + 3] = 255;
      }
    }
    cctx.putImageData(img, 0, 0);
    const s = this.scale(grid) * grid.cell_size;
    this.ctx.imageSmoothingEnabled = false;
    this.ctx.drawImage(this.cells, 0, 0, grid.nx * s, grid.ny * s);
  }

  private drawRobots(
    grid: GridInfo,
    robots: RobotRow[],
    animated?: Map<number, [number, number]>,
  ): void {
    const { ctx } = this;
    const s = this.scale(grid);
    for (const r of robots) {
      if (!r.active && !r.failed) continue; // spares stay off the map
      let x = r.x;
      let y = r.y;
      const moved = animated?.get(r.spec.id);
      if (moved) [x, y] = moved;
      if (x === undefined || y === undefined) continue;
      const [px, py] = this.toPx(grid, x, y);
      if (r.active) {
        ctx.strokeStyle = "rgba(255,80,80,0.35)";
        ctx.lineWidth = 1;
        ctx.beginPath();
        ctx.arc(px, py, r.spec.sense_radius * s, 0, Math.PI * 2);
        ctx.stroke();
      }
      ctx.fillStyle = r.failed ? "#111" : "#d62828";
      ctx.strokeStyle = "#fff";
      ctx.beginPath();
      ctx.arc(px, py, 5, 0, Math.PI * 2);
      ctx.fill();
      ctx.stroke();
      ctx.fillStyle = "#fff";
      ctx.font = "10px sans-serif";
      ctx.fillText(String(r.spec.id), px + 6, py - 6);
    }
  }

  private drawNeighborhood(grid: GridInfo, center: [number, number], L: number): void {
    const rect = neighborhoodRect(center, L, {
      x0: grid.origin[0],
      y0: grid.origin[1],
      x1: grid.origin[0] + grid.nx * grid.cell_size,
      y1: grid.origin[1] + grid.ny * grid.cell_size,
    });
    const [px0, py0] = this.toPx(grid, rect.x0, rect.y1);
    const [px1, py1] = this.toPx(grid, rect.x1, rect.y0);
    const { ctx } = this;
    ctx.save();
    ctx.setLineDash([6, 4]);
    ctx.strokeStyle = "#ffd166";
    ctx.lineWidth = 2;
    ctx.strokeRect(px0, py0, px1 - px0, py1 - py0);
    ctx.restore();
  }
}

/** Runs one straight-line repositioning animation via requestAnimationFrame. */
export function animateMoves(
  moves: Trajectory[],
  durationMs: number,
  onFrame: (positions: Map<number, [number, number]>, done: boolean) => void,
): void {
  if (moves.length === 0) {
    onFrame(new Map(), true);
    return;
  }
  const start = performance.now();
  const step = (now: number) => {
    const u = Math.min(1, (now - start) / durationMs);
    const positions = new Map<number, [number, number]>();
    for (const tr of moves) {
      positions.set(tr.robotId, [
        tr.from[0] + (tr.to[0] - tr.from[0]) * u,
        tr.from[1] + (tr.to[1] - tr.from[1]) * u,
      ]);
    }
    onFrame(positions, u >= 1);
    if (u < 1) requestAnimationFrame(step);
  };
  requestAnimationFrame(step);
}
