// Canvas + DOM rendering for the operator console. Pure output: reads the
// session view model, writes pixels and table rows.

import { QueueRow } from "./api.js";
import { ConsoleSession } from "./session.js";

const PRIORITY_COLORS: Record<number, string> = {
  1: "#e4574f",
  2: "#3a7bd5",
  3: "#8a63c9",
};

const STATE_COLORS: Record<string, string> = {
  tracking: "#d58b3a",
  aborted: "#e4574f",
  paused: "#b0a43c",
  landed: "#6b7280",
  faulted: "#e4574f",
};

function priorityColor(priority: number): string {
  return PRIORITY_COLORS[priority] ?? "#58a65c";
}

interface MapExtent {
  minX: number;
  maxX: number;
  minY: number;
  maxY: number;
}

function computeExtent(session: ConsoleSession): MapExtent {
  const xs: number[] = [0];
  const ys: number[] = [0];
  for (const p of session.trail) {
    xs.push(p.x);
    ys.push(p.y);
  }
  for (const row of session.queue) {
    xs.push(row.target.x);
    ys.push(row.target.y);
  }
  const pad = 5;
  return {
    minX: Math.min(...xs) - pad,
    maxX: Math.max(...xs) + pad,
    minY: Math.min(...ys) - pad,
    maxY: Math.max(...ys) + pad,
  };
}

export function drawMap(canvas: HTMLCanvasElement, session: ConsoleSession): void {
  const ctx = canvas.getContext("2d");
  if (ctx === null) {
    return;
  }
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#10151d";
  ctx.fillRect(0, 0, width, height);

  const extent = computeExtent(session);
  const sx = width / (extent.maxX - extent.minX);
  const sy = height / (extent.maxY - extent.minY);
  const scale = Math.min(sx, sy);
  const toPx = (x: number, y: number): [number, number] => [
    (x - extent.minX) * scale,
    height - (y - extent.minY) * scale,
  ];

  // pose trail
  if (session.trail.length > 1) {
    ctx.strokeStyle = "#58a65c";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    const first = session.trail[0]!;
    ctx.moveTo(...toPx(first.x, first.y));
    for (const p of session.trail) {
      ctx.lineTo(...toPx(p.x, p.y));
    }
    ctx.stroke();
  }

  // pending waypoints, colored by priority; struck through once aborted
  const struck = session.status === "aborted" || session.state === "aborted";
  for (const row of session.queue) {
    const [px, py] = toPx(row.target.x, row.target.y);
    ctx.strokeStyle = priorityColor(row.priority);
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(px, py, 6, 0, Math.PI * 2);
    ctx.stroke();
    if (row.suspended) {
      ctx.setLineDash([3, 2]);
      ctx.beginPath();
      ctx.arc(px, py, 9, 0, Math.PI * 2);
      ctx.stroke();
      ctx.setLineDash([]);
    }
    if (struck) {
      ctx.beginPath();
      ctx.moveTo(px - 8, py - 8);
      ctx.lineTo(px + 8, py + 8);
      ctx.moveTo(px - 8, py + 8);
      ctx.lineTo(px + 8, py - 8);
      ctx.stroke();
    }
    ctx.fillStyle = "#c9d2de";
    ctx.font = "10px sans-serif";
    ctx.fillText(row.waypoint_id, px + 10, py + 3);
  }

  // drone marker
  if (session.pose !== null) {
    const [px, py] = toPx(session.pose.x, session.pose.y);
    ctx.fillStyle = "#f0f3f7";
    ctx.beginPath();
    ctx.arc(px, py, 5, 0, Math.PI * 2);
    ctx.fill();
    ctx.strokeStyle = "#58a65c";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(px, py, 8, 0, Math.PI * 2);
    ctx.stroke();
  }
}

export function drawStrip(
  canvas: HTMLCanvasElement,
  series: { t: number; v: number }[],
  color: string,
  label: string,
  fixedMax?: number,
): void {
  const ctx = canvas.getContext("2d");
  if (ctx === null) {
    return;
  }
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#10151d";
  ctx.fillRect(0, 0, width, height);
  ctx.fillStyle = "#7a8699";
  ctx.font = "10px sans-serif";
  ctx.fillText(label, 6, 12);
  if (series.length < 2) {
    return;
  }
  const t0 = series[0]!.t;
  const t1 = series[series.length - 1]!.t;
  const vMax = fixedMax ?? Math.max(...series.map((p) => p.v)) * 1.1 + 1e-9;
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.2;
  ctx.beginPath();
  for (let i = 0; i < series.length; i += 1) {
    const p = series[i]!;
    const px = ((p.t - t0) / Math.max(t1 - t0, 1e-9)) * (width - 10) + 5;
    const py = height - (p.v / vMax) * (height - 18) - 4;
    if (i === 0) {
      ctx.moveTo(px, py);
    } else {
      ctx.lineTo(px, py);
    }
  }
  ctx.stroke();
  const last = series[series.length - 1]!;
  ctx.fillStyle = "#c9d2de";
  ctx.fillText(last.v.toFixed(1), width - 40, 12);
}

export function renderQueueTable(table: HTMLTableElement, rows: QueueRow[]): void {
  const body = table.tBodies[0] ?? table.createTBody();
  body.replaceChildren();
  for (const row of rows) {
    const tr = body.insertRow();
    tr.insertCell().textContent = String(row.position);
    tr.insertCell().textContent = row.waypoint_id;
    const priorityCell = tr.insertCell();
    priorityCell.textContent = String(row.priority);
    priorityCell.style.color = priorityColor(row.priority);
    tr.insertCell().textContent = row.suspended ? "suspended" : "";
  }
}

export function renderBadges(session: ConsoleSession, stateEl: HTMLElement, connEl: HTMLElement): void {
  stateEl.textContent = session.state;
  stateEl.style.background = STATE_COLORS[session.state] ?? "#2c3a4e";
  connEl.textContent = session.connection;
  connEl.className = `badge conn-${session.connection}`;
}
