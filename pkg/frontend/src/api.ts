// Typed client for the mission control plane. Every console action funnels
// through here and maps to exactly one HTTP request.

export interface Position {
  x: number;
  y: number;
  z: number;
}

export interface StateSnapshot {
  mission_id: string;
  scenario: string;
  status: string;
  state: string;
  sim_time: number;
  battery: number;
  pose: Position;
  visited_waypoint_ids: string[];
}

export interface QueueRow {
  waypoint_id: string;
  priority: number;
  position: number;
  suspended: boolean;
  target: Position;
}

export interface WaypointSpec {
  id: string;
  target: Position;
  hover_duration?: number;
  frame?: "relative" | "absolute";
}

export interface BatchSpec {
  nav_type: "distance_driven" | "analytics_driven";
  scheduling?: "ordered" | "unordered";
  priority: number;
  waypoints: WaypointSpec[];
}

export interface CommandAck {
  accepted: boolean;
  kind: string;
  applied_at: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const detail = (body as { error?: string }).error ?? response.statusText;
    throw new ApiError(response.status, detail);
  }
  return body as T;
}

export class ControlPlaneClient {
  constructor(readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async startMission(scenario: unknown, pacing?: string): Promise<string> {
    const query = pacing ? `?pacing=${encodeURIComponent(pacing)}` : "";
    const body = await request<{ mission_id: string }>(this.url(`/missions${query}`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(scenario),
    });
    return body.mission_id;
  }

  getState(missionId: string): Promise<StateSnapshot> {
    return request<StateSnapshot>(this.url(`/missions/${missionId}/state`));
  }

  async getQueue(missionId: string): Promise<QueueRow[]> {
    const body = await request<{ queue: QueueRow[] }>(this.url(`/missions/${missionId}/queue`));
    return body.queue;
  }

  telemetryUrl(missionId: string): string {
    return this.url(`/missions/${missionId}/telemetry`);
  }

  private command(missionId: string, payload: unknown): Promise<CommandAck> {
    return request<CommandAck>(this.url(`/missions/${missionId}/commands`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  injectBatch(missionId: string, batch: BatchSpec): Promise<CommandAck> {
    return this.command(missionId, { kind: "inject_batch", payload: batch });
  }

  pause(missionId: string): Promise<CommandAck> {
    return this.command(missionId, { kind: "pause" });
  }

  resume(missionId: string): Promise<CommandAck> {
    return this.command(missionId, { kind: "resume" });
  }

  abort(missionId: string): Promise<CommandAck> {
    return this.command(missionId, { kind: "abort" });
  }
}
