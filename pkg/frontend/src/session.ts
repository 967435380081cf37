// ConsoleSession: the view model behind the operator UI.
//
// State only ever changes in response to server data (stream events or
// snapshot fetches); button handlers just issue commands and wait for the
// resulting events to arrive. Replayed events after a reconnect are deduped
// by sim_time so the pose trail never doubles up.

import { ControlPlaneClient, QueueRow, StateSnapshot, BatchSpec, CommandAck, Position } from "./api.js";
import { StreamEvent } from "./stream.js";

export interface TrailPoint {
  t: number;
  x: number;
  y: number;
  z: number;
}

export interface SeriesPoint {
  t: number;
  v: number;
}

export type ConnectionState = "connecting" | "live" | "reconnecting" | "ended";

export interface BannerMessage {
  kind: "info" | "error";
  text: string;
}

export class ConsoleSession {
  readonly missionId: string;
  connection: ConnectionState = "connecting";
  status = "running";
  state = "init";
  simTime = 0;
  battery = 100;
  pose: Position | null = null;
  trail: TrailPoint[] = [];
  batterySeries: SeriesPoint[] = [];
  altitudeSeries: SeriesPoint[] = [];
  queue: QueueRow[] = [];
  visited: string[] = [];
  lastTransition = "";
  banner: BannerMessage | null = null;
  queueDirty = false;

  private lastTrailTime = -1;
  private injectCounter = 0;

  constructor(
    private readonly client: ControlPlaneClient,
    missionId: string,
  ) {
    this.missionId = missionId;
  }

  // -- server data ingestion ------------------------------------------------

  applyEvent(event: StreamEvent): void {
    switch (event.type) {
      case "telemetry":
        this.applyTelemetry(event);
        break;
      case "transition":
        this.state = String(event["to_state"]);
        this.lastTransition = `${event["from_state"]} → ${event["to_state"]}`;
        break;
      case "queue":
        // ordering is owned by the server; a snapshot refetch keeps the
        // panel identical to GET /missions/{id}/queue
        this.queueDirty = true;
        break;
      case "warning":
        this.banner = { kind: "info", text: `warning: ${String(event["detail"] ?? event["kind"])}` };
        break;
      default:
        break;
    }
  }

  private applyTelemetry(event: StreamEvent): void {
    const t = Number(event["sim_time"]);
    if (t <= this.lastTrailTime) {
      return; // replayed sample after a reconnect
    }
    this.lastTrailTime = t;
    const pose = event["pose"] as Position;
    this.simTime = t;
    this.pose = pose;
    this.battery = Number(event["battery"]);
    this.state = String(event["state"]);
    this.visited = (event["visited_waypoint_ids"] as string[]) ?? this.visited;
    this.trail.push({ t, x: pose.x, y: pose.y, z: pose.z });
    this.batterySeries.push({ t, v: this.battery });
    this.altitudeSeries.push({ t, v: pose.z });
  }

  applyStateSnapshot(snapshot: StateSnapshot): void {
    this.status = snapshot.status;
    this.state = snapshot.state;
    this.battery = snapshot.battery;
    this.pose = snapshot.pose;
    this.visited = snapshot.visited_waypoint_ids;
  }

  applyQueueSnapshot(rows: QueueRow[]): void {
    this.queue = rows;
    this.queueDirty = false;
  }

  setConnection(connection: ConnectionState): void {
    this.connection = connection;
  }

  async refreshSnapshots(): Promise<void> {
    this.applyStateSnapshot(await this.client.getState(this.missionId));
    this.applyQueueSnapshot(await this.client.getQueue(this.missionId));
  }

  // -- operator commands (one POST per action) -------------------------------

  async injectWaypoint(
    target: Position,
    priority: number,
    hoverDuration = 0,
  ): Promise<CommandAck | null> {
    this.injectCounter += 1;
    const batch: BatchSpec = {
      nav_type: "analytics_driven",
      scheduling: "ordered",
      priority,
      waypoints: [
        {
          id: `console_${Date.now().toString(36)}_${this.injectCounter}`,
          target,
          hover_duration: hoverDuration,
          frame: "relative",
        },
      ],
    };
    return this.guard(() => this.client.injectBatch(this.missionId, batch), "waypoint injected");
  }

  async pause(): Promise<CommandAck | null> {
    return this.guard(() => this.client.pause(this.missionId), "mission paused");
  }

  async resume(): Promise<CommandAck | null> {
    return this.guard(() => this.client.resume(this.missionId), "mission resumed");
  }

  async abort(): Promise<CommandAck | null> {
    return this.guard(() => this.client.abort(this.missionId), "mission aborted");
  }

  private async guard(
    action: () => Promise<CommandAck>,
    okText: string,
  ): Promise<CommandAck | null> {
    try {
      const ack = await action();
      this.banner = { kind: "info", text: `${okText} (applied at t=${ack.applied_at.toFixed(2)}s)` };
      return ack;
    } catch (error) {
      const text = error instanceof Error ? error.message : String(error);
      this.banner = { kind: "error", text };
      return null;
    }
  }
}
