// View-model unit tests: event application, trail dedupe, queue refresh
// discipline, and command/banner behavior against a stubbed client.

import { describe, expect, it, vi } from "vitest";

import { ControlPlaneClient, QueueRow } from "../src/api.js";
import { ConsoleSession } from "../src/session.js";
import { StreamEvent } from "../src/stream.js";

function telemetry(t: number, x = 0, y = 0, z = 1.5, battery = 99): StreamEvent {
  return {
    type: "telemetry",
    sim_time: t,
    pose: { x, y, z },
    velocity: { x: 0, y: 0, z: 0 },
    battery,
    state: "en_route",
    visited_waypoint_ids: [],
  };
}

function makeSession(): ConsoleSession {
  return new ConsoleSession(new ControlPlaneClient("http://unused"), "m1");
}

describe("ConsoleSession telemetry", () => {
  it("builds the trail in order", () => {
    const session = makeSession();
    session.applyEvent(telemetry(0.05, 1, 1));
    session.applyEvent(telemetry(0.1, 2, 2));
    expect(session.trail.map((p) => p.t)).toEqual([0.05, 0.1]);
    expect(session.simTime).toBe(0.1);
    expect(session.pose).toEqual({ x: 2, y: 2, z: 1.5 });
  });

  it("dedupes replayed samples after a reconnect", () => {
    const session = makeSession();
    const events = [telemetry(0.05, 1, 1), telemetry(0.1, 2, 2), telemetry(0.15, 3, 3)];
    for (const e of events) session.applyEvent(e);
    // reconnect: the server replays everything from the start
    for (const e of events) session.applyEvent(e);
    session.applyEvent(telemetry(0.2, 4, 4));
    expect(session.trail.map((p) => p.t)).toEqual([0.05, 0.1, 0.15, 0.2]);
    expect(session.batterySeries).toHaveLength(4);
    expect(session.altitudeSeries).toHaveLength(4);
  });

  it("tracks battery and altitude series", () => {
    const session = makeSession();
    session.applyEvent(telemetry(1, 0, 0, 2.5, 90));
    expect(session.batterySeries[0]).toEqual({ t: 1, v: 90 });
    expect(session.altitudeSeries[0]).toEqual({ t: 1, v: 2.5 });
  });
});

describe("ConsoleSession transitions and queue events", () => {
  it("updates the state badge from transitions", () => {
    const session = makeSession();
    session.applyEvent({ type: "transition", sim_time: 1, from_state: "hover", to_state: "en_route" });
    expect(session.state).toBe("en_route");
    expect(session.lastTransition).toContain("hover");
  });

  it("marks the queue dirty instead of mutating it locally", () => {
    const session = makeSession();
    session.applyEvent({ type: "queue", sim_time: 1, action: "add", waypoint_ids: ["w1"] });
    expect(session.queueDirty).toBe(true);
    expect(session.queue).toEqual([]);
  });

  it("queue snapshot application clears the dirty flag and owns ordering", () => {
    const session = makeSession();
    session.applyEvent({ type: "queue", sim_time: 1, action: "add" });
    const rows: QueueRow[] = [
      { waypoint_id: "hi", priority: 1, position: 0, suspended: false, target: { x: 1, y: 1, z: 1 } },
      { waypoint_id: "lo", priority: 2, position: 1, suspended: false, target: { x: 2, y: 2, z: 1 } },
    ];
    session.applyQueueSnapshot(rows);
    expect(session.queueDirty).toBe(false);
    expect(session.queue.map((r) => r.waypoint_id)).toEqual(["hi", "lo"]);
  });
});

describe("ConsoleSession commands", () => {
  it("issues exactly one POST per action and surfaces the ack", async () => {
    const client = new ControlPlaneClient("http://unused");
    const spy = vi
      .spyOn(client, "injectBatch")
      .mockResolvedValue({ accepted: true, kind: "inject_batch", applied_at: 12.3 });
    const session = new ConsoleSession(client, "m1");
    const ack = await session.injectWaypoint({ x: 30, y: 50, z: 10 }, 2);
    expect(spy).toHaveBeenCalledTimes(1);
    expect(ack?.applied_at).toBe(12.3);
    expect(session.banner?.kind).toBe("info");
    // no local queue mutation without a confirming server event
    expect(session.queue).toEqual([]);
  });

  it("shows the server reason as a banner on rejection", async () => {
    const client = new ControlPlaneClient("http://unused");
    vi.spyOn(client, "abort").mockRejectedValue(
      new Error("pattern static_predefined rejects waypoint injection"),
    );
    const session = new ConsoleSession(client, "m1");
    const ack = await session.abort();
    expect(ack).toBeNull();
    expect(session.banner?.kind).toBe("error");
    expect(session.banner?.text).toContain("pattern");
  });

  it("generates unique waypoint ids per injection", async () => {
    const client = new ControlPlaneClient("http://unused");
    const ids: string[] = [];
    vi.spyOn(client, "injectBatch").mockImplementation(async (_m, batch) => {
      ids.push(batch.waypoints[0]!.id);
      return { accepted: true, kind: "inject_batch", applied_at: 0 };
    });
    const session = new ConsoleSession(client, "m1");
    await session.injectWaypoint({ x: 1, y: 1, z: 1 }, 2);
    await session.injectWaypoint({ x: 2, y: 2, z: 1 }, 2);
    expect(new Set(ids).size).toBe(2);
  });
});
