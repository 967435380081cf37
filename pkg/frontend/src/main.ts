// Console wiring: session lifecycle, stream subscription, button handlers.

import { ControlPlaneClient } from "./api.js";
import { demoScenario } from "./demoScenario.js";
import { drawMap, drawStrip, renderBadges, renderQueueTable } from "./render.js";
import { ConsoleSession } from "./session.js";
import { connectTelemetry, StreamController } from "./stream.js";

const POLL_FALLBACK_MS = 1000;

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (found === null) {
    throw new Error(`missing element #${id}`);
  }
  return found as T;
}

let session: ConsoleSession | null = null;
let stream: StreamController | null = null;
let pollTimer: number | null = null;

const client = new ControlPlaneClient("");

function setBannerFrom(sessionRef: ConsoleSession): void {
  const banner = el<HTMLDivElement>("banner");
  if (sessionRef.banner === null) {
    banner.hidden = true;
    return;
  }
  banner.hidden = false;
  banner.textContent = sessionRef.banner.text;
  banner.className = `banner banner-${sessionRef.banner.kind}`;
}

function redraw(): void {
  if (session === null) {
    return;
  }
  drawMap(el<HTMLCanvasElement>("map"), session);
  drawStrip(el<HTMLCanvasElement>("battery-strip"), session.batterySeries, "#58a65c", "battery %", 100);
  drawStrip(el<HTMLCanvasElement>("altitude-strip"), session.altitudeSeries, "#3a7bd5", "altitude m");
  renderQueueTable(el<HTMLTableElement>("queue-table"), session.queue);
  renderBadges(session, el<HTMLElement>("state-badge"), el<HTMLElement>("conn-badge"));
  el<HTMLElement>("mission-label").textContent = session.missionId;
  el<HTMLElement>("sim-time").textContent = `t=${session.simTime.toFixed(1)}s`;
  el<HTMLElement>("visited-label").textContent = session.visited.join(" ") || "-";
  setBannerFrom(session);
}

async function connectTo(missionId: string): Promise<void> {
  stream?.close();
  if (pollTimer !== null) {
    window.clearInterval(pollTimer);
    pollTimer = null;
  }
  const active = new ConsoleSession(client, missionId);
  session = active;
  await active.refreshSnapshots().catch(() => undefined);

  stream = connectTelemetry(client.telemetryUrl(missionId), {
    onEvent: (event) => {
      active.applyEvent(event);
      if (active.queueDirty) {
        void client
          .getQueue(missionId)
          .then((rows) => active.applyQueueSnapshot(rows))
          .catch(() => undefined);
      }
    },
    onStatus: (status) => {
      active.setConnection(status);
      if (status === "reconnecting") {
        // snapshot refetch keeps the panel truthful while the stream is down
        void active.refreshSnapshots().catch(() => undefined);
        if (pollTimer === null) {
          pollTimer = window.setInterval(() => {
            void active.refreshSnapshots().then(redraw).catch(() => undefined);
          }, POLL_FALLBACK_MS);
        }
      } else if (pollTimer !== null && status === "live") {
        window.clearInterval(pollTimer);
        pollTimer = null;
      }
    },
  });
}

function bindControls(): void {
  el<HTMLButtonElement>("start-demo").addEventListener("click", () => {
    void (async () => {
      const missionId = await client.startMission(demoScenario);
      el<HTMLInputElement>("mission-id").value = missionId;
      await connectTo(missionId);
    })().catch((error) => window.alert(String(error)));
  });

  el<HTMLButtonElement>("connect").addEventListener("click", () => {
    const missionId = el<HTMLInputElement>("mission-id").value.trim();
    if (missionId.length > 0) {
      void connectTo(missionId);
    }
  });

  el<HTMLButtonElement>("inject").addEventListener("click", () => {
    if (session === null) {
      return;
    }
    const x = Number(el<HTMLInputElement>("wp-x").value);
    const y = Number(el<HTMLInputElement>("wp-y").value);
    const z = Number(el<HTMLInputElement>("wp-z").value);
    const priority = Number(el<HTMLInputElement>("wp-priority").value);
    void session.injectWaypoint({ x, y, z }, priority).then(redraw);
  });

  el<HTMLButtonElement>("pause").addEventListener("click", () => {
    void session?.pause().then(redraw);
  });
  el<HTMLButtonElement>("resume").addEventListener("click", () => {
    void session?.resume().then(redraw);
  });
  el<HTMLButtonElement>("abort").addEventListener("click", () => {
    void session?.abort().then(redraw);
  });
}

function animationLoop(): void {
  redraw();
  window.requestAnimationFrame(animationLoop);
}

bindControls();
window.requestAnimationFrame(animationLoop);
