// NDJSON telemetry stream reader with automatic reconnect.
//
// The server replays the whole event log to every subscriber before going
// live, so a reconnect is just "open the stream again"; consumers dedupe
// replayed events by sim_time.

export type StreamEvent = Record<string, unknown> & { type: string; sim_time?: number };

export interface StreamHandlers {
  onEvent: (event: StreamEvent) => void;
  onStatus?: (status: "connecting" | "live" | "reconnecting" | "ended") => void;
}

export interface StreamController {
  close(): void;
  /** Drop the current connection; reconnect logic takes over (test hook). */
  interrupt(): void;
}

const RECONNECT_DELAY_MS = 1000;
const MAX_ATTEMPTS = 20;

export function connectTelemetry(
  url: string,
  handlers: StreamHandlers,
  fetchImpl: typeof fetch = fetch,
): StreamController {
  let closed = false;
  let attempts = 0;
  let abort = new AbortController();

  const notify = (status: "connecting" | "live" | "reconnecting" | "ended") => {
    handlers.onStatus?.(status);
  };

  async function readOnce(): Promise<"ended" | "dropped"> {
    const response = await fetchImpl(url, { signal: abort.signal });
    if (!response.ok || response.body === null) {
      throw new Error(`stream failed: ${response.status}`);
    }
    notify("live");
    attempts = 0;
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) {
        return "ended";
      }
      buffer += decoder.decode(value, { stream: true });
      let newline = buffer.indexOf("\n");
      while (newline >= 0) {
        const line = buffer.slice(0, newline).trim();
        buffer = buffer.slice(newline + 1);
        if (line.length > 0) {
          handlers.onEvent(JSON.parse(line) as StreamEvent);
        }
        newline = buffer.indexOf("\n");
      }
    }
  }

  async function loop(): Promise<void> {
    notify("connecting");
    while (!closed && attempts < MAX_ATTEMPTS) {
      try {
        const outcome = await readOnce();
        if (outcome === "ended") {
          notify("ended");
          return;
        }
      } catch (error) {
        if (closed) {
          return;
        }
      }
      attempts += 1;
      notify("reconnecting");
      abort = new AbortController();
      await new Promise((resolve) => setTimeout(resolve, RECONNECT_DELAY_MS));
    }
    if (!closed) {
      notify("ended");
    }
  }

  void loop();

  return {
    close() {
      closed = true;
      abort.abort();
    },
    interrupt() {
      abort.abort();
      abort = new AbortController();
    },
  };
}
