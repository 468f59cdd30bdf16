/** Event-log subscription with client-driven replay offsets.
 *
 * The store keeps the frames received so far; on any disconnect the next
 * connection replays from the last seen sequence number, so the assembled
 * log is always gap-free and duplicate-free regardless of interruption
 * pattern.
 */

import type { ApiClient } from "./api";
import type { EventFrame, Stage } from "./types";

const TERMINAL_STAGES: ReadonlySet<Stage> = new Set(["Done", "Failed"]);

export class FrameStore {
  private readonly frames: EventFrame[] = [];
  private readonly listeners: Array<(frame: EventFrame) => void> = [];

  get lastSeq(): number {
    const last = this.frames[this.frames.length - 1];
    return last ? last.seq : -1;
  }

  all(): readonly EventFrame[] {
    return this.frames;
  }

  onFrame(listener: (frame: EventFrame) => void): void {
    this.listeners.push(listener);
  }

  /** Accept a frame; stale or out-of-order frames are rejected. */
  push(frame: EventFrame): boolean {
    if (frame.seq <= this.lastSeq) return false;
    if (frame.seq !== this.lastSeq + 1) {
      throw new Error(`frame gap: expected ${this.lastSeq + 1}, got ${frame.seq}`);
    }
    this.frames.push(frame);
    for (const listener of this.listeners) listener(frame);
    return true;
  }

  get terminal(): boolean {
    for (let i = this.frames.length - 1; i >= 0; i--) {
      const event = this.frames[i]!.event;
      if (event.kind === "failed") return true;
      if (event.kind === "entered") return TERMINAL_STAGES.has(event.stage);
    }
    return false;
  }
}

async function* ndjsonLines(response: Response): AsyncGenerator<string> {
  const body = response.body;
  if (!body) return;
  const reader = body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  for (;;) {
    const { done, value } = await reader.read();
    if (done) break;
    buffer += decoder.decode(value, { stream: true });
    let newline: number;
    while ((newline = buffer.indexOf("\n")) >= 0) {
      const line = buffer.slice(0, newline).trim();
      buffer = buffer.slice(newline + 1);
      if (line) yield line;
    }
  }
  const tail = buffer.trim();
  if (tail) yield tail;
}

export interface SubscribeOptions {
  /** Max reconnect attempts after disconnects (terminal stops earlier). */
  maxReconnects?: number;
  /** Delay between reconnects, ms. */
  retryDelayMs?: number;
}

/** Follow a run's event stream into `store` until the run is terminal.
 *
 * Disconnects (network errors, truncated bodies) trigger reconnection with
 * the last-seen offset; the server replays the gap.
 */
export async function subscribe(
  api: ApiClient,
  runId: string,
  store: FrameStore,
  options: SubscribeOptions = {},
): Promise<void> {
  const maxReconnects = options.maxReconnects ?? 20;
  const retryDelayMs = options.retryDelayMs ?? 10;
  let reconnects = 0;

  while (!store.terminal) {
    try {
      const response = await api.openEvents(runId, store.lastSeq);
      for await (const line of ndjsonLines(response)) {
        store.push(JSON.parse(line) as EventFrame);
      }
      if (store.terminal) return;
    } catch (error) {
      if (error instanceof Error && error.message.startsWith("frame gap")) throw error;
      // fall through to reconnect
    }
    reconnects += 1;
    if (reconnects > maxReconnects) {
      throw new Error(`stream did not reach a terminal stage after ${maxReconnects} reconnects`);
    }
    await new Promise((resolve) => setTimeout(resolve, retryDelayMs));
  }
}
