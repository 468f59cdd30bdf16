import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { FrameStore, subscribe } from "../src/stream";
import { STAGE_ORDER, reduceTimeline, renderTimeline } from "../src/timeline";
import { RecordedBackend } from "./mock_backend";

function frames(backend: RecordedBackend, upTo?: number) {
  return backend.events
    .filter((event) => upTo === undefined || event.seq <= upTo)
    .map((event) => ({ run_id: backend.runId, seq: event.seq, event }));
}

describe("timeline reducer", () => {
  it("is a pure function of the frames", () => {
    const backend = new RecordedBackend({ startAtGate: false });
    const input = frames(backend);
    const a = reduceTimeline(input);
    const b = reduceTimeline(input);
    expect(a).toEqual(b);
  });

  it("renders chips in stage-graph order with exactly one cursor", () => {
    const backend = new RecordedBackend({ startAtGate: false });
    const view = reduceTimeline(frames(backend, 4));
    expect(view.chips.map((c) => c.stage)).toEqual([...STAGE_ORDER]);
    const container = document.createElement("div");
    renderTimeline(view, container);
    expect(container.querySelectorAll("[data-cursor='true']").length).toBe(1);
  });

  it("shows the gate banner while the run is gated", () => {
    const backend = new RecordedBackend();
    const view = reduceTimeline(frames(backend, backend.gatePauseSeq));
    expect(view.gateBanner).toBe(true);
    expect(view.cursor).toBe("AwaitingHumanGate");
  });

  it("marks the five productive stages completed on a finished run", () => {
    const backend = new RecordedBackend({ startAtGate: false });
    const view = reduceTimeline(frames(backend));
    const status = Object.fromEntries(view.chips.map((c) => [c.stage, c.status]));
    for (const stage of ["Ideation", "Critique", "DataSearch", "Analysis", "Writing", "Done"]) {
      expect(status[stage]).toBe("completed");
    }
    expect(view.cursor).toBe("Done");
    expect(view.gateBanner).toBe(false);
  });
});

describe("live timeline against the recorded backend", () => {
  it("renders the exact event log across a forced mid-run disconnect", async () => {
    const backend = new RecordedBackend();
    backend.dropNextStreamAfter = 3; // first connection dies after 3 frames
    const api = new ApiClient("", backend.fetch);
    const store = new FrameStore();
    const container = document.createElement("div");
    store.onFrame(() => renderTimeline(reduceTimeline(store.all()), container));

    const done = subscribe(api, backend.runId, store, {
      maxReconnects: 200,
      retryDelayMs: 1,
    });

    // let the stream reach the gate pause, then approve through the API
    await new Promise((resolve) => setTimeout(resolve, 20));
    expect(store.lastSeq).toBe(backend.gatePauseSeq);
    await api.submitGate(backend.runId, "approve");
    await done;

    // rendered event list equals the server log: order and count
    const rendered = [...container.querySelectorAll(".event-list li")].map((li) =>
      Number((li as HTMLElement).dataset.seq),
    );
    expect(rendered).toEqual(backend.events.map((event) => event.seq));
    expect(rendered.length).toBe(backend.events.length);

    // no missing or duplicated events after the reconnect
    expect(new Set(rendered).size).toBe(rendered.length);
  });

  it("gate approve advances the timeline to DataSearch and beyond", async () => {
    const backend = new RecordedBackend();
    const api = new ApiClient("", backend.fetch);
    const store = new FrameStore();
    const done = subscribe(api, backend.runId, store, {
      maxReconnects: 200,
      retryDelayMs: 1,
    });
    await new Promise((resolve) => setTimeout(resolve, 20));
    expect(reduceTimeline(store.all()).gateBanner).toBe(true);

    await api.submitGate(backend.runId, "approve");
    await done;
    const view = reduceTimeline(store.all());
    expect(view.cursor).toBe("Done");
    const searchChip = view.chips.find((c) => c.stage === "DataSearch");
    expect(searchChip?.status).toBe("completed");
  });

  it("replay offsets reassemble the log without duplicates", async () => {
    const backend = new RecordedBackend({ startAtGate: false });
    const api = new ApiClient("", backend.fetch);

    // first session: read everything, remember the offset mid-way
    const store = new FrameStore();
    await subscribe(api, backend.runId, store, { maxReconnects: 5, retryDelayMs: 1 });
    expect(store.all().length).toBe(backend.events.length);

    // reconnect with a replay offset: first delivered frame is offset + 1
    const response = await api.openEvents(backend.runId, 3);
    const reader = (response.body as unknown as { getReader(): { read(): Promise<{ done: boolean; value?: Uint8Array }> } }).getReader();
    const decoder = new TextDecoder();
    let text = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      if (value) text += decoder.decode(value);
    }
    const seqs = text
      .trim()
      .split("\n")
      .map((line) => JSON.parse(line).seq as number);
    expect(seqs[0]).toBe(4);
  });

  it("frame gaps are detected as protocol violations", () => {
    const backend = new RecordedBackend({ startAtGate: false });
    const store = new FrameStore();
    const all = frames(backend);
    store.push(all[0]!);
    expect(() => store.push(all[2]!)).toThrow(/frame gap/);
  });
});
