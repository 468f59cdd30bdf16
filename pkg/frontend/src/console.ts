/** Console entry point: wires the board, gate panel, and live timeline.
 *
 * All state derives from the API and the event stream; the only client-side
 * persistence is the stream's last-seen offset (held in the FrameStore).
 */

import { ApiClient } from "./api";
import { HypothesisBoard } from "./board";
import { GatePanel } from "./gate";
import { FrameStore, subscribe } from "./stream";
import { reduceTimeline, renderTimeline } from "./timeline";

export interface ConsoleHandles {
  store: FrameStore;
  board: HypothesisBoard;
  gate: GatePanel;
  done: Promise<void>;
}

export function mountConsole(
  api: ApiClient,
  runId: string,
  roots: { board: HTMLElement; gate: HTMLElement; timeline: HTMLElement },
): ConsoleHandles {
  const store = new FrameStore();
  const board = new HypothesisBoard(api, roots.board);
  const gate = new GatePanel(api, runId, roots.gate);

  store.onFrame(() => {
    renderTimeline(reduceTimeline(store.all()), roots.timeline);
  });

  const done = subscribe(api, runId, store);
  void board.refresh();
  return { store, board, gate, done };
}

export function bootstrap(): void {
  const params = new URLSearchParams(window.location.search);
  const runId = params.get("run");
  if (!runId) {
    document.body.textContent = "pass ?run=<run id>";
    return;
  }
  const api = new ApiClient(params.get("api") ?? "");
  const roots = {
    board: document.getElementById("board")!,
    gate: document.getElementById("gate")!,
    timeline: document.getElementById("timeline")!,
  };
  mountConsole(api, runId, roots);
}

if (typeof document !== "undefined" && document.getElementById("timeline")) {
  bootstrap();
}
