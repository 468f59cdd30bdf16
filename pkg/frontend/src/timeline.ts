/** The run timeline is a pure function of the received event frames. */

import type { EventFrame, Stage } from "./types";

export const STAGE_ORDER: readonly Stage[] = [
  "Ideation",
  "Critique",
  "AwaitingHumanGate",
  "DataSearch",
  "Analysis",
  "Writing",
  "Done",
];

export type ChipStatus = "pending" | "active" | "completed" | "failed";

export interface StageChip {
  stage: Stage;
  status: ChipStatus;
}

export interface TimelineView {
  chips: StageChip[];
  /** Stage carrying the single live cursor. */
  cursor: Stage;
  gateBanner: boolean;
  failed: boolean;
  failureCause: string | null;
  /** Every received event, in log order, for the event list. */
  entries: Array<{ seq: number; stage: Stage; kind: string }>;
}

export function reduceTimeline(frames: readonly EventFrame[]): TimelineView {
  let current: Stage | null = null;
  let failed = false;
  let failureCause: string | null = null;
  const completed = new Set<Stage>();
  const entries: TimelineView["entries"] = [];

  for (const frame of frames) {
    const event = frame.event;
    entries.push({ seq: event.seq, stage: event.stage, kind: event.kind });
    if (event.kind === "entered") {
      current = event.stage;
    } else if (event.kind === "completed") {
      completed.add(event.stage);
    } else if (event.kind === "failed") {
      failed = true;
      failureCause = String(event.payload["cause"] ?? "unknown");
      current = "Failed";
    }
  }

  const cursor: Stage = current ?? "Ideation";
  const chips: StageChip[] = STAGE_ORDER.map((stage) => {
    let status: ChipStatus = "pending";
    if (completed.has(stage) || (stage === "Done" && cursor === "Done")) status = "completed";
    if (stage === cursor && stage !== "Done") status = failed ? "failed" : "active";
    if (stage === "AwaitingHumanGate" && isPastGate(cursor)) status = "completed";
    return { stage, status };
  });

  return {
    chips,
    cursor,
    gateBanner: cursor === "AwaitingHumanGate",
    failed,
    failureCause,
    entries,
  };
}

function isPastGate(cursor: Stage): boolean {
  const gateIndex = STAGE_ORDER.indexOf("AwaitingHumanGate");
  const cursorIndex = STAGE_ORDER.indexOf(cursor);
  return cursorIndex > gateIndex;
}

/** Render the timeline view into a container element. */
export function renderTimeline(view: TimelineView, container: HTMLElement): void {
  container.textContent = "";

  const strip = document.createElement("ol");
  strip.className = "timeline-strip";
  for (const chip of view.chips) {
    const item = document.createElement("li");
    item.className = `chip chip-${chip.status}`;
    item.dataset.stage = chip.stage;
    item.dataset.status = chip.status;
    item.textContent = chip.stage;
    if (chip.stage === view.cursor) {
      item.classList.add("chip-cursor");
      item.dataset.cursor = "true";
    }
    strip.appendChild(item);
  }
  container.appendChild(strip);

  if (view.gateBanner) {
    const banner = document.createElement("div");
    banner.className = "gate-banner";
    banner.textContent = "Awaiting your gate decision";
    container.appendChild(banner);
  }
  if (view.failed) {
    const banner = document.createElement("div");
    banner.className = "failure-banner";
    banner.textContent = `Run failed: ${view.failureCause}`;
    container.appendChild(banner);
  }

  const list = document.createElement("ul");
  list.className = "event-list";
  for (const entry of view.entries) {
    const item = document.createElement("li");
    item.dataset.seq = String(entry.seq);
    item.textContent = `#${entry.seq} ${entry.stage} ${entry.kind}`;
    list.appendChild(item);
  }
  container.appendChild(list);
}
