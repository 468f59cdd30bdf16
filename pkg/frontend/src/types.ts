/** Wire types mirroring the engine's canonical JSON serializations. */

export type Stage =
  | "Ideation"
  | "Critique"
  | "AwaitingHumanGate"
  | "DataSearch"
  | "Analysis"
  | "Writing"
  | "Done"
  | "Failed";

export type EventKind =
  | "entered"
  | "completed"
  | "failed"
  | "gate_requested"
  | "gate_resolved";

export interface StageEvent {
  seq: number;
  ts: number;
  stage: Stage;
  kind: EventKind;
  payload: Record<string, unknown>;
  schema_version: number;
}

export interface EventFrame {
  run_id: string;
  seq: number;
  event: StageEvent;
}

export type Tier = "Tier1" | "Tier2" | "Tier3" | "Tier4" | "Reject";

/** Canonical hypothesis document (engine key names). */
export interface HypothesisDocument {
  Context: string;
  A: string;
  B: string;
  Mechanism: string;
  Pattern: string;
  InnovationType?: string;
  "Innovation rationale"?: string;
  WhyItMatters?: string;
  Title?: string;
  Abstract?: string;
  Id: string;
  Status: string;
  Tier?: Tier;
  Lineage: { Parents: string[]; Transformation: string | null; Generation: number };
  [extra: string]: unknown;
}

export interface ReviewDocument {
  Paper?: Record<string, unknown>;
  Review: {
    Decision: Tier;
    Rating: number;
    Soundness: number;
    Presentation: number;
    Contribution: number;
  };
  Summary?: unknown;
  Strengths: string[];
  Weaknesses: string[];
  Suggestions: string[];
  [extra: string]: unknown;
}

export interface RunView {
  run_id: string;
  stage: Stage;
  artifacts: Record<string, string[]>;
  gate_decisions: Array<Record<string, unknown>>;
  last_seq: number;
  config: Record<string, unknown>;
}

export interface MatchEntry {
  card_id: string;
  score: number;
}

export interface TransformRequest {
  type: string;
  other_parent_id?: string;
  parent_ids?: string[];
  target_context?: string;
  seed?: number;
}

export type GateVerdict = "approve" | "reject" | "edit";

/** Fields the five-component editor collects for an edit verdict. */
export interface CampEdit {
  Context: string;
  A: string;
  B: string;
  Mechanism: string;
  Pattern: string;
  Title?: string;
  Abstract?: string;
}

export const TIER_BADGE_COLORS: Record<Tier, string> = {
  Tier1: "#1b7f3b",
  Tier2: "#4f9e2f",
  Tier3: "#c7a008",
  Tier4: "#c96a12",
  Reject: "#b02a2a",
};
