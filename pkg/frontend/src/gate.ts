/** Gate panel: the critic's review next to approve / reject / edit controls.
 *
 * The editor is a five-field structured form; submission is blocked
 * client-side while any component is empty, so schema violations cannot be
 * produced at the source. A 409 from the server (run advanced elsewhere)
 * renders a stale-gate refresh prompt. Decisions are never applied
 * optimistically; the timeline only moves on the server's gate_resolved.
 */

import { ApiClient, ApiError } from "./api";
import type { CampEdit, ReviewDocument, StageEvent } from "./types";

const EDIT_FIELDS: Array<keyof CampEdit & string> = [
  "Context",
  "A",
  "B",
  "Mechanism",
  "Pattern",
];

export class GatePanel {
  onResolved: ((event: StageEvent) => void) | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly runId: string,
    private readonly container: HTMLElement,
  ) {}

  renderReview(review: ReviewDocument): void {
    this.container.textContent = "";

    const decision = document.createElement("h3");
    decision.className = "review-decision";
    decision.dataset.decision = review.Review.Decision;
    decision.textContent = `Decision: ${review.Review.Decision}`;
    this.container.appendChild(decision);

    const scores = document.createElement("ul");
    scores.className = "review-scores";
    for (const [label, value] of [
      ["Rating", review.Review.Rating],
      ["Soundness", review.Review.Soundness],
      ["Presentation", review.Review.Presentation],
      ["Contribution", review.Review.Contribution],
    ] as const) {
      const item = document.createElement("li");
      item.dataset.score = label;
      item.textContent = `${label}: ${value}`;
      scores.appendChild(item);
    }
    this.container.appendChild(scores);

    for (const [heading, cls, items] of [
      ["Strengths", "review-strengths", review.Strengths],
      ["Weaknesses", "review-weaknesses", review.Weaknesses],
      ["Suggestions", "review-suggestions", review.Suggestions],
    ] as const) {
      const head = document.createElement("h4");
      head.textContent = heading;
      this.container.appendChild(head);
      const list = document.createElement("ul");
      list.className = cls;
      for (const text of items) {
        const item = document.createElement("li");
        item.textContent = text;
        list.appendChild(item);
      }
      this.container.appendChild(list);
    }

    this.renderControls();
  }

  private renderControls(): void {
    const controls = document.createElement("div");
    controls.className = "gate-controls";

    const approve = document.createElement("button");
    approve.className = "gate-approve";
    approve.textContent = "Approve";
    approve.addEventListener("click", () => void this.submit("approve"));
    controls.appendChild(approve);

    const reject = document.createElement("button");
    reject.className = "gate-reject";
    reject.textContent = "Reject";
    reject.addEventListener("click", () => void this.submit("reject"));
    controls.appendChild(reject);

    this.container.appendChild(controls);
  }

  /** Validate the structured editor; null means the form is submittable. */
  editProblems(edit: CampEdit): string[] {
    return EDIT_FIELDS.filter((field) => !(edit[field] ?? "").trim()).map(
      (field) => `${field} must not be empty`,
    );
  }

  async submit(verdict: "approve" | "reject"): Promise<StageEvent | null> {
    return this.send(verdict, undefined);
  }

  /** Submit an edit; blocked locally while any component is empty. */
  async submitEdit(edit: CampEdit): Promise<StageEvent | null> {
    const problems = this.editProblems(edit);
    if (problems.length > 0) {
      this.renderBlocked(problems);
      return null;
    }
    return this.send("edit", { ...edit });
  }

  private async send(
    verdict: "approve" | "reject" | "edit",
    edited: Record<string, unknown> | undefined,
  ): Promise<StageEvent | null> {
    try {
      const event = await this.api.submitGate(this.runId, verdict, edited);
      this.onResolved?.(event);
      return event;
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.renderStaleGate();
        return null;
      }
      this.renderError(error);
      throw error;
    }
  }

  private renderBlocked(problems: string[]): void {
    const banner = document.createElement("div");
    banner.className = "edit-blocked";
    banner.textContent = problems.join("; ");
    this.container.prepend(banner);
  }

  private renderStaleGate(): void {
    const banner = document.createElement("div");
    banner.className = "stale-gate";
    banner.textContent = "This run advanced elsewhere — refresh to continue.";
    this.container.prepend(banner);
  }

  private renderError(error: unknown): void {
    const banner = document.createElement("div");
    banner.className = "error-banner";
    if (error instanceof ApiError) {
      banner.dataset.code = error.code;
      banner.textContent = `${error.code}: ${error.message}`;
    } else {
      banner.textContent = String(error);
    }
    this.container.prepend(banner);
  }
}
