/** Hypothesis board: cards with the full five-component breakdown, tier
 * badges, lineage breadcrumbs, a text filter, and transformation controls.
 *
 * Every mutation round-trips through the API; nothing is fabricated
 * client-side. API errors surface verbatim with their machine code.
 */

import { ApiClient, ApiError } from "./api";
import { TIER_BADGE_COLORS, type HypothesisDocument, type Tier } from "./types";

const CAMP_FIELDS: Array<[label: string, key: keyof HypothesisDocument & string]> = [
  ["Context", "Context"],
  ["A", "A"],
  ["B", "B"],
  ["Mechanism", "Mechanism"],
  ["Pattern", "Pattern"],
];

export class HypothesisBoard {
  private hypotheses: HypothesisDocument[] = [];
  private filterText = "";

  constructor(
    private readonly api: ApiClient,
    private readonly container: HTMLElement,
  ) {}

  async refresh(): Promise<void> {
    this.hypotheses = await this.api.listHypotheses();
    this.render();
  }

  setFilter(text: string): void {
    this.filterText = text.toLowerCase();
    this.render();
  }

  visible(): HypothesisDocument[] {
    if (!this.filterText) return this.hypotheses;
    return this.hypotheses.filter((h) =>
      [h.Title ?? "", h.Context, h.A, h.B, h.Mechanism, h.Pattern]
        .join("\n")
        .toLowerCase()
        .includes(this.filterText),
    );
  }

  /** Trigger a transformation; the new card comes from the server response. */
  async transform(
    hypothesisId: string,
    type: string,
    params: { otherParentId?: string; targetContext?: string; seed?: number } = {},
  ): Promise<HypothesisDocument> {
    if (type === "ContextTransfer" && !params.targetContext?.trim()) {
      throw new Error("validation: target context must not be empty");
    }
    if (type === "Recombination" && !params.otherParentId) {
      throw new Error("validation: recombination needs a second parent");
    }
    try {
      const child = await this.api.transform(hypothesisId, {
        type,
        other_parent_id: params.otherParentId,
        target_context: params.targetContext,
        seed: params.seed ?? 0,
      });
      this.hypotheses = [...this.hypotheses, child];
      this.render();
      return child;
    } catch (error) {
      this.renderError(error);
      throw error;
    }
  }

  render(): void {
    this.container.textContent = "";

    const filter = document.createElement("input");
    filter.className = "board-filter";
    filter.placeholder = "filter hypotheses";
    filter.value = this.filterText;
    filter.addEventListener("input", () => this.setFilter(filter.value));
    this.container.appendChild(filter);

    const grid = document.createElement("div");
    grid.className = "board-grid";
    for (const h of this.visible()) {
      grid.appendChild(this.renderCard(h));
    }
    this.container.appendChild(grid);
  }

  private renderCard(h: HypothesisDocument): HTMLElement {
    const card = document.createElement("article");
    card.className = "hypothesis-card";
    card.dataset.id = h.Id;

    const title = document.createElement("h3");
    title.textContent = h.Title ?? h.Id;
    card.appendChild(title);

    if (h.Tier) {
      const badge = document.createElement("span");
      badge.className = "tier-badge";
      badge.dataset.tier = h.Tier;
      badge.style.backgroundColor = TIER_BADGE_COLORS[h.Tier as Tier];
      badge.textContent = h.Tier;
      card.appendChild(badge);
    }
    if (h.InnovationType) {
      const innovation = document.createElement("span");
      innovation.className = "innovation-badge";
      innovation.textContent = h.InnovationType;
      card.appendChild(innovation);
    }

    const fields = document.createElement("dl");
    fields.className = "camp-fields";
    for (const [label, key] of CAMP_FIELDS) {
      const term = document.createElement("dt");
      term.textContent = label;
      const detail = document.createElement("dd");
      detail.dataset.field = key;
      detail.textContent = String(h[key] ?? "");
      fields.appendChild(term);
      fields.appendChild(detail);
    }
    card.appendChild(fields);

    const breadcrumb = document.createElement("p");
    breadcrumb.className = "lineage-breadcrumb";
    const parents = h.Lineage?.Parents ?? [];
    breadcrumb.textContent = parents.length
      ? `gen ${h.Lineage.Generation} ← ${parents.join(" + ")}`
      : "seed hypothesis";
    card.appendChild(breadcrumb);

    return card;
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
