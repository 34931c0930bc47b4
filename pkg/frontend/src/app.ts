import {
  ApiClient,
  ApiError,
  FetchFn,
  FundDetail,
  SearchResponse,
  SimilarResult,
} from "./api.js";
import { debounce } from "./debounce.js";
import { compareMonths, isValidMonth } from "./months.js";
import { pairedSparkline } from "./sparkline.js";
import { LatestOnly } from "./staleGuard.js";

export interface AppConfig {
  serviceUrl: string;
  defaultK?: number;
  /** Debounce for search-as-you-type requests; tests set 0. */
  debounceMs?: number;
  fetchFn?: FetchFn;
}

interface UiState {
  selectedFund: string | null;
  useCustomRange: boolean;
  from: string;
  to: string;
  k: number;
  results: SearchResponse | null;
  expanded: Set<string>;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class App {
  readonly state: UiState;
  private readonly api: ApiClient;
  private readonly similarGuard = new LatestOnly();
  private readonly suggestGuard = new LatestOnly();
  private queryDetail: FundDetail | null = null;

  private readonly banner: HTMLDivElement;
  private readonly searchInput: HTMLInputElement;
  private readonly suggestions: HTMLUListElement;
  private readonly rangeToggle: HTMLInputElement;
  private readonly rangeControls: HTMLSpanElement;
  private readonly fromInput: HTMLInputElement;
  private readonly toInput: HTMLInputElement;
  private readonly kInput: HTMLInputElement;
  private readonly validation: HTMLSpanElement;
  private readonly querySummary: HTMLDivElement;
  private readonly resultList: HTMLUListElement;
  private readonly status: HTMLDivElement;
  private activeSuggestion = -1;

  constructor(
    readonly root: HTMLElement,
    private readonly config: AppConfig
  ) {
    this.api = new ApiClient(config.serviceUrl, config.fetchFn);
    this.state = {
      selectedFund: null,
      useCustomRange: false,
      from: "",
      to: "",
      k: config.defaultK ?? 6,
      results: null,
      expanded: new Set(),
    };

    this.banner = el("div", "banner");
    this.banner.hidden = true;

    this.searchInput = el("input", "search-input");
    this.searchInput.placeholder = "Search funds by name or id";
    this.suggestions = el("ul", "suggestions");

    this.rangeToggle = el("input", "use-custom-range");
    this.rangeToggle.type = "checkbox";
    this.fromInput = el("input", "from-input");
    this.fromInput.placeholder = "from YYYY-MM";
    this.toInput = el("input", "to-input");
    this.toInput.placeholder = "to YYYY-MM";
    this.rangeControls = el("span", "range-controls");
    this.rangeControls.hidden = true; // default mode: full range, no controls
    this.rangeControls.append(this.fromInput, this.toInput);

    this.kInput = el("input", "k-input");
    this.kInput.type = "number";
    this.kInput.min = "0";
    this.kInput.value = String(this.state.k);

    this.validation = el("span", "validation");
    this.validation.hidden = true;

    this.querySummary = el("div", "query-summary");
    this.resultList = el("ul", "results");
    this.status = el("div", "status");

    const search = el("div", "search");
    search.append(this.searchInput, this.suggestions);
    const toggleLabel = el("label", "range-toggle");
    toggleLabel.append(this.rangeToggle, document.createTextNode(" custom range"));
    const controls = el("div", "controls");
    controls.append(toggleLabel, this.rangeControls, this.kInput, this.validation);
    root.append(this.banner, search, controls, this.querySummary,
                this.resultList, this.status);

    this.wireEvents();
  }

  private wireEvents(): void {
    const debouncedSuggest = debounce(
      (text: string) => void this.suggest(text),
      this.config.debounceMs ?? 300
    );
    this.searchInput.addEventListener("input", () => {
      const text = this.searchInput.value.trim();
      if (text === "") {
        debouncedSuggest.cancel(); // empty box issues no request
        this.renderSuggestions([]);
        return;
      }
      debouncedSuggest(text);
    });
    this.searchInput.addEventListener("keydown", (event) => {
      const items = Array.from(this.suggestions.children) as HTMLLIElement[];
      if (!items.length) return;
      if (event.key === "ArrowDown" || event.key === "ArrowUp") {
        event.preventDefault();
        const delta = event.key === "ArrowDown" ? 1 : -1;
        this.activeSuggestion =
          (this.activeSuggestion + delta + items.length) % items.length;
        items.forEach((item, i) =>
          item.classList.toggle("active", i === this.activeSuggestion)
        );
      } else if (event.key === "Enter" && this.activeSuggestion >= 0) {
        event.preventDefault();
        items[this.activeSuggestion].dispatchEvent(new MouseEvent("click", {
          bubbles: true,
        }));
      }
    });

    this.rangeToggle.addEventListener("change", () => {
      this.state.useCustomRange = this.rangeToggle.checked;
      this.rangeControls.hidden = !this.state.useCustomRange;
      this.requery();
    });
    for (const input of [this.fromInput, this.toInput]) {
      input.addEventListener("input", () => this.requery());
    }
    this.kInput.addEventListener("input", () => this.requery());
  }

  private showBanner(message: string): void {
    this.banner.textContent = message;
    this.banner.hidden = false;
  }

  private clearBanner(): void {
    this.banner.hidden = true;
    this.banner.textContent = "";
  }

  private async suggest(text: string): Promise<void> {
    const token = this.suggestGuard.issue();
    try {
      const page = await this.api.listFunds(text);
      if (!this.suggestGuard.isCurrent(token)) return;
      this.clearBanner();
      this.renderSuggestions(page.funds.map((f) => ({
        id: f.fund_id,
        label: `${f.name} (${f.fund_id})`,
      })));
    } catch (error) {
      if (!this.suggestGuard.isCurrent(token)) return;
      this.showBanner(`service unavailable: ${(error as Error).message}`);
    }
  }

  private renderSuggestions(items: { id: string; label: string }[]): void {
    this.suggestions.replaceChildren();
    this.activeSuggestion = -1;
    if (!items.length) {
      if (this.searchInput.value.trim() !== "") {
        this.suggestions.append(el("li", "no-funds", "no funds found"));
      }
      return;
    }
    for (const item of items) {
      const li = el("li", "suggestion", item.label);
      li.dataset.fundId = item.id;
      li.addEventListener("click", () => void this.selectFund(item.id));
      this.suggestions.append(li);
    }
  }

  async selectFund(fundId: string): Promise<void> {
    this.state.selectedFund = fundId;
    this.state.expanded.clear();
    this.queryDetail = null;
    this.suggestions.replaceChildren();
    this.searchInput.value = fundId;
    await this.requery();
  }

  /** Validate controls, then issue a fresh similar request. */
  async requery(): Promise<void> {
    if (!this.state.selectedFund) return;
    this.validation.hidden = true;

    let from = "";
    let to = "";
    if (this.state.useCustomRange) {
      from = this.fromInput.value.trim();
      to = this.toInput.value.trim();
      if ((from && !isValidMonth(from)) || (to && !isValidMonth(to))) {
        this.showValidation("months must be YYYY-MM");
        return;
      }
      if (from && to && compareMonths(from, to) > 0) {
        this.showValidation("from must not be after to");
        return;
      }
    }
    const k = Number(this.kInput.value);
    if (!Number.isInteger(k) || k < 0) {
      this.showValidation("k must be a non-negative integer");
      return;
    }
    this.state.from = from;
    this.state.to = to;
    this.state.k = k;

    const token = this.similarGuard.issue();
    try {
      const response = await this.api.similar(
        this.state.selectedFund, { from, to }, k
      );
      if (!this.similarGuard.isCurrent(token)) return; // superseded
      this.clearBanner();
      this.state.results = response;
      this.renderResults(response);
    } catch (error) {
      if (!this.similarGuard.isCurrent(token)) return;
      if (error instanceof ApiError) {
        this.showBanner(`${error.code}: ${error.message}`);
      } else {
        this.showBanner(`service unavailable: ${(error as Error).message}`);
      }
    }
  }

  private showValidation(message: string): void {
    this.validation.textContent = message;
    this.validation.hidden = false;
  }

  /** Rows appear exactly in response order; nothing is re-sorted here. */
  private renderResults(response: SearchResponse): void {
    const q = response.query;
    this.querySummary.textContent =
      `${q.fund.name} (${q.fund.fund_id}) ${q.from}..${q.to}`;
    this.resultList.replaceChildren();
    for (const result of response.results) {
      this.resultList.append(this.buildRow(result, response));
    }
    this.status.textContent = response.results.length
      ? `${response.results.length} similar fund(s)`
      : "no similar funds in this range";
  }

  private buildRow(result: SimilarResult, response: SearchResponse): HTMLLIElement {
    const row = el("li", "result-row");
    row.dataset.fundId = result.fund.fund_id;
    row.dataset.counter = String(result.counter);

    const head = el("div", "result-head");
    head.append(
      el("span", "fund-name", result.fund.name),
      el("span", "fund-category", result.fund.category),
      el("span", "fund-domicile", result.fund.domicile),
      el("span", "counter",
         `${result.counter}/${result.slices_in_range} slices`),
      el("span", "correlation",
         result.r === null ? "r=n/a" : `r=${result.r.toFixed(4)}`)
    );
    const chips = el("div", "chips");
    for (const benefit of result.benefits) {
      const chip = el("span", "chip", benefit.display); // verbatim display text
      chip.dataset.kind = benefit.kind;
      chips.append(chip);
    }
    head.addEventListener("click", () => void this.toggleExpand(row, response));
    row.append(head, chips);

    if (this.state.expanded.has(result.fund.fund_id)) {
      void this.openDetail(row, response);
    }
    return row;
  }

  private async toggleExpand(
    row: HTMLLIElement, response: SearchResponse
  ): Promise<void> {
    const fundId = row.dataset.fundId!;
    if (this.state.expanded.has(fundId)) {
      this.state.expanded.delete(fundId);
      row.querySelector(".detail-panel")?.remove();
      return;
    }
    this.state.expanded.add(fundId);
    await this.openDetail(row, response);
  }

  private async openDetail(
    row: HTMLLIElement, response: SearchResponse
  ): Promise<void> {
    row.querySelector(".detail-panel")?.remove();
    const panel = el("div", "detail-panel");
    row.append(panel);
    const fundId = row.dataset.fundId!;
    try {
      const [detail, queryDetail] = await Promise.all([
        this.api.fundDetail(fundId),
        this.fetchQueryDetail(),
      ]);
      if (!this.state.expanded.has(fundId)) return; // collapsed meanwhile
      panel.replaceChildren();
      panel.append(el("h3", "detail-name", detail.name));

      const fields = el("dl", "detail-fields");
      const add = (label: string, value: string) => {
        fields.append(el("dt", undefined, label), el("dd", undefined, value));
      };
      add("Category", detail.category);
      add("Domicile", detail.domicile);
      const fmt = (v: number | null) => (v === null ? "n/a" : String(v));
      add("Management Fee", fmt(detail.management_fee));
      add("Performance Fee", fmt(detail.performance_fee));
      add("Redemption Fee", fmt(detail.redemption_fee));
      add("Sharpe Ratio", fmt(detail.sharpe_ratio));
      for (const [span, value] of Object.entries(detail.trailing_returns)) {
        add(`Return ${span}`, fmt(value));
      }
      for (const [key, value] of Object.entries(detail.extra_fields)) {
        add(key, value); // vendor fields rendered opaquely
      }
      panel.append(fields);

      panel.append(
        pairedSparkline(
          queryDetail.returns,
          detail.returns,
          response.query.from,
          response.query.to
        )
      );
    } catch (error) {
      // panel-level failure: the results list stays intact
      panel.replaceChildren(
        el("div", "detail-error",
           `could not load details: ${(error as Error).message}`)
      );
    }
  }

  private async fetchQueryDetail(): Promise<FundDetail> {
    if (!this.queryDetail) {
      this.queryDetail = await this.api.fundDetail(this.state.selectedFund!);
    }
    return this.queryDetail;
  }
}

export function createApp(root: HTMLElement, config: AppConfig): App {
  return new App(root, config);
}
