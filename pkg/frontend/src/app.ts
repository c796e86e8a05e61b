import { Api, ApiError, isNetworkError } from "./api.js";
import { escapeHtml } from "./highlight.js";
import { renderMetrics } from "./metrics.js";
import { renderQueue } from "./queue.js";
import { renderNotFound, renderRecordView } from "./record.js";
import { renderRefinements } from "./refinements.js";
import {
  DEFAULT_FILTERS,
  applyDecision,
  filtersToQuery,
  parseFilters,
  type QueueFilters,
} from "./state.js";
import type { DecisionAction, MetricsRow, RecordPage, RecordStatus } from "./types.js";

export type Route =
  | { view: "queue"; filters: QueueFilters }
  | { view: "record"; id: string }
  | { view: "refinements" }
  | { view: "metrics" };

/** Decode a location hash into a route; anything unrecognized is the queue. */
export function parseRoute(hash: string): Route {
  const body = hash.replace(/^#\/?/, "");
  const [path, query = ""] = body.split("?", 2) as [string, string?];
  if (path.startsWith("record/")) {
    const id = decodeURIComponent(path.slice("record/".length));
    if (id) return { view: "record", id };
  }
  if (path === "refinements") return { view: "refinements" };
  if (path === "metrics") return { view: "metrics" };
  if (path === "" || path === "queue") {
    return { view: "queue", filters: parseFilters(query ?? "") };
  }
  return { view: "queue", filters: { ...DEFAULT_FILTERS } };
}

export function queueHash(filters: QueueFilters): string {
  const query = filtersToQuery(filters);
  return query ? `#/queue?${query}` : "#/queue";
}

interface AppElements {
  nav: HTMLElement;
  banner: HTMLElement;
  main: HTMLElement;
  footer: HTMLElement;
}

export class App {
  private filters: QueueFilters = { ...DEFAULT_FILTERS };
  // last queue page, so a quick-accept can move its row without a refetch
  private queuePage: RecordPage | null = null;

  constructor(
    private readonly api: Api,
    private readonly el: AppElements,
  ) {}

  start(): void {
    window.addEventListener("hashchange", () => void this.route());
    this.el.main.addEventListener("click", (ev) => void this.onClick(ev));
    this.el.main.addEventListener("submit", (ev) => void this.onSubmit(ev));
    void this.route();
  }

  private async route(): Promise<void> {
    const route = parseRoute(window.location.hash);
    this.renderNav(route.view);
    this.clearBanner();
    try {
      switch (route.view) {
        case "queue":
          this.filters = route.filters;
          await this.showQueue();
          break;
        case "record":
          await this.showRecord(route.id);
          break;
        case "refinements":
          await this.showRefinements();
          break;
        case "metrics":
          await this.showMetrics();
          break;
      }
    } catch (err) {
      this.showError(err);
    }
    this.renderFooter();
  }

  private async showQueue(): Promise<void> {
    const page = await this.api.listRecords(this.filters);
    this.queuePage = page;
    this.el.main.innerHTML = renderQueue(page, this.filters);
  }

  private async showRecord(id: string): Promise<void> {
    try {
      const detail = await this.api.recordDetail(id);
      this.el.main.innerHTML = renderRecordView(detail);
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        this.el.main.innerHTML = renderNotFound(id);
        return;
      }
      throw err;
    }
  }

  private async showRefinements(): Promise<void> {
    const list = await this.api.listRefinements();
    this.el.main.innerHTML = renderRefinements(
      list,
      this.api.exportRefinementsUrl("lexicon"),
      this.api.exportRefinementsUrl("rule"),
    );
  }

  private async showMetrics(): Promise<void> {
    const rows = new Map<string, MetricsRow>();
    for (const standard of ["A", "B", "C"]) {
      rows.set(standard, await this.api.metrics(standard));
    }
    this.el.main.innerHTML = renderMetrics(rows);
  }

  private async onClick(ev: Event): Promise<void> {
    const target = (ev.target as HTMLElement).closest<HTMLElement>("[data-action]");
    if (!target) return;
    const action = target.dataset.action;
    if (action === "page") {
      ev.preventDefault();
      const page = Number(target.dataset.page);
      if (Number.isInteger(page) && page >= 1) {
        this.filters = { ...this.filters, page };
        window.location.hash = queueHash(this.filters);
      }
    } else if (action === "quick-accept") {
      ev.preventDefault();
      await this.quickAccept(target.dataset.id ?? "");
    } else if (action === "retry") {
      ev.preventDefault();
      await this.route();
    }
  }

  private async quickAccept(id: string): Promise<void> {
    if (!id) return;
    try {
      const response = await this.api.postDecision(id, "ACCEPT", [], "");
      if (this.queuePage) {
        this.queuePage = applyDecision(this.queuePage, this.filters, id, response.status);
        this.el.main.innerHTML = renderQueue(this.queuePage, this.filters);
      }
      this.renderFooter();
    } catch (err) {
      this.showError(err);
    }
  }

  private async onSubmit(ev: Event): Promise<void> {
    const form = ev.target as HTMLFormElement;
    const action = form.dataset.action;
    if (!action) return;
    ev.preventDefault();
    if (action === "filter") {
      const data = new FormData(form);
      this.filters = {
        ...DEFAULT_FILTERS,
        status: String(data.get("status") ?? ""),
        category: String(data.get("category") ?? "").trim(),
      };
      const next = queueHash(this.filters);
      // assigning an identical hash fires no hashchange event
      const changed = window.location.hash !== next;
      window.location.hash = next;
      if (!changed) await this.route();
    } else if (action === "decide") {
      await this.submitDecision(form);
    } else if (action === "refine") {
      await this.submitRefinement(form);
    }
  }

  private async submitDecision(form: HTMLFormElement): Promise<void> {
    const id = form.dataset.id ?? "";
    const data = new FormData(form);
    const action = String(data.get("action") ?? "ACCEPT") as DecisionAction;
    const categories = String(data.get("categories") ?? "")
      .split(",")
      .map((c) => c.trim())
      .filter(Boolean);
    const comment = String(data.get("comment") ?? "");
    const ack = form.querySelector("#decision-ack");
    try {
      const response = await this.api.postDecision(id, action, categories, comment);
      // only mark saved once the server has journaled the decision
      if (ack) ack.textContent = `saved (now ${response.status})`;
      await this.showRecord(id);
      this.renderFooter();
    } catch (err) {
      if (err instanceof ApiError && err.status === 400) {
        if (ack) {
          ack.textContent = err.detail;
          ack.classList.add("problem");
        }
        return;
      }
      this.showError(err);
    }
  }

  private async submitRefinement(form: HTMLFormElement): Promise<void> {
    const data = new FormData(form);
    const kind = String(data.get("kind") ?? "lexicon");
    const problem = form.querySelector("#refinement-problem");
    const payload =
      kind === "rule"
        ? ({ kind: "rule", text: String(data.get("text") ?? "") } as const)
        : ({ kind: "lexicon", line: String(data.get("line") ?? "") } as const);
    try {
      await this.api.postRefinement(payload);
      await this.showRefinements();
      this.renderFooter();
    } catch (err) {
      if (err instanceof ApiError && err.status === 400) {
        if (problem) problem.textContent = err.detail;
        return;
      }
      this.showError(err);
    }
  }

  private renderNav(active: Route["view"]): void {
    const links: Array<[Route["view"], string, string]> = [
      ["queue", "#/queue", "queue"],
      ["refinements", "#/refinements", "refinements"],
      ["metrics", "#/metrics", "metrics"],
    ];
    this.el.nav.innerHTML = links
      .map(
        ([view, href, label]) =>
          `<a href="${href}" class="${view === active ? "active" : ""}">${label}</a>`,
      )
      .join(" ");
  }

  private renderFooter(): void {
    const versions = this.api.lastVersions;
    this.el.footer.innerHTML = versions
      ? `lexicon <code>${escapeHtml(versions.lexicon)}</code> &middot; ruleset <code>${escapeHtml(versions.ruleset)}</code> &middot; <a href="${escapeHtml(this.api.exportDecisionsUrl())}" download="decisions.jsonl">export decisions</a>`
      : "";
  }

  private showError(err: unknown): void {
    const message = isNetworkError(err)
      ? "The review service is unreachable. Is it running?"
      : err instanceof ApiError
        ? err.detail
        : "Something went wrong.";
    this.el.banner.innerHTML = `<span>${escapeHtml(message)}</span> <button data-action="retry">retry</button>`;
    this.el.banner.hidden = false;
  }

  private clearBanner(): void {
    this.el.banner.innerHTML = "";
    this.el.banner.hidden = true;
  }
}

export function mount(): void {
  const api = new Api("");
  const el: AppElements = {
    nav: document.getElementById("nav") as HTMLElement,
    banner: document.getElementById("banner") as HTMLElement,
    main: document.getElementById("main") as HTMLElement,
    footer: document.getElementById("footer") as HTMLElement,
  };
  // the banner's retry button sits outside main, so delegate there too
  el.banner.addEventListener("click", (ev) => {
    const target = (ev.target as HTMLElement).closest("[data-action='retry']");
    if (target) window.location.reload();
  });
  new App(api, el).start();
}

if (typeof document !== "undefined" && document.getElementById("main")) {
  mount();
}
