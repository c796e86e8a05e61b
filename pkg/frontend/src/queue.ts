import { escapeHtml } from "./highlight.js";
import type { QueueFilters } from "./state.js";
import type { RecordPage, SummaryRow } from "./types.js";

function chip(category: string, uncertain: boolean): string {
  const badge = uncertain ? `<sup class="badge-uncertain">?</sup>` : "";
  return `<span class="chip">${escapeHtml(category)}${badge}</span>`;
}

function row(record: SummaryRow): string {
  const chips = record.categories
    .map((c) => chip(c.category, c.flags.includes("UNCERTAIN")))
    .join(" ");
  const quick =
    record.status === "pending"
      ? `<button data-action="quick-accept" data-id="${escapeHtml(record.admission_id)}">accept</button>`
      : "";
  return `<tr data-id="${escapeHtml(record.admission_id)}">
    <td><a href="#/record/${encodeURIComponent(record.admission_id)}">${escapeHtml(record.admission_id)}</a></td>
    <td><span class="status status-${record.status}">${record.status}</span></td>
    <td>${chips || "<em>no suggestion</em>"}</td>
    <td>${quick}</td>
  </tr>`;
}

export function renderQueue(page: RecordPage, filters: QueueFilters): string {
  const rows = page.records.map(row).join("\n");
  const lastPage = Math.max(1, Math.ceil(page.total / page.per));
  const pager = `
    <div class="pager">
      <button data-action="page" data-page="${page.page - 1}" ${page.page <= 1 ? "disabled" : ""}>prev</button>
      <span>page ${page.page} of ${lastPage} (${page.total} records)</span>
      <button data-action="page" data-page="${page.page + 1}" ${page.page >= lastPage ? "disabled" : ""}>next</button>
    </div>`;
  return `
  <section class="queue">
    <form id="queue-filters" data-action="filter">
      <label>status
        <select name="status">
          <option value="" ${filters.status === "" ? "selected" : ""}>all</option>
          <option value="pending" ${filters.status === "pending" ? "selected" : ""}>pending</option>
          <option value="decided" ${filters.status === "decided" ? "selected" : ""}>decided</option>
          <option value="deferred" ${filters.status === "deferred" ? "selected" : ""}>deferred</option>
        </select>
      </label>
      <label>category
        <input name="category" value="${escapeHtml(filters.category)}" placeholder="e.g. CRANIAL:TRAUMA" />
      </label>
      <button type="submit">apply</button>
    </form>
    <table class="queue-table">
      <thead><tr><th>admission</th><th>status</th><th>suggested categories</th><th></th></tr></thead>
      <tbody>${rows || `<tr><td colspan="4"><em>no records match</em></td></tr>`}</tbody>
    </table>
    ${pager}
  </section>`;
}
