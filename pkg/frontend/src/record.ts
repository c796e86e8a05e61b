import { escapeHtml, renderHighlights, renderLegend } from "./highlight.js";
import type { CategoryDetail, DecisionEvent, RecordDetail } from "./types.js";

function suggestionChip(match: CategoryDetail): string {
  const badge = match.flags.includes("UNCERTAIN")
    ? `<sup class="badge-uncertain" title="uncertainty marker in scope">?</sup>`
    : "";
  const witnesses = match.evidence
    .map((ev) => {
      const terms = ev.witnesses.map((w) => escapeHtml(w.term)).join(", ");
      const where = terms ? ` &mdash; witnesses: ${terms}` : "";
      return `<li><code>${escapeHtml(ev.trigger_text)}</code>${where}${ev.uncertain ? " (uncertain)" : ""}</li>`;
    })
    .join("");
  return `<details class="chip chip-suggestion">
    <summary>${escapeHtml(match.category)}${badge} <small>rule ${escapeHtml(match.rule_id)}</small></summary>
    <ul class="evidence">${witnesses || "<li><em>trigger only</em></li>"}</ul>
  </details>`;
}

function historyRow(event: DecisionEvent): string {
  const categories = event.categories.length
    ? event.categories.map(escapeHtml).join(", ")
    : "&mdash;";
  return `<tr>
    <td>${event.seq}</td>
    <td>${escapeHtml(event.action)}</td>
    <td>${categories}</td>
    <td>${escapeHtml(event.reviewer)}</td>
    <td>${escapeHtml(event.comment) || "&mdash;"}</td>
  </tr>`;
}

export function renderRecordView(detail: RecordDetail): string {
  if (!detail.note.trim()) {
    return `<section class="record">
      <h2>${escapeHtml(detail.admission_id)}</h2>
      <p class="empty-state">This admission has no note text to review.</p>
      ${decisionControls(detail)}
    </section>`;
  }
  const chips = detail.categories.map(suggestionChip).join("\n");
  const finals = detail.final_categories
    ? `<p class="finals">final: ${detail.final_categories.map(escapeHtml).join(", ")}</p>`
    : "";
  const history = detail.history.length
    ? `<table class="history">
        <thead><tr><th>#</th><th>action</th><th>categories</th><th>reviewer</th><th>comment</th></tr></thead>
        <tbody>${detail.history.map(historyRow).join("\n")}</tbody>
      </table>`
    : "<p><em>no decisions yet</em></p>";
  return `
  <section class="record">
    <h2>${escapeHtml(detail.admission_id)}
      <span class="status status-${detail.status}">${detail.status}</span></h2>
    <h3>note as written</h3>
    <p class="note-raw">${escapeHtml(detail.note)}</p>
    <h3>prepared and tagged</h3>
    <p class="note-prepared">${renderHighlights(detail.prepared, detail.tags)}</p>
    ${renderLegend()}
    <h3>suggested categories</h3>
    <div class="suggestions">${chips || "<em>no suggestion</em>"}</div>
    ${finals}
    ${decisionControls(detail)}
    <h3>decision history</h3>
    ${history}
  </section>`;
}

function decisionControls(detail: RecordDetail): string {
  return `
  <form id="decision" data-action="decide" data-id="${escapeHtml(detail.admission_id)}">
    <label><input type="radio" name="action" value="ACCEPT" checked /> accept suggestion</label>
    <label><input type="radio" name="action" value="OVERRIDE" /> override</label>
    <label><input type="radio" name="action" value="DEFER" /> defer</label>
    <label>override categories (colon-separated, comma between entries)
      <input name="categories" placeholder="CRANIAL:TRAUMA:SDH, OTHER" />
    </label>
    <label>comment <input name="comment" /></label>
    <button type="submit">save decision</button>
    <span id="decision-ack" class="ack"></span>
  </form>`;
}

export function renderNotFound(id: string): string {
  return `<section class="record">
    <h2>not found</h2>
    <p class="empty-state">No admission <code>${escapeHtml(id)}</code> in this corpus.</p>
    <p><a href="#/queue">back to the queue</a></p>
  </section>`;
}
