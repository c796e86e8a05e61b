import { escapeHtml } from "./highlight.js";
import type { RefinementEvent, RefinementList } from "./types.js";

function pendingRow(event: RefinementEvent): string {
  const body =
    event.kind === "lexicon"
      ? `<code>${escapeHtml(event.line ?? "")}</code>`
      : `<code>rule ${escapeHtml(event.rule_id ?? "")}</code>`;
  return `<tr>
    <td>${event.seq}</td>
    <td>${event.kind}</td>
    <td>${body}</td>
    <td>${escapeHtml(event.reviewer)}</td>
  </tr>`;
}

export function renderRefinements(
  list: RefinementList,
  exportLexiconUrl: string,
  exportRuleUrl: string,
): string {
  const rows = list.pending.map(pendingRow).join("\n");
  return `
  <section class="refinements">
    <h2>staged refinements</h2>
    <p>Proposals are validated and journaled but never change live
       classification; export them for review and a restart.</p>
    <form id="refinement" data-action="refine">
      <label>kind
        <select name="kind">
          <option value="lexicon">lexicon entry</option>
          <option value="rule">rule</option>
        </select>
      </label>
      <label>lexicon line
        <input name="line" placeholder="surface | variants | DOMAIN_CONCEPT | tag" />
      </label>
      <label>rule text
        <textarea name="text" rows="5" placeholder="[rule my-rule]&#10;category = ...&#10;triggers = ..."></textarea>
      </label>
      <button type="submit">propose</button>
      <span id="refinement-problem" class="problem"></span>
    </form>
    <table class="pending">
      <thead><tr><th>#</th><th>kind</th><th>proposal</th><th>reviewer</th></tr></thead>
      <tbody>${rows || `<tr><td colspan="4"><em>nothing staged</em></td></tr>`}</tbody>
    </table>
    <p>
      <a href="${escapeHtml(exportLexiconUrl)}" download="staged.lex">export lexicon lines</a>
      &middot;
      <a href="${escapeHtml(exportRuleUrl)}" download="staged.rules">export rule blocks</a>
    </p>
  </section>`;
}
