import type { MetricsRow } from "./types.js";

type ScalarKey = "decided" | "tp" | "fp" | "fn" | "precision_pct" | "recall_pct" | "f_pct";

const SCALAR_ROWS: ReadonlyArray<readonly [ScalarKey, string]> = [
  ["decided", "records decided"],
  ["tp", "true positives"],
  ["fp", "false positives"],
  ["fn", "false negatives"],
  ["precision_pct", "precision %"],
  ["recall_pct", "recall %"],
  ["f_pct", "F %"],
];

const TIER_ROWS: ReadonlyArray<readonly [string, string]> = [
  ["EXACT", "exact"],
  ["ROOT_GENERALIZED", "root generalized"],
  ["VALID_ALTERNATIVE", "valid alternative"],
  ["DIFFERENT", "different"],
  ["NO_MATCH", "no match"],
];

function cell(value: number | null | undefined): string {
  if (value === null || value === undefined) return "&ndash;";
  return String(value);
}

export function renderMetrics(rows: ReadonlyMap<string, MetricsRow>): string {
  const standards = ["A", "B", "C"].filter((s) => rows.has(s));
  const header = standards.map((s) => `<th>standard ${s}</th>`).join("");
  const scalars = SCALAR_ROWS.map(([key, label]) => {
    const cells = standards.map((s) => `<td>${cell(rows.get(s)![key])}</td>`).join("");
    return `<tr><th scope="row">${label}</th>${cells}</tr>`;
  });
  const tiers = TIER_ROWS.map(([key, label]) => {
    const cells = standards.map((s) => `<td>${cell(rows.get(s)!.tiers[key])}</td>`).join("");
    return `<tr class="tier"><th scope="row">${label}</th>${cells}</tr>`;
  });
  return `
  <section class="metrics">
    <h2>live metrics</h2>
    <p>Scores compare calculated categories against the pseudo-standard
       built from reviewer decisions; pending and deferred records are
       excluded.</p>
    <table>
      <thead><tr><th></th>${header}</tr></thead>
      <tbody>
        ${scalars.join("\n")}
        ${tiers.join("\n")}
      </tbody>
    </table>
  </section>`;
}
