// Wire types for the review service. Field names mirror the JSON exactly;
// offsets in SpanTag/Evidence are char positions into the *prepared* text.

export interface Versions {
  lexicon: string;
  ruleset: string;
}

export interface CategoryChip {
  category: string;
  rule_id: string;
  flags: string[];
}

export interface SummaryRow {
  admission_id: string;
  status: RecordStatus;
  categories: CategoryChip[];
  uncertain: boolean;
  flags: string[];
}

export type RecordStatus = "pending" | "decided" | "deferred";

export interface RecordPage {
  page: number;
  per: number;
  total: number;
  records: SummaryRow[];
  versions: Versions;
}

export interface SpanTag {
  start: number;
  end: number;
  token_start: number;
  token_end: number;
  kind: string;
  payload: string;
}

export interface EvidenceWitness {
  term: string;
  token: number;
  start: number;
  end: number;
}

export interface Evidence {
  trigger_text: string;
  start: number;
  end: number;
  witnesses: EvidenceWitness[];
  uncertain: boolean;
}

export interface CategoryDetail extends CategoryChip {
  evidence: Evidence[];
}

export interface DecisionEvent {
  seq: number;
  admission_id: string;
  action: DecisionAction;
  categories: string[];
  comment: string;
  reviewer: string;
  timestamp: string;
}

export type DecisionAction = "ACCEPT" | "OVERRIDE" | "DEFER";

export interface RecordDetail {
  admission_id: string;
  status: RecordStatus;
  note: string;
  prepared: string;
  tags: SpanTag[];
  categories: CategoryDetail[];
  decision: DecisionEvent | null;
  history: DecisionEvent[];
  final_categories: string[] | null;
  versions: Versions;
}

export interface DecisionResponse {
  decision: DecisionEvent;
  status: RecordStatus;
  final_categories: string[] | null;
  versions: Versions;
}

export interface RefinementEvent {
  seq: number;
  kind: "lexicon" | "rule";
  reviewer: string;
  timestamp: string;
  // lexicon refinements
  entry?: Record<string, unknown>;
  line?: string;
  // rule refinements
  rule_id?: string;
  text?: string;
}

export interface RefinementList {
  pending: RefinementEvent[];
  total: number;
  versions: Versions;
}

export interface MetricsRow {
  standard: string;
  tp: number;
  fp: number;
  fn: number;
  tn: number;
  precision_pct: number | null;
  recall_pct: number | null;
  f_pct: number | null;
  recoded: number;
  records: number;
  tiers: Record<string, number>;
  decided: number;
  versions: Versions;
}
