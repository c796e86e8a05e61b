import type { RecordPage, RecordStatus } from "./types.js";

// Queue filter state lives in the URL hash so a view can be shared or
// reloaded; these helpers are the only place that encoding is defined.

export interface QueueFilters {
  status: string;
  category: string;
  page: number;
  per: number;
}

export const DEFAULT_FILTERS: QueueFilters = {
  status: "",
  category: "",
  page: 1,
  per: 25,
};

export function filtersToQuery(filters: QueueFilters): string {
  const params = new URLSearchParams();
  if (filters.status) params.set("status", filters.status);
  if (filters.category) params.set("category", filters.category);
  if (filters.page !== 1) params.set("page", String(filters.page));
  if (filters.per !== DEFAULT_FILTERS.per) params.set("per", String(filters.per));
  return params.toString();
}

export function parseFilters(query: string): QueueFilters {
  const params = new URLSearchParams(query);
  const page = Number(params.get("page") ?? "1");
  const per = Number(params.get("per") ?? String(DEFAULT_FILTERS.per));
  return {
    status: params.get("status") ?? "",
    category: params.get("category") ?? "",
    page: Number.isInteger(page) && page >= 1 ? page : 1,
    per: Number.isInteger(per) && per >= 1 ? per : DEFAULT_FILTERS.per,
  };
}

/**
 * Fold an acknowledged decision into a queue page without refetching.
 * The row's status updates in place; when a status filter is active and
 * the row no longer matches it, the row leaves the list and the total
 * drops. Never applied before the server acknowledges the decision.
 */
export function applyDecision(
  page: RecordPage,
  filters: QueueFilters,
  admissionId: string,
  status: RecordStatus,
): RecordPage {
  const present = page.records.some((r) => r.admission_id === admissionId);
  if (!present) {
    return page;
  }
  if (filters.status && filters.status !== status) {
    return {
      ...page,
      total: page.total - 1,
      records: page.records.filter((r) => r.admission_id !== admissionId),
    };
  }
  return {
    ...page,
    records: page.records.map((r) =>
      r.admission_id === admissionId ? { ...r, status } : r,
    ),
  };
}
