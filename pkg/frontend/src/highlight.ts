import type { SpanTag } from "./types.js";

// Fixed legend: one css class per tag kind. Color choices live in the
// stylesheet; code only ever deals in these class names.
export const TAG_CLASS: Record<string, string> = {
  ADMISSION_CAUSE: "span-cause",
  AUDIT_EVIDENCE: "span-evidence",
  MODIFIER: "span-modifier",
  MEASUREMENT: "span-measurement",
  DOMAIN_CONCEPT: "span-domain",
  UNRESOLVED: "span-unresolved",
};

// Appended when the server hands us overlapping spans, which it promises
// not to; outline styling keeps both spans visible instead of nesting marks.
export const OVERLAP_CLASS = "span-overlap";

export interface Segment {
  text: string;
  /** null for plain text between highlights */
  cssClass: string | null;
  kind: string | null;
  payload: string | null;
  overlap: boolean;
}

function plain(text: string): Segment {
  return { text, cssClass: null, kind: null, payload: null, overlap: false };
}

/**
 * Split text into a flat run of segments, one per highlight plus the plain
 * gaps between them. Segments always concatenate back to the exact input
 * text; out-of-range spans are clamped, zero-width ones dropped, and an
 * overlapping span is truncated to start where the previous one ended and
 * flagged so the renderer can fall back to outline styling.
 */
export function buildSegments(text: string, tags: SpanTag[]): Segment[] {
  const ordered = [...tags].sort((a, b) => a.start - b.start || a.end - b.end);
  const segments: Segment[] = [];
  let pos = 0;
  for (const tag of ordered) {
    const overlap = tag.start < pos;
    const start = Math.max(Math.min(tag.start, text.length), pos);
    const end = Math.max(Math.min(tag.end, text.length), start);
    if (end === start) continue;
    if (start > pos) {
      segments.push(plain(text.slice(pos, start)));
    }
    const base = TAG_CLASS[tag.kind] ?? "span-unresolved";
    segments.push({
      text: text.slice(start, end),
      cssClass: overlap ? `${base} ${OVERLAP_CLASS}` : base,
      kind: tag.kind,
      payload: tag.payload || null,
      overlap,
    });
    pos = end;
  }
  if (pos < text.length) {
    segments.push(plain(text.slice(pos)));
  }
  return segments;
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** The highlighted note body as HTML: <mark> per tagged segment. */
export function renderHighlights(text: string, tags: SpanTag[]): string {
  return buildSegments(text, tags)
    .map((seg) => {
      if (seg.cssClass === null) {
        return escapeHtml(seg.text);
      }
      const title = seg.payload ? ` title="${escapeHtml(seg.payload)}"` : "";
      return `<mark class="${seg.cssClass}"${title}>${escapeHtml(seg.text)}</mark>`;
    })
    .join("");
}

/** The fixed legend shown beside every record view. */
export function renderLegend(): string {
  const labels: Record<string, string> = {
    ADMISSION_CAUSE: "cause",
    AUDIT_EVIDENCE: "audit evidence",
    MODIFIER: "modifier",
    MEASUREMENT: "measurement",
    DOMAIN_CONCEPT: "domain concept",
    UNRESOLVED: "unresolved",
  };
  const items = Object.entries(TAG_CLASS)
    .map(
      ([kind, cls]) =>
        `<span class="legend-item"><mark class="${cls}">&nbsp;&nbsp;</mark> ${labels[kind]}</span>`,
    )
    .join(" ");
  return `<div class="legend">${items}</div>`;
}
