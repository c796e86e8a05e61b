import { describe, expect, it } from "vitest";
import {
  OVERLAP_CLASS,
  TAG_CLASS,
  buildSegments,
  escapeHtml,
  renderHighlights,
} from "../src/highlight.js";
import type { SpanTag } from "../src/types.js";

function tag(
  start: number,
  end: number,
  kind: string,
  payload = "",
): SpanTag {
  return { start, end, token_start: 0, token_end: 0, kind, payload };
}

describe("buildSegments", () => {
  it("maps every tag kind to its own css class", () => {
    // one span per kind, side by side; the class must come from TAG_CLASS
    const kinds = Object.keys(TAG_CLASS);
    const text = kinds.map(() => "xxxx").join(" ");
    const tags = kinds.map((kind, i) => tag(i * 5, i * 5 + 4, kind));
    const highlighted = buildSegments(text, tags).filter((s) => s.cssClass !== null);
    expect(highlighted).toHaveLength(kinds.length);
    for (const [i, kind] of kinds.entries()) {
      expect(highlighted[i]!.kind).toBe(kind);
      expect(highlighted[i]!.cssClass).toBe(TAG_CLASS[kind]);
    }
  });

  it("concatenates back to the exact input text", () => {
    const text = "Ped v car left frontal depressed fracture , GCS 3 , ETOH";
    const tags = [
      tag(0, 9, "ADMISSION_CAUSE"),
      tag(33, 41, "AUDIT_EVIDENCE"),
      tag(44, 49, "MEASUREMENT", "GCS_SCORE=3"),
      tag(52, 56, "DOMAIN_CONCEPT", "substance"),
    ];
    const segments = buildSegments(text, tags);
    expect(segments.map((s) => s.text).join("")).toBe(text);
    const marked = segments.filter((s) => s.cssClass !== null);
    expect(marked.map((s) => s.text)).toEqual(["Ped v car", "fracture", "GCS 3", "ETOH"]);
    expect(marked.map((s) => s.cssClass)).toEqual([
      "span-cause",
      "span-evidence",
      "span-measurement",
      "span-domain",
    ]);
  });

  it("clamps out-of-range spans and still reproduces the text", () => {
    const text = "short note";
    const segments = buildSegments(text, [tag(6, 99, "DOMAIN_CONCEPT")]);
    expect(segments.map((s) => s.text).join("")).toBe(text);
    expect(segments.at(-1)!.text).toBe("note");
    expect(segments.at(-1)!.cssClass).toBe("span-domain");
  });

  it("drops zero-width spans", () => {
    const segments = buildSegments("abc", [tag(1, 1, "MODIFIER")]);
    expect(segments).toEqual([
      { text: "abc", cssClass: null, kind: null, payload: null, overlap: false },
    ]);
  });

  it("truncates an overlapping span and flags it", () => {
    const text = "alpha beta gamma";
    const segments = buildSegments(text, [
      tag(0, 10, "DOMAIN_CONCEPT"),
      tag(6, 16, "MODIFIER"),
    ]);
    expect(segments.map((s) => s.text).join("")).toBe(text);
    const second = segments.find((s) => s.kind === "MODIFIER")!;
    expect(second.overlap).toBe(true);
    expect(second.text).toBe(" gamma");
    expect(second.cssClass).toContain(OVERLAP_CLASS);
    expect(second.cssClass).toContain(TAG_CLASS.MODIFIER);
  });

  it("returns nothing for empty text", () => {
    expect(buildSegments("", [])).toEqual([]);
    expect(buildSegments("", [tag(0, 4, "MODIFIER")])).toEqual([]);
  });

  it("falls back to the unresolved class for unknown kinds", () => {
    const [seg] = buildSegments("mystery", [tag(0, 7, "SOMETHING_NEW")]);
    expect(seg!.cssClass).toBe("span-unresolved");
  });
});

describe("renderHighlights", () => {
  it("emits one mark per tagged span with the kind class", () => {
    const text = "GCS 3 on arrival";
    const html = renderHighlights(text, [tag(0, 5, "MEASUREMENT", "GCS_SCORE=3")]);
    expect(html).toBe(
      `<mark class="span-measurement" title="GCS_SCORE=3">GCS 3</mark> on arrival`,
    );
  });

  it("escapes markup in both plain and tagged text", () => {
    const html = renderHighlights("<b> & co", [tag(0, 3, "DOMAIN_CONCEPT")]);
    expect(html).toBe(`<mark class="span-domain">&lt;b&gt;</mark> &amp; co`);
  });
});

describe("escapeHtml", () => {
  it("neutralizes the four html metacharacters", () => {
    expect(escapeHtml(`<a href="x">&</a>`)).toBe(
      "&lt;a href=&quot;x&quot;&gt;&amp;&lt;/a&gt;",
    );
  });
});
