"""HTTP review loop: serve suggestions, record expert decisions, stage
lexicon and rule refinements, report live metrics.

State is an append-only journal per concern (decisions, refinements)
under the state directory; the in-memory index is rebuilt by replay at
startup, so restarting over the same journals reproduces the same
state. Refinements are staged, never hot-loaded: classification outputs
must keep citing one fixed lexicon and ruleset version, so proposals go
live only through export, validation, and a restart.
"""

from __future__ import annotations

import datetime as dt
import json
import tempfile
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse

from .concepts import ClassificationResult, classify_corpus
from .config import PipelineConfig
from .evaluation import ReferenceStandard, StandardKind, score
from .lexicon import (
    LexiconError,
    Provenance,
    RefinementConflict,
    append_refinement,
    entry_from_dict,
    entry_to_dict,
    format_entry_line,
    parse_entry_line,
)
from .records import AdmissionRecord, AuditCategory, RecordError
from .rules import RuleError, compile_rules

ACTIONS = ("ACCEPT", "OVERRIDE", "DEFER")
STATUSES = ("pending", "decided", "deferred")
REVIEWER_HEADER = "x-reviewer-id"

_MAX_PER = 500


class RequestProblem(Exception):
    """Maps to a 400 response carrying the validator's message."""


def _utc_now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat()


class ReviewIndex:
    """Corpus, classifications, and replayed journal state."""

    def __init__(self, config: PipelineConfig, records: list[AdmissionRecord], state_dir: Path):
        self.config = config
        self.store = config.load_store()
        self.rules = config.load_rules()
        self.alts = config.load_alternatives()
        self.approvals = config.load_approvals()

        seen = set()
        for record in records:
            if record.admission_id in seen:
                raise ValueError(f"duplicate admission id {record.admission_id!r}")
            seen.add(record.admission_id)
        results, _ = classify_corpus(records, self.store, self.rules, **config.classify_kwargs())
        self.records = {r.admission_id: r for r in records}
        self.results: dict[str, ClassificationResult] = {r.admission_id: r for r in results}
        self.ids = sorted(self.records)

        state_dir.mkdir(parents=True, exist_ok=True)
        self.decisions_path = state_dir / "decisions.jsonl"
        self.refinements_path = state_dir / "refinements.jsonl"

        self.journal: list[dict] = []
        self.current: dict[str, dict] = {}
        self.staged: list[dict] = []
        self.staging_store = self.store
        self.staged_rule_ids: set[str] = set()
        self._lock = threading.Lock()
        self._replay()

    # -- journal ------------------------------------------------------

    def _replay(self) -> None:
        for line in _read_lines(self.decisions_path):
            event = json.loads(line)
            self._index_decision(event)
        for line in _read_lines(self.refinements_path):
            event = json.loads(line)
            if event["kind"] == "lexicon":
                self.staging_store = append_refinement(
                    self.staging_store,
                    entry_from_dict(event["entry"]),
                    Provenance(event.get("reviewer", ""), event.get("timestamp", "")),
                )
            else:
                self.staged_rule_ids.add(event["rule_id"])
            self.staged.append(event)

    def _index_decision(self, event: dict) -> None:
        self.journal.append(event)
        if event["admission_id"] in self.records:
            self.current[event["admission_id"]] = event

    def _append(self, path: Path, event: dict) -> None:
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    # -- decisions ----------------------------------------------------

    def status_of(self, admission_id: str) -> str:
        event = self.current.get(admission_id)
        if event is None:
            return "pending"
        return "deferred" if event["action"] == "DEFER" else "decided"

    def record_decision(
        self, admission_id: str, action: str, categories: list[str], comment: str, reviewer: str
    ) -> dict:
        event = {
            "seq": len(self.journal) + 1,
            "admission_id": admission_id,
            "action": action,
            "categories": categories,
            "comment": comment,
            "reviewer": reviewer,
            "timestamp": _utc_now(),
        }
        with self._lock:
            self._append(self.decisions_path, event)  # journaled, then indexed
            self._index_decision(event)
        return event

    def final_categories(self, admission_id: str) -> list[str] | None:
        """Expert-final categories; None while pending or deferred."""
        event = self.current.get(admission_id)
        if event is None or event["action"] == "DEFER":
            return None
        if event["action"] == "OVERRIDE":
            return list(event["categories"])
        return sorted(self.results[admission_id].category_texts())

    # -- refinements --------------------------------------------------

    def stage_lexicon_refinement(self, line: str, reviewer: str) -> dict:
        try:
            entry = parse_entry_line(line, source="proposal", lineno=1)
        except LexiconError as exc:
            raise RequestProblem(str(exc)) from None
        try:
            next_store = append_refinement(
                self.staging_store, entry, Provenance(reviewer, _utc_now())
            )
        except RefinementConflict as exc:
            raise RequestProblem(str(exc)) from None
        if next_store.version == self.staging_store.version:
            raise RequestProblem(
                f"{entry.kind.value} entry {entry.surface!r} is already present unchanged"
            )
        event = {
            "seq": len(self.staged) + 1,
            "kind": "lexicon",
            "entry": entry_to_dict(entry),
            "line": format_entry_line(entry),
            "reviewer": reviewer,
            "timestamp": _utc_now(),
        }
        with self._lock:
            self._append(self.refinements_path, event)
            self.staging_store = next_store
            self.staged.append(event)
        return event

    def stage_rule_refinement(self, text: str, reviewer: str) -> dict:
        with tempfile.NamedTemporaryFile(
            "w", suffix=".rules", delete=False, encoding="utf-8"
        ) as fh:
            fh.write(text)
            tmp = Path(fh.name)
        try:
            proposed = compile_rules(tmp, default_uncertainty=self.config.default_uncertainty)
        except RuleError as exc:
            raise RequestProblem(str(exc)) from None
        finally:
            tmp.unlink(missing_ok=True)
        if len(proposed) != 1:
            raise RequestProblem(f"expected exactly one rule, got {len(proposed)}")
        rule = next(iter(proposed))
        live_ids = {r.id for r in self.rules}
        if rule.id in live_ids or rule.id in self.staged_rule_ids:
            raise RequestProblem(f"rule id {rule.id!r} already exists")
        event = {
            "seq": len(self.staged) + 1,
            "kind": "rule",
            "rule_id": rule.id,
            "text": text,
            "reviewer": reviewer,
            "timestamp": _utc_now(),
        }
        with self._lock:
            self._append(self.refinements_path, event)
            self.staged_rule_ids.add(rule.id)
            self.staged.append(event)
        return event

    # -- metrics ------------------------------------------------------

    def metrics(self, kind: StandardKind) -> dict:
        decided = [i for i in self.ids if self.status_of(i) == "decided"]
        rows = []
        for admission_id in decided:
            for text in self.final_categories(admission_id) or []:
                rows.append((admission_id, AuditCategory.parse(text)))
        standard = ReferenceStandard(kind=kind, records=tuple(rows))
        classifications = [self.results[i] for i in decided]
        report = score(standard, classifications, alts=self.alts, approvals=self.approvals)
        row = report.row()
        row["decided"] = len(decided)
        return row

    def versions(self) -> dict:
        return {"lexicon": self.store.version, "ruleset": self.rules.version}


def _read_lines(path: Path) -> list[str]:
    if not path.exists():
        return []
    with open(path, encoding="utf-8") as fh:
        return [line for line in fh if line.strip()]


# ---------------------------------------------------------------------------
# serialization


def _summary_row(idx: ReviewIndex, admission_id: str) -> dict:
    result = idx.results[admission_id]
    return {
        "admission_id": admission_id,
        "status": idx.status_of(admission_id),
        "categories": [
            {"category": m.category.text, "rule_id": m.rule_id, "flags": sorted(m.flags)}
            for m in result.categories
        ],
        "uncertain": any("UNCERTAIN" in m.flags for m in result.categories),
        "flags": list(result.flags),
    }


def _token_span(note, start: int, end: int) -> tuple[int, int]:
    if note is None or not note.tokens or start >= len(note.tokens):
        return (0, 0)
    return (note.tokens[start].start, note.tokens[min(end, len(note.tokens)) - 1].end)


def _detail(idx: ReviewIndex, admission_id: str) -> dict:
    record = idx.records[admission_id]
    result = idx.results[admission_id]
    note = result.note
    categories = []
    for match in result.categories:
        evidence = []
        for ev in match.evidence:
            start, end = _token_span(note, ev.trigger_start, ev.trigger_end)
            witnesses = []
            for term, token_index in ev.satisfied:
                w_start, w_end = _token_span(note, token_index, token_index + 1)
                witnesses.append(
                    {"term": term, "token": token_index, "start": w_start, "end": w_end}
                )
            evidence.append(
                {
                    "trigger_text": ev.trigger_text,
                    "start": start,
                    "end": end,
                    "witnesses": witnesses,
                    "uncertain": ev.uncertain,
                }
            )
        categories.append(
            {
                "category": match.category.text,
                "rule_id": match.rule_id,
                "flags": sorted(match.flags),
                "evidence": evidence,
            }
        )
    history = [e for e in idx.journal if e["admission_id"] == admission_id]
    return {
        "admission_id": admission_id,
        "status": idx.status_of(admission_id),
        "note": record.note,
        "prepared": note.prepared.text if note is not None else "",
        # tags carry token ranges; the wire format is char offsets into
        # the prepared text, which is what a highlighter needs
        "tags": [
            {
                "start": _token_span(note, t.start, t.end)[0],
                "end": _token_span(note, t.start, t.end)[1],
                "token_start": t.start,
                "token_end": t.end,
                "kind": t.kind.value,
                "payload": t.payload,
            }
            for t in result.tags
        ],
        "categories": categories,
        "decision": idx.current.get(admission_id),
        "history": history,
        "final_categories": idx.final_categories(admission_id),
    }


def _validate_decision(payload) -> tuple[str, list[str], str]:
    if not isinstance(payload, dict):
        raise RequestProblem("decision body must be an object")
    action = payload.get("action")
    if action not in ACTIONS:
        raise RequestProblem(f"action must be one of {', '.join(ACTIONS)}")
    raw_categories = payload.get("categories", [])
    if not isinstance(raw_categories, list) or not all(
        isinstance(c, str) for c in raw_categories
    ):
        raise RequestProblem("categories must be a list of strings")
    if action == "OVERRIDE" and not raw_categories:
        raise RequestProblem("OVERRIDE requires at least one category")
    if action != "OVERRIDE" and raw_categories:
        raise RequestProblem(f"{action} must not carry categories")
    categories = []
    for text in raw_categories:
        try:
            categories.append(AuditCategory.parse(text).text)
        except RecordError as exc:
            raise RequestProblem(str(exc)) from None
    comment = payload.get("comment", "")
    if not isinstance(comment, str):
        raise RequestProblem("comment must be a string")
    return action, categories, comment


# ---------------------------------------------------------------------------
# application


def create_app(
    config: PipelineConfig, records: list[AdmissionRecord], state_dir: str | Path
) -> FastAPI:
    idx = ReviewIndex(config, records, Path(state_dir))
    app = FastAPI(title="audit code review service")
    app.state.index = idx

    def body(data: dict, status_code: int = 200) -> JSONResponse:
        data["versions"] = idx.versions()
        return JSONResponse(status_code=status_code, content=data)

    @app.exception_handler(RequestProblem)
    async def request_problem(request: Request, exc: RequestProblem):
        return body({"detail": str(exc)}, status_code=400)

    @app.exception_handler(RequestValidationError)
    async def invalid_request(request: Request, exc: RequestValidationError):
        return body({"detail": "malformed request parameters"}, status_code=400)

    @app.middleware("http")
    async def stamp_versions(request: Request, call_next):
        response = await call_next(request)
        response.headers["X-Lexicon-Version"] = idx.store.version
        response.headers["X-Ruleset-Version"] = idx.rules.version
        return response

    def reviewer_of(request: Request) -> str:
        return request.headers.get(REVIEWER_HEADER, "anonymous")

    @app.get("/records")
    async def list_records(
        status: str | None = None,
        category: str | None = None,
        page: int = 1,
        per: int = 50,
    ):
        if status is not None and status not in STATUSES:
            raise RequestProblem(f"status must be one of {', '.join(STATUSES)}")
        if page < 1 or per < 1 or per > _MAX_PER:
            raise RequestProblem(f"page must be >= 1 and 1 <= per <= {_MAX_PER}")
        target = None
        if category is not None:
            try:
                target = AuditCategory.parse(category)
            except RecordError as exc:
                raise RequestProblem(str(exc)) from None
        ids = idx.ids
        if status is not None:
            ids = [i for i in ids if idx.status_of(i) == status]
        if target is not None:
            ids = [
                i
                for i in ids
                if any(target.is_prefix_of(m.category) for m in idx.results[i].categories)
            ]
        total = len(ids)
        window = ids[(page - 1) * per : page * per]
        return body(
            {
                "page": page,
                "per": per,
                "total": total,
                "records": [_summary_row(idx, i) for i in window],
            }
        )

    @app.get("/records/{admission_id}")
    async def record_detail(admission_id: str):
        if admission_id not in idx.records:
            return body({"detail": f"unknown admission id {admission_id!r}"}, status_code=404)
        return body(_detail(idx, admission_id))

    @app.post("/records/{admission_id}/decision")
    async def post_decision(admission_id: str, request: Request):
        if admission_id not in idx.records:
            return body({"detail": f"unknown admission id {admission_id!r}"}, status_code=404)
        try:
            payload = await request.json()
        except json.JSONDecodeError:
            raise RequestProblem("body must be valid JSON") from None
        action, categories, comment = _validate_decision(payload)
        event = idx.record_decision(
            admission_id, action, categories, comment, reviewer_of(request)
        )
        return body(
            {
                "decision": event,
                "status": idx.status_of(admission_id),
                "final_categories": idx.final_categories(admission_id),
            }
        )

    @app.get("/refinements")
    async def list_refinements():
        return body({"pending": idx.staged, "total": len(idx.staged)})

    @app.post("/refinements")
    async def post_refinement(request: Request):
        try:
            payload = await request.json()
        except json.JSONDecodeError:
            raise RequestProblem("body must be valid JSON") from None
        if not isinstance(payload, dict):
            raise RequestProblem("refinement body must be an object")
        kind = payload.get("kind")
        reviewer = reviewer_of(request)
        if kind == "lexicon":
            line = payload.get("line")
            if not isinstance(line, str) or not line.strip():
                raise RequestProblem("lexicon refinement needs a non-empty 'line'")
            event = idx.stage_lexicon_refinement(line, reviewer)
        elif kind == "rule":
            text = payload.get("text")
            if not isinstance(text, str) or not text.strip():
                raise RequestProblem("rule refinement needs non-empty 'text'")
            event = idx.stage_rule_refinement(text, reviewer)
        else:
            raise RequestProblem("kind must be 'lexicon' or 'rule'")
        return body({"refinement": event})

    @app.get("/metrics")
    async def metrics(standard: str = "A"):
        try:
            kind = StandardKind(standard)
        except ValueError:
            raise RequestProblem(
                f"standard must be one of {', '.join(k.value for k in StandardKind)}"
            ) from None
        return body(idx.metrics(kind))

    @app.get("/export/decisions")
    async def export_decisions():
        lines = [json.dumps(event, sort_keys=True) for event in idx.journal]
        text = "\n".join(lines) + ("\n" if lines else "")
        return PlainTextResponse(text)

    @app.get("/export/refinements")
    async def export_refinements(kind: str = "lexicon"):
        if kind not in ("lexicon", "rule"):
            raise RequestProblem("kind must be 'lexicon' or 'rule'")
        if kind == "lexicon":
            lines = [e["line"] for e in idx.staged if e["kind"] == "lexicon"]
            text = "\n".join(lines) + ("\n" if lines else "")
        else:
            blocks = [e["text"].strip() for e in idx.staged if e["kind"] == "rule"]
            text = "\n\n".join(blocks) + ("\n" if blocks else "")
        return PlainTextResponse(text)

    return app
