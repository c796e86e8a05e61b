"""Synthetic admission corpus with ground truth.

The real departmental dataset is private clinical data, so testing runs
on generated corpora instead. Each record is assembled from a category
template (a note fragment guaranteed to classify to exactly that
category under the shipped ruleset) plus optional decorations: an
admission-cause phrase, a GCS value, an alcohol mention, a negated
symptom, and neutral ward-speak distractors. Decorations are chosen so
they never add or remove a category.

A noise profile injects at most one perturbation per record, either a
single-character misspelling or an adjacent-word swap. Ground truth
keeps the clean note so a recoverability oracle can decide, by
re-running preparation, whether the perturbation was erased; records it
recovers are guaranteed to classify as if clean, which gives an exact
lower bound for recall under noise.
"""

from __future__ import annotations

import datetime as dt
import json
import random
import re
from dataclasses import dataclass
from pathlib import Path

from .lexicon import LexiconStore
from .preparation import prepare
from .records import AdmissionRecord, parse_diagnosis_code


@dataclass(frozen=True)
class NoteTemplate:
    category: str
    code: str
    labels: str
    fragment: str


# One template per standard category except the bare OTHER catch-all,
# which no rule produces by design. Each fragment contains a trigger for
# its category and whatever witness terms the rule's conditions need.
TEMPLATES: tuple[NoteTemplate, ...] = (
    NoteTemplate(
        "CRANIAL:TRAUMA:SKULL FRACTURE",
        "218-224-309-310-315",
        "Cranial>Trauma>Osseous Injury>Skull>Depressed",
        "depressed skull fracture",
    ),
    NoteTemplate("CRANIAL:TRAUMA:EDH", "218-224-302", "Cranial>Trauma>Extradural Haematoma", "acute EDH"),
    NoteTemplate("CRANIAL:TRAUMA:SDH", "218-224-306", "Cranial>Trauma>Subdural Haematoma", "large SDH evacuated"),
    NoteTemplate("CRANIAL:TRAUMA:SAH", "218-224-305", "Cranial>Trauma>Subarachnoid Haemorrhage", "SAH on CT"),
    NoteTemplate("CRANIAL:TRAUMA:ICH", "218-224-303", "Cranial>Trauma>Intracerebral Haemorrhage", "left ICH"),
    NoteTemplate("CRANIAL:TRAUMA:IVH", "218-224-304", "Cranial>Trauma>Intraventricular Haemorrhage", "IVH noted"),
    NoteTemplate("CRANIAL:TRAUMA:CONTUSIONS", "218-224-301", "Cranial>Trauma>Contusions", "frontal contusion"),
    NoteTemplate("CRANIAL:TRAUMA:TBI", "218-224-307", "Cranial>Trauma>Diffuse Brain Injury", "severe TBI"),
    NoteTemplate("CRANIAL:TRAUMA", "218-224", "Cranial>Trauma", "head trauma"),
    NoteTemplate("ANEURYSM", "218-221-260", "Cranial>Vascular>Aneurysm", "ruptured aneurysm"),
    NoteTemplate("AVM", "218-221-261", "Cranial>Vascular>Arteriovenous Malformation", "frontal AVM"),
    NoteTemplate("CSF:LEAK", "218-222-271", "Cranial>CSF Disorders>CSF Leak", "CSF leak"),
    NoteTemplate("HYDROCEPHALUS", "218-222-270", "Cranial>CSF Disorders>Hydrocephalus", "obstructive hydrocephalus"),
    NoteTemplate("CRANIAL:CAVERNOMA", "218-221-262", "Cranial>Vascular>Cavernoma", "temporal cavernoma"),
    NoteTemplate("CRANIAL:NEOPLASIA:MENINGIOMA", "218-220-251-242", "Cranial>Neoplasia>Extrinsic>Meningioma", "parasagittal meningioma"),
    NoteTemplate("CRANIAL:NEOPLASIA:GLIOMA", "218-220-250-240", "Cranial>Neoplasia>Intrinsic>Glioma", "left temporal glioma"),
    NoteTemplate("CRANIAL:NEOPLASIA:METASTASIS", "218-220-250-241", "Cranial>Neoplasia>Intrinsic>Metastasis", "brain metastasis"),
    NoteTemplate("CRANIAL:NEOPLASIA:PITUITARY", "218-220-251-244", "Cranial>Neoplasia>Extrinsic>Pituitary", "pituitary adenoma"),
    NoteTemplate("CRANIAL:NEOPLASIA:SCHWANNOMA", "218-220-251-245", "Cranial>Neoplasia>Extrinsic>Schwannoma", "vestibular schwannoma"),
    NoteTemplate("CRANIAL:NEOPLASIA:CYST", "218-220-250-246", "Cranial>Neoplasia>Intrinsic>Cyst", "colloid cyst"),
    NoteTemplate("CRANIAL:NEOPLASIA", "218-220-251", "Cranial>Neoplasia>Extrinsic", "frontal tumour"),
    NoteTemplate("SPINE:NEOPLASIA", "217-233", "Spinal>Neoplasia", "thoracic spine tumour"),
    NoteTemplate("SPINE:TRAUMA:FRACTURE", "217-230-320", "Spinal>Trauma>Fracture", "C7 facet fracture"),
    NoteTemplate("SPINE:TRAUMA:CORD", "217-230-321", "Spinal>Trauma>Cord Injury", "cord compression"),
    NoteTemplate(
        "SPINE:TRAUMA:DISCO-LIGAMENTOUS",
        "217-230-322",
        "Spinal>Trauma>Disco-ligamentous Injury",
        "ligamentous injury C5",
    ),
    NoteTemplate("SPINE:TRAUMA", "217-230", "Spinal>Trauma", "C4 subluxation"),
    NoteTemplate("SPINE:CANAL STENOSIS", "217-232", "Spinal>Canal Stenosis", "lumbar canal stenosis"),
    NoteTemplate("SPINE:CAVERNOMA", "217-234", "Spinal>Cavernoma", "cord cavernoma at T4"),
    NoteTemplate("SPINE:DEGENERATIVE", "217-231", "Spinal>Degenerative", "degenerative disc disease"),
    NoteTemplate("SPINE:OTHER", "217-235", "Spinal>Other", "chronic back pain"),
    NoteTemplate("OTHER:FRACTURE", "213-295", "Miscellaneous>Fracture Other", "left femur fracture"),
    NoteTemplate("FISTULA", "218-221-263", "Cranial>Vascular>Fistula", "dural fistula"),
    NoteTemplate("LESION", "218-223", "Cranial>Incidental Lesion", "cerebellar lesion"),
    NoteTemplate("COMPLICATION:INFECTION", "216-280", "Complications>Infection", "wound infection"),
)

# Cause surfaces sampled across canonical forms and lexicon variants so
# regularization gets exercised. All of these resolve to cause entries,
# mask their tokens, and appear in no rule condition.
CAUSES = (
    "Ped v car",
    "ped vs car",
    "pedestrian vs car",
    "RTA",
    "road traffic accident",
    "fall from height",
    "fell from height",
    "mechanical fall",
    "found down",
    "found collapsed",
    "cycling accident",
    "fall",
    "fell",
    "assault",
    "assaulted",
)

# Neutral ward-speak: no rule triggers, no rule condition terms, and no
# word within spelling-correction distance of a correction target.
DISTRACTORS = (
    "admitted overnight",
    "for observation",
    "transferred from referring unit",
    "seen by team",
    "imaging reviewed",
)


class PerturbKind:
    MISSPELL = "MISSPELL"
    REORDER = "REORDER"


_MISSPELLABLE = re.compile(r"[a-z]{5,}\Z")
_PLAIN_WORD = re.compile(r"[A-Za-z]+\Z")


def _misspell_word(word: str, rng: random.Random) -> str:
    """One random character-level edit, guaranteed to change the word."""
    alphabet = "abcdefghijklmnopqrstuvwxyz"
    for _ in range(20):
        op = rng.choice(("delete", "insert", "substitute", "transpose"))
        i = rng.randrange(len(word))
        if op == "delete":
            out = word[:i] + word[i + 1 :]
        elif op == "insert":
            out = word[:i] + rng.choice(alphabet) + word[i:]
        elif op == "substitute":
            out = word[:i] + rng.choice(alphabet) + word[i + 1 :]
        else:
            if i == len(word) - 1:
                continue
            out = word[:i] + word[i + 1] + word[i] + word[i + 2 :]
        if out != word:
            return out
    return word + rng.choice(alphabet)


def _apply_misspell(note: str, rng: random.Random) -> tuple[str, dict] | None:
    words = note.split(" ")
    slots = [i for i, w in enumerate(words) if _MISSPELLABLE.fullmatch(w)]
    if not slots:
        return None
    slot = rng.choice(slots)
    original = words[slot]
    words[slot] = _misspell_word(original, rng)
    detail = f"{original} -> {words[slot]}"
    return " ".join(words), {"kind": PerturbKind.MISSPELL, "detail": detail}


def _apply_reorder(note: str, rng: random.Random) -> tuple[str, dict] | None:
    words = note.split(" ")
    pairs = [
        i
        for i in range(len(words) - 1)
        if _PLAIN_WORD.fullmatch(words[i])
        and _PLAIN_WORD.fullmatch(words[i + 1])
        and words[i] != words[i + 1]
    ]
    if not pairs:
        return None
    i = rng.choice(pairs)
    words[i], words[i + 1] = words[i + 1], words[i]
    detail = f"swap {words[i + 1]!r} and {words[i]!r} at word {i}"
    return " ".join(words), {"kind": PerturbKind.REORDER, "detail": detail}


def _perturb(note: str, rng: random.Random) -> tuple[str, dict] | None:
    first, second = (
        (_apply_misspell, _apply_reorder)
        if rng.random() < 0.5
        else (_apply_reorder, _apply_misspell)
    )
    result = first(note, rng)
    if result is None:
        result = second(note, rng)
    return result


def _assemble_note(template: NoteTemplate, rng: random.Random) -> tuple[str, str | None]:
    parts = []
    cause = rng.choice(CAUSES) if rng.random() < 0.7 else None
    if cause:
        parts.append(cause)
    parts.append(template.fragment)
    if rng.random() < 0.5:
        parts.append(f"GCS {rng.randint(3, 15)}")
    if rng.random() < 0.3:
        parts.append("ETOH")
    if rng.random() < 0.3:
        parts.append("no vomiting")
    if rng.random() < 0.4:
        parts.append(rng.choice(DISTRACTORS))
    return ", ".join(parts), cause


def generate_corpus(
    seed: int, size: int, noise: float = 0.0
) -> tuple[list[AdmissionRecord], list[dict]]:
    """Generate `size` records plus parallel ground-truth rows.

    noise is the per-record probability of injecting exactly one
    perturbation. Deterministic: the same (seed, size, noise) always
    produces identical output.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    if not (0.0 <= noise <= 1.0):
        raise ValueError("noise must be within [0, 1]")
    rng = random.Random(seed)
    records: list[AdmissionRecord] = []
    truths: list[dict] = []
    for i in range(size):
        template = TEMPLATES[rng.randrange(len(TEMPLATES))]
        note, cause = _assemble_note(template, rng)
        perturbation = None
        if noise and rng.random() < noise:
            result = _perturb(note, rng)
            if result is not None:
                clean = note
                note, perturbation = result
                perturbation["clean_note"] = clean
        date = dt.date(rng.randint(2003, 2014), rng.randint(1, 12), rng.randint(1, 28))
        records.append(
            AdmissionRecord(
                admission_id=f"SYN{i:05d}",
                date=date,
                diagnosis=parse_diagnosis_code(template.code, template.labels),
                note=note,
                raw_diagnosis=template.code,
            )
        )
        truths.append(
            {
                "admission_id": f"SYN{i:05d}",
                "category": template.category,
                "code": template.code,
                "cause": cause,
                "perturbation": perturbation,
            }
        )
    return records, truths


def write_truth(truths: list[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in truths:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def read_truth(path: str | Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows


def recoverable(note: str, truth: dict, store: LexiconStore, **prepare_kwargs) -> bool:
    """Whether preparation erases this record's perturbation.

    True means the record classifies exactly as its clean form would;
    unperturbed records are trivially recoverable. The converse does not
    hold: an unrecovered perturbation may still classify correctly, so
    the recoverable fraction is a lower bound on recall, never an
    estimate of it.
    """
    perturbation = truth.get("perturbation")
    if perturbation is None:
        return True
    clean = prepare(perturbation["clean_note"], store, **prepare_kwargs)
    dirty = prepare(note, store, **prepare_kwargs)
    return clean.text == dirty.text


def recall_floor(
    records: list[AdmissionRecord],
    truths: list[dict],
    store: LexiconStore,
    **prepare_kwargs,
) -> float:
    """Fraction of records whose classification provably matches truth."""
    if len(records) != len(truths):
        raise ValueError("records and truths are misaligned")
    good = sum(
        1
        for record, truth in zip(records, truths)
        if recoverable(record.note, truth, store, **prepare_kwargs)
    )
    return good / len(records)
