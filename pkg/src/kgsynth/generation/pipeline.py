"""Conversational generation loop: one patient per conversation, one row per patient."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import PatientGenerationFailed, ScoreParseError
from ..tabular import CategoricalTable, DisorderSchema
from .backends import LLMBackend
from .knowledge import DEFAULT_K, KbMode, KnowledgeIndex, retrieve
from .persona import Persona, PersonaConfig, sample_persona
from .prompting import (
    Answer,
    ConversationState,
    build_prompt,
    correction_message,
    parse_score,
    strip_score_lines,
)

log = logging.getLogger(__name__)

DEFAULT_MAX_RETRIES = 2


@dataclass
class PatientRecord:
    persona: Persona
    row: tuple[str, ...]
    answers: list[Answer]
    retries: dict[str, int] = field(default_factory=dict)
    snippet_ids: dict[str, list[int]] = field(default_factory=dict)

    @property
    def total_retries(self) -> int:
        return sum(self.retries.values())


def retrieval_query(schema: DisorderSchema, item_id: str) -> str:
    return f"{schema.disorder_name.replace('_', ' ')} {schema.item_text(item_id)}"


def generate_patient(
    persona: Persona,
    schema: DisorderSchema,
    mode: KbMode,
    backend: LLMBackend,
    index: KnowledgeIndex | None = None,
    k: int = DEFAULT_K,
    max_retries: int = DEFAULT_MAX_RETRIES,
    format_instructions: str | None = None,
) -> PatientRecord:
    """Walk the items in order and return the patient's completed row.

    An unparseable reply is answered with a correction message, up to
    ``max_retries`` times per item, before :class:`PatientGenerationFailed`
    is raised.  Backend transport errors propagate unchanged.
    """
    mode = KbMode(mode)
    state = ConversationState(persona, schema)
    record = PatientRecord(persona, (), state.answered)
    for item in schema.item_ids:
        state.knowledge_context = retrieve(index, retrieval_query(schema, item), k, mode)
        record.snippet_ids[item] = [s.chunk_id for s in state.knowledge_context]
        messages = [{"role": "user", "content": build_prompt(state, item, format_instructions)}]
        record.retries[item] = 0
        for attempt in range(max_retries + 1):
            reply = backend.complete(messages)
            try:
                score = parse_score(reply, schema.likert_domain)
                break
            except ScoreParseError as exc:
                if attempt == max_retries:
                    raise PatientGenerationFailed(item, attempt + 1) from exc
                record.retries[item] += 1
                messages = messages + [
                    {"role": "assistant", "content": reply},
                    {"role": "user", "content": correction_message(exc, schema.likert_domain)},
                ]
        state.answered.append(Answer(item, score, strip_score_lines(reply)))

    demo = {"sex": persona.sex, "age": str(persona.age)}
    record.row = tuple(demo[c] for c in schema.demographic_columns) + tuple(a.score for a in state.answered)
    return record


def persona_seed(master_seed: int, patient_index: int) -> int:
    return int(np.random.SeedSequence([master_seed, patient_index]).generate_state(1)[0])


@dataclass
class GenerationResult:
    table: CategoricalTable
    records: list[PatientRecord | None]
    failures: dict[int, str]

    @property
    def shortfall(self) -> int:
        return len(self.failures)

    def run_log(self, config: dict | None = None) -> dict:
        patients = []
        for i, rec in enumerate(self.records):
            if rec is None:
                patients.append({"index": i, "status": "failed", "error": self.failures[i]})
                continue
            patients.append({
                "index": i,
                "status": "ok",
                "persona": rec.persona.to_dict(),
                "retries": rec.retries,
                "snippet_ids": rec.snippet_ids,
                "answers": {a.item_id: a.text for a in rec.answers},
            })
        return {
            "config": config or {},
            "n_requested": len(self.records),
            "n_generated": len(self.table),
            "shortfall": self.shortfall,
            "patients": patients,
        }


def generate_dataset(
    n_patients: int,
    schema: DisorderSchema,
    mode: KbMode,
    backend: LLMBackend,
    index: KnowledgeIndex | None = None,
    master_seed: int = 0,
    k: int = DEFAULT_K,
    persona_config: PersonaConfig | None = None,
    max_retries: int = DEFAULT_MAX_RETRIES,
    max_workers: int = 1,
) -> GenerationResult:
    """Generate ``n_patients`` rows; patients that fail are skipped and logged.

    Patient ``i`` gets a persona seeded from ``(master_seed, i)``, and rows
    are emitted in patient order however many workers run concurrently.
    """
    if n_patients < 1:
        raise ValueError("n_patients must be at least 1")
    if persona_config is None:
        persona_config = PersonaConfig(
            sex_domain=schema.sex_domain,
            age_domain=tuple(int(a) for a in schema.age_domain),
        )

    def one(i: int):
        persona = sample_persona(persona_config, persona_seed(master_seed, i), schema.disorder_name)
        try:
            return generate_patient(persona, schema, mode, backend, index, k, max_retries)
        except PatientGenerationFailed as exc:
            log.warning("patient %d skipped: %s", i, exc)
            return exc

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers) as pool:
            outcomes = list(pool.map(one, range(n_patients)))
    else:
        outcomes = [one(i) for i in range(n_patients)]

    records: list[PatientRecord | None] = []
    failures: dict[int, str] = {}
    for i, out in enumerate(outcomes):
        if isinstance(out, PatientGenerationFailed):
            records.append(None)
            failures[i] = str(out)
        else:
            records.append(out)
    if failures:
        log.warning("generated %d of %d patients", n_patients - len(failures), n_patients)
    rows = tuple(r.row for r in records if r is not None)
    return GenerationResult(CategoricalTable(schema, rows), records, failures)
