"""Knowledge-grounded, persona-conditioned questionnaire generation."""

from .backends import (
    BackendConfig,
    ChatCompletionBackend,
    ConstantBackend,
    LLMBackend,
    PersonaMockBackend,
    ScriptedBackend,
)
from .baseline import random_baseline
from .knowledge import (
    KbMode,
    KnowledgeIndex,
    KnowledgeSnippet,
    build_kb,
    chunk_text,
    load_kb,
    retrieve,
)
from .persona import Persona, PersonaConfig, sample_persona
from .pipeline import GenerationResult, PatientRecord, generate_dataset, generate_patient
from .prompting import ConversationState, build_prompt, format_score, parse_score

__all__ = [
    "BackendConfig",
    "ChatCompletionBackend",
    "ConstantBackend",
    "ConversationState",
    "GenerationResult",
    "KbMode",
    "KnowledgeIndex",
    "KnowledgeSnippet",
    "LLMBackend",
    "PatientRecord",
    "Persona",
    "PersonaConfig",
    "PersonaMockBackend",
    "ScriptedBackend",
    "build_kb",
    "build_prompt",
    "chunk_text",
    "format_score",
    "generate_dataset",
    "generate_patient",
    "load_kb",
    "parse_score",
    "random_baseline",
    "retrieve",
    "sample_persona",
]
