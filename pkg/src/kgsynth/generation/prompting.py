"""Prompt assembly and schema-constrained score extraction."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

from ..errors import ItemOutOfOrder, NoScoreLine, OutOfDomainScore
from ..tabular import DisorderSchema
from .knowledge import KnowledgeSnippet
from .persona import Persona

LIKERT_LABELS = {
    "0": "never",
    "1": "occasionally",
    "2": "half of the time",
    "3": "most of the time",
    "4": "all of the time",
}

_SCORE_LINE = re.compile(r"^[ \t]*SCORE:[ \t]*(.*?)[ \t]*$", re.MULTILINE)

DEFAULT_FORMAT_INSTRUCTIONS = (
    "Answer in character, in the first person, as this patient would. "
    "Write one or two sentences, then finish with a final line of the form\n"
    "SCORE: <score>\n"
    "where <score> is exactly one of: {allowed}. Do not write anything after that line."
)


@dataclass(frozen=True)
class Answer:
    item_id: str
    score: str
    text: str


@dataclass
class ConversationState:
    persona: Persona
    disorder: DisorderSchema
    answered: list[Answer] = field(default_factory=list)
    knowledge_context: list[KnowledgeSnippet] = field(default_factory=list)

    def next_item(self) -> str | None:
        items = self.disorder.item_ids
        return items[len(self.answered)] if len(self.answered) < len(items) else None


def likert_legend(domain: Sequence[str]) -> str:
    return ", ".join(f"{v}={LIKERT_LABELS[v]}" if v in LIKERT_LABELS else v for v in domain)


def _persona_block(p: Persona) -> str:
    return "\n".join([
        f"Sex: {p.sex}",
        f"Age: {p.age}",
        f"Severity prior: {p.severity_prior}",
        f"Response style: {p.response_style}",
        f"Symptom awareness: {p.symptom_awareness}",
        f"Communication style: {p.communication_style}",
        f"Consistency level: {p.consistency_level:.2f}",
    ])


def build_prompt(state: ConversationState, item_id: str, format_instructions: str | None = None) -> str:
    """Render the prompt for ``item_id``.

    Sections appear in a fixed order: patient characteristics, knowledge
    context (left out when there are no snippets), the current item with its
    answer scale, previous answers, and formatting instructions.
    """
    expected = state.next_item()
    if item_id != expected:
        raise ItemOutOfOrder(f"expected item {expected!r}, got {item_id!r}")
    schema = state.disorder
    name = schema.disorder_name.replace("_", " ")
    parts = [
        f"You are simulating a patient completing the DSM-5 severity measure for {name}.",
        "## Patient characteristics\n" + _persona_block(state.persona),
    ]
    if state.knowledge_context:
        lines = [f"[{i}] ({s.source}) {s.text}" for i, s in enumerate(state.knowledge_context, 1)]
        parts.append("## Knowledge Context\n" + "\n".join(lines))
    parts.append(
        "## Current item\n"
        f"{item_id}: {schema.item_text(item_id)}\n"
        f"Scale: {likert_legend(schema.likert_domain)}"
    )
    if state.answered:
        memory = "\n".join(f"{a.item_id}: {a.score}" for a in state.answered)
    else:
        memory = "(none yet)"
    parts.append("## Previous answers\n" + memory)
    instructions = format_instructions or DEFAULT_FORMAT_INSTRUCTIONS
    parts.append("## Formatting instructions\n" + instructions.format(allowed=", ".join(schema.likert_domain)))
    return "\n\n".join(parts) + "\n"


def parse_score(raw: str, domain: Sequence[str]) -> str:
    """Return the token on the last ``SCORE:`` line of ``raw``.

    Raises :class:`NoScoreLine` when there is no such line and
    :class:`OutOfDomainScore` when its token is not in ``domain``.
    """
    matches = _SCORE_LINE.findall(raw)
    if not matches:
        raise NoScoreLine("reply has no 'SCORE: <value>' line")
    token = matches[-1]
    if token not in domain:
        raise OutOfDomainScore(token, domain)
    return token


def format_score(score: str) -> str:
    return f"SCORE: {score}"


def strip_score_lines(raw: str) -> str:
    return _SCORE_LINE.sub("", raw).strip()


def correction_message(error: Exception, domain: Sequence[str]) -> str:
    return (
        f"Your previous reply could not be used ({error}). "
        f"Reply again and end with a final line 'SCORE: <score>' where <score> is one of: {', '.join(domain)}."
    )
