"""Synthetic patient personas: demographics plus a latent response profile."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..errors import EmptyDomain
from ..tabular import DEFAULT_SEX

SEVERITY_PRIORS = ("minimal", "mild", "moderate", "severe")
RESPONSE_STYLES = ("understating", "balanced", "dramatizing")
SYMPTOM_AWARENESS = ("low", "medium", "high")
COMMUNICATION_STYLES = ("terse", "conversational", "detailed")
DEFAULT_AGE_RANGE = tuple(range(18, 81))


@dataclass(frozen=True)
class Persona:
    sex: str
    age: int
    severity_prior: str
    response_style: str
    symptom_awareness: str
    communication_style: str
    consistency_level: float
    rng_seed: int

    def to_dict(self) -> dict:
        return asdict(self)


Pmf = Mapping[str, float]


@dataclass(frozen=True)
class PersonaConfig:
    """Distributions personas are drawn from.

    Every ``*_pmf`` left as ``None`` means uniform over the matching domain.
    ``severity_by_disorder`` overrides ``severity_pmf`` for named disorders.
    """

    sex_domain: Sequence[str] = DEFAULT_SEX
    sex_pmf: Pmf | None = None
    age_domain: Sequence[int] = DEFAULT_AGE_RANGE
    age_pmf: Mapping[int, float] | None = None
    severity_pmf: Pmf | None = None
    severity_by_disorder: Mapping[str, Pmf] = field(default_factory=dict)
    response_style_pmf: Pmf | None = None
    awareness_pmf: Pmf | None = None
    communication_pmf: Pmf | None = None
    consistency_range: tuple[float, float] = (0.0, 1.0)

    @classmethod
    def from_dict(cls, data: Mapping) -> "PersonaConfig":
        data = dict(data)
        if "age_domain" in data:
            data["age_domain"] = tuple(int(a) for a in data["age_domain"])
        if data.get("age_pmf") is not None:
            data["age_pmf"] = {int(a): float(p) for a, p in data["age_pmf"].items()}
        if "consistency_range" in data:
            data["consistency_range"] = tuple(data["consistency_range"])
        return cls(**data)


def _draw(rng: np.random.Generator, name: str, domain: Sequence, pmf: Mapping | None):
    if pmf is None:
        if len(domain) == 0:
            raise EmptyDomain(f"{name} domain is empty")
        return domain[int(rng.integers(len(domain)))]
    keys = list(pmf)
    weights = np.asarray([pmf[k] for k in keys], dtype=float)
    if not keys or np.any(weights < 0) or weights.sum() <= 0:
        raise EmptyDomain(f"{name} distribution has no positive mass")
    return keys[int(rng.choice(len(keys), p=weights / weights.sum()))]


def sample_persona(config: PersonaConfig, seed: int, disorder: str | None = None) -> Persona:
    """Draw one persona; the same ``(config, seed, disorder)`` always gives the same result."""
    rng = np.random.default_rng(seed)
    severity = config.severity_by_disorder.get(disorder, config.severity_pmf) if disorder else config.severity_pmf
    lo, hi = config.consistency_range
    if not 0 <= lo <= hi <= 1:
        raise EmptyDomain("consistency_range must satisfy 0 <= low <= high <= 1")
    return Persona(
        sex=str(_draw(rng, "sex", tuple(config.sex_domain), config.sex_pmf)),
        age=int(_draw(rng, "age", tuple(config.age_domain), config.age_pmf)),
        severity_prior=str(_draw(rng, "severity_prior", SEVERITY_PRIORS, severity)),
        response_style=str(_draw(rng, "response_style", RESPONSE_STYLES, config.response_style_pmf)),
        symptom_awareness=str(_draw(rng, "symptom_awareness", SYMPTOM_AWARENESS, config.awareness_pmf)),
        communication_style=str(_draw(rng, "communication_style", COMMUNICATION_STYLES, config.communication_pmf)),
        consistency_level=float(rng.uniform(lo, hi)) if hi > lo else float(lo),
        rng_seed=int(seed),
    )
