"""Privacy-gated choice among externally trained generator candidates.

Candidates are sample CSVs drawn from models trained on ``D_train``.  Each
is scored with one fidelity proxy against ``D_tune`` and three privacy
proxies against ``D_train``; the lowest-JSD candidate that passes every gate
wins, and when none passes a lexicographic fallback ranks all of them.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import ConfigError, EmptyCandidateList
from .fidelity import mean_jsd
from .privacy import nn_hamming, quantile
from .tabular import CategoricalTable, require_same_schema

log = logging.getLogger(__name__)

GATED = "gated"
FALLBACK = "fallback"


@dataclass(frozen=True)
class CandidateScores:
    jsd: float
    eo: float
    near_share_le1: float
    q05_ham: float

    def to_dict(self) -> dict:
        return {"jsd": self.jsd, "eo": self.eo, "near_share_le1": self.near_share_le1, "q05_ham": self.q05_ham}


@dataclass(frozen=True)
class CandidateRecord:
    candidate_id: str
    sample_path: str | None = None
    scores: CandidateScores | None = None


@dataclass(frozen=True)
class GateConfig:
    eo_max: float = 0.01
    near_share_max: float = 0.10
    q05_ham_min: float = 1.0

    def __post_init__(self):
        for name in ("eo_max", "near_share_max", "q05_ham_min"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        for name in ("eo_max", "near_share_max"):
            if not 0 <= getattr(self, name) <= 1:
                raise ConfigError(f"{name} must lie in [0, 1]")

    def passes(self, s: CandidateScores) -> bool:
        return s.eo <= self.eo_max and s.near_share_le1 <= self.near_share_max and s.q05_ham >= self.q05_ham_min


def score_candidate(
    candidate_sample: CategoricalTable,
    d_train: CategoricalTable,
    d_tune: CategoricalTable,
) -> CandidateScores:
    require_same_schema(candidate_sample, d_train, d_tune)
    if len(candidate_sample) != len(d_tune):
        log.warning("candidate has %d rows, tune split has %d", len(candidate_sample), len(d_tune))
    ham = nn_hamming(candidate_sample, d_train)
    return CandidateScores(
        jsd=mean_jsd(d_tune, candidate_sample),
        eo=float((ham == 0).mean()),
        near_share_le1=float((ham <= 1).mean()),
        q05_ham=quantile(ham.tolist(), 0.05),
    )


def select(candidates: Sequence[CandidateRecord], gates: GateConfig = GateConfig()) -> tuple[CandidateRecord, str]:
    """Return ``(winner, mode)`` with mode ``"gated"`` or ``"fallback"``.

    Ties are broken by ``candidate_id`` so the result never depends on the
    order of ``candidates``.
    """
    if not candidates:
        raise EmptyCandidateList("no candidates to select from")
    for c in candidates:
        if c.scores is None:
            raise ValueError(f"candidate {c.candidate_id!r} has not been scored")

    passing = [c for c in candidates if gates.passes(c.scores)]
    if passing:
        return min(passing, key=lambda c: (c.scores.jsd, c.candidate_id)), GATED

    def fallback_key(c: CandidateRecord):
        s = c.scores
        return (s.eo, s.near_share_le1, -s.q05_ham, s.jsd, c.candidate_id)

    return min(candidates, key=fallback_key), FALLBACK


def load_manifest(path: str | Path) -> list[CandidateRecord]:
    """Read ``[{"candidate_id": ..., "sample_path": ...}, ...]``.

    Relative sample paths resolve against the manifest's directory.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"manifest not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"manifest {path} is not valid JSON: {exc}") from None
    if not isinstance(data, list) or not data:
        raise ConfigError("manifest must be a non-empty JSON array")
    out = []
    seen = set()
    for entry in data:
        if not isinstance(entry, dict) or "candidate_id" not in entry or "sample_path" not in entry:
            raise ConfigError("manifest entries need candidate_id and sample_path")
        cid = str(entry["candidate_id"])
        if cid in seen:
            raise ConfigError(f"duplicate candidate_id {cid!r}")
        seen.add(cid)
        sample = Path(entry["sample_path"])
        if not sample.is_absolute():
            sample = path.parent / sample
        out.append(CandidateRecord(cid, str(sample)))
    return out
