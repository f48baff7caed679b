"""Record-level disclosure proxies for a synthetic table against real data."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptyInput, EmptyReal, EmptySynthetic, SchemaMismatch
from .tabular import CategoricalTable, require_same_schema

DEFAULT_QI = ("sex", "age")
_CHUNK = 256


@dataclass(frozen=True)
class PrivacyReport:
    exact_overlap: float
    nn_q05_normalized: float
    nn_q05_hamming: float
    near_match_share_le1: float
    k_map_risk_avg: float
    per_record_nn: list[tuple[float, int]] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "exact_overlap": self.exact_overlap,
            "nn_q05_normalized": self.nn_q05_normalized,
            "nn_q05_hamming": self.nn_q05_hamming,
            "near_match_share_le1": self.near_match_share_le1,
            "k_map_risk_avg": self.k_map_risk_avg,
        }


def exact_overlap(syn: CategoricalTable, real: CategoricalTable) -> float:
    """Share of synthetic rows that equal some real row on every column."""
    require_same_schema(syn, real)
    if len(syn) == 0:
        raise EmptySynthetic("no synthetic rows")
    seen = set(real.rows)
    return sum(r in seen for r in syn.rows) / len(syn)


def nn_hamming(syn: CategoricalTable, real: CategoricalTable) -> np.ndarray:
    """Raw Hamming distance from every synthetic row to its closest real row."""
    require_same_schema(syn, real)
    if len(real) == 0:
        raise EmptyReal("nearest-neighbour search needs real rows")
    s, r = syn.codes, real.codes
    out = np.empty(len(syn), dtype=np.int64)
    for start in range(0, len(syn), _CHUNK):
        block = s[start:start + _CHUNK]
        out[start:start + len(block)] = (block[:, None, :] != r[None, :, :]).sum(axis=2).min(axis=1)
    return out


def nn_distances(syn: CategoricalTable, real: CategoricalTable) -> list[tuple[float, int]]:
    """``(hamming / p, hamming)`` per synthetic row, in synthetic row order."""
    ham = nn_hamming(syn, real)
    p = syn.n_columns
    return [(h / p, h) for h in ham.tolist()]


def quantile(values: Sequence[float], q: float) -> float:
    """Empirical quantile with linear interpolation between order statistics."""
    if len(values) == 0:
        raise EmptyInput("quantile of an empty list")
    if not 0 <= q <= 1:
        raise ValueError("q must lie in [0, 1]")
    xs = sorted(values)
    h = q * (len(xs) - 1)
    lo = math.floor(h)
    hi = min(lo + 1, len(xs) - 1)
    return float(xs[lo] + (h - lo) * (xs[hi] - xs[lo]))


def near_match_share(syn: CategoricalTable, real: CategoricalTable, threshold: int = 1) -> float:
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    ham = nn_hamming(syn, real)
    if len(ham) == 0:
        raise EmptySynthetic("no synthetic rows")
    return float(np.mean(ham <= threshold))


def k_map_risk(
    syn: CategoricalTable,
    real: CategoricalTable,
    qi_columns: Sequence[str] = DEFAULT_QI,
) -> tuple[float, list[float]]:
    """Known-QI linkage risk.

    A synthetic row whose QI pattern matches ``k`` real rows carries risk
    ``1/k``; a pattern absent from the real data carries 0.  Returns the
    average and the per-record values.
    """
    require_same_schema(syn, real)
    if not qi_columns:
        raise SchemaMismatch("k-map risk needs at least one quasi-identifier")
    idx = [syn.schema.column_index(c) for c in qi_columns]
    classes = Counter(tuple(row[j] for j in idx) for row in real.rows)
    per = []
    for row in syn.rows:
        k = classes.get(tuple(row[j] for j in idx), 0)
        per.append(1.0 / k if k else 0.0)
    if not per:
        raise EmptySynthetic("no synthetic rows")
    return float(np.mean(per)), per


def evaluate_privacy(
    syn: CategoricalTable,
    real: CategoricalTable,
    qi_columns: Sequence[str] = DEFAULT_QI,
    q: float = 0.05,
) -> PrivacyReport:
    require_same_schema(syn, real)
    if len(syn) == 0:
        raise EmptySynthetic("no synthetic rows")
    ham = nn_hamming(syn, real)
    p = syn.n_columns
    q_ham = quantile(ham.tolist(), q)
    qi = [c for c in qi_columns if c in syn.schema.columns]
    risk = k_map_risk(syn, real, qi)[0] if qi else 0.0
    return PrivacyReport(
        exact_overlap=exact_overlap(syn, real),
        nn_q05_normalized=q_ham / p,
        nn_q05_hamming=q_ham,
        near_match_share_le1=float(np.mean(ham <= 1)),
        k_map_risk_avg=risk,
        per_record_nn=[(h / p, h) for h in ham.tolist()],
    )
