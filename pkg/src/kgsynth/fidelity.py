"""Fidelity of a synthetic table to a real one.

Three levels are covered: per-column marginals (Jensen-Shannon divergence,
base 2), pairwise association (bias-corrected Cramér's V, compared as a mean
absolute error over all column pairs), and the joint distribution (squared
energy distance with the Hamming metric, V-statistic form).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import DomainMismatch, EmptyInput, EmptyTable, LengthMismatch, TooFewColumns
from .tabular import CategoricalTable, EmpiricalPMF, empirical_pmf, require_same_schema


@dataclass(frozen=True)
class FidelityReport:
    mean_jsd: float
    per_column_jsd: dict[str, float]
    mae_v_error: float
    mae_v_complement: float
    per_pair_v: dict[tuple[str, str], tuple[float, float]]
    energy_distance_sq: float

    def to_dict(self) -> dict:
        return {
            "mean_jsd": self.mean_jsd,
            "per_column_jsd": dict(self.per_column_jsd),
            "mae_v_error": self.mae_v_error,
            "mae_v_complement": self.mae_v_complement,
            "energy_distance_sq": self.energy_distance_sq,
            "per_pair_v": {f"{a}|{b}": list(v) for (a, b), v in self.per_pair_v.items()},
        }


def _jsd_vectors(p: np.ndarray, q: np.ndarray) -> float:
    m = 0.5 * (p + q)
    total = 0.0
    for v in (p, q):
        nz = v > 0
        total += 0.5 * float(np.sum(v[nz] * np.log2(v[nz] / m[nz])))
    return min(max(total, 0.0), 1.0)


def jsd(p: EmpiricalPMF, q: EmpiricalPMF) -> float:
    """Jensen-Shannon divergence in bits; 0 for equal PMFs, 1 for disjoint support."""
    if p.column != q.column or list(p.probabilities) != list(q.probabilities):
        raise DomainMismatch(f"PMFs over different domains ({p.column!r}, {q.column!r})")
    return _jsd_vectors(p.vector(), q.vector())


def _column_counts(codes: np.ndarray, sizes: Sequence[int]) -> list[np.ndarray]:
    return [np.bincount(codes[:, j], minlength=k) for j, k in enumerate(sizes)]


def _mean_jsd_codes(real: np.ndarray, syn: np.ndarray, sizes: Sequence[int]) -> tuple[float, list[float]]:
    per = []
    for j, k in enumerate(sizes):
        a = np.bincount(real[:, j], minlength=k) / real.shape[0]
        b = np.bincount(syn[:, j], minlength=k) / syn.shape[0]
        per.append(_jsd_vectors(a, b))
    return float(np.mean(per)), per


def _check_pair(real: CategoricalTable, syn: CategoricalTable) -> None:
    require_same_schema(real, syn)
    if len(real) == 0 or len(syn) == 0:
        raise EmptyTable("fidelity metrics need non-empty tables")


def per_column_jsd(real: CategoricalTable, syn: CategoricalTable) -> dict[str, float]:
    _check_pair(real, syn)
    return {c: jsd(empirical_pmf(real, c), empirical_pmf(syn, c)) for c in real.schema.columns}


def mean_jsd(real: CategoricalTable, syn: CategoricalTable) -> float:
    """Average of the per-column JSD over all columns, demographics included."""
    _check_pair(real, syn)
    sizes = [len(d) for d in real.schema.domains]
    return _mean_jsd_codes(real.codes, syn.codes, sizes)[0]


_CANCEL_BAND = 1e-6


def _exact_phi2_corrected(observed: np.ndarray, n: int, r: int, c: int) -> float:
    rows = [int(v) for v in observed.sum(1)]
    cols = [int(v) for v in observed.sum(0)]
    chi2 = sum(
        Fraction((int(observed[i, j]) * n - rows[i] * cols[j]) ** 2, n * rows[i] * cols[j])
        for i in range(r)
        for j in range(c)
    )
    return float(max(Fraction(0), chi2 / n - Fraction((r - 1) * (c - 1), n - 1)))


def _cramers_v_codes(a: np.ndarray, b: np.ndarray) -> float:
    n = a.shape[0]
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    r = int(ai.max()) + 1
    c = int(bi.max()) + 1
    if r < 2 or c < 2 or n < 2:
        return 0.0
    observed = np.bincount(ai * c + bi, minlength=r * c).reshape(r, c).astype(float)
    expected = np.outer(observed.sum(1), observed.sum(0)) / n
    chi2 = float(np.sum((observed - expected) ** 2 / expected))
    phi2 = chi2 / n
    bias = (r - 1) * (c - 1) / (n - 1)
    phi2_corr = max(0.0, phi2 - bias)
    if abs(phi2 - bias) <= _CANCEL_BAND * bias:
        # phi2 and its bias term nearly cancel, and the square root below
        # would blow float rounding up to ~1e-8; redo the difference exactly
        phi2_corr = _exact_phi2_corrected(observed.astype(np.int64), n, r, c)
    r_corr = r - (r - 1) ** 2 / (n - 1)
    c_corr = c - (c - 1) ** 2 / (n - 1)
    denom = min(r_corr - 1, c_corr - 1)
    if denom <= 0:
        return 0.0
    return float(min(1.0, np.sqrt(phi2_corr / denom)))


def cramers_v_bias_corrected(col_a: Sequence, col_b: Sequence) -> float:
    """Bias-corrected Cramér's V of two equal-length categorical columns.

    Only categories that actually occur count towards the table dimensions.
    Returns 0 when either column is constant or the corrected dimension
    term is not positive.
    """
    if len(col_a) != len(col_b):
        raise LengthMismatch(f"columns have lengths {len(col_a)} and {len(col_b)}")
    if len(col_a) == 0:
        raise EmptyInput("Cramér's V needs at least one observation")
    _, a = np.unique(np.asarray(col_a, dtype=object).astype(str), return_inverse=True)
    _, b = np.unique(np.asarray(col_b, dtype=object).astype(str), return_inverse=True)
    return _cramers_v_codes(a.ravel(), b.ravel())


def _pairwise_v(codes: np.ndarray) -> list[float]:
    p = codes.shape[1]
    return [_cramers_v_codes(codes[:, j], codes[:, k]) for j, k in combinations(range(p), 2)]


def _mae_v_codes(real: np.ndarray, syn: np.ndarray) -> float:
    vr = np.asarray(_pairwise_v(real))
    vs = np.asarray(_pairwise_v(syn))
    return float(np.mean(np.abs(vr - vs)))


def pairwise_v(real: CategoricalTable, syn: CategoricalTable) -> dict[tuple[str, str], tuple[float, float]]:
    cols = real.schema.columns
    pairs = list(combinations(cols, 2))
    return dict(zip(pairs, zip(_pairwise_v(real.codes), _pairwise_v(syn.codes))))


def mae_v(real: CategoricalTable, syn: CategoricalTable) -> tuple[float, float]:
    """Mean absolute Cramér's V difference over all unordered column pairs.

    Returns ``(error, 1 - error)``.  The error is what comparisons and
    intervals use; the complement is reported alongside it.
    """
    _check_pair(real, syn)
    if real.n_columns < 2:
        raise TooFewColumns("pairwise association needs at least two columns")
    err = _mae_v_codes(real.codes, syn.codes)
    return err, 1.0 - err


def _energy_codes(real: np.ndarray, syn: np.ndarray, sizes: Sequence[int]) -> float:
    # With the Hamming metric each of the three double sums separates by
    # column, so the V-statistic reduces to sum_j ||pi_real_j - pi_syn_j||^2.
    total = 0.0
    n, m = real.shape[0], syn.shape[0]
    for j, k in enumerate(sizes):
        a = np.bincount(real[:, j], minlength=k) / n
        b = np.bincount(syn[:, j], minlength=k) / m
        total += float(np.dot(a - b, a - b))
    return total


def energy_distance_sq(real: CategoricalTable, syn: CategoricalTable) -> float:
    """Squared energy distance under Hamming distance (V-statistic).

    Equals ``2 E|X-Y| - E|X-X'| - E|Y-Y'|`` with every expectation taken as
    the full double average over rows, self-pairs included.
    """
    _check_pair(real, syn)
    sizes = [len(d) for d in real.schema.domains]
    value = _energy_codes(real.codes, syn.codes, sizes)
    return 0.0 if value < 0 else value


def evaluate_fidelity(real: CategoricalTable, syn: CategoricalTable) -> FidelityReport:
    _check_pair(real, syn)
    per_col = per_column_jsd(real, syn)
    pairs = pairwise_v(real, syn) if real.n_columns >= 2 else {}
    err = float(np.mean([abs(a - b) for a, b in pairs.values()])) if pairs else 0.0
    return FidelityReport(
        mean_jsd=float(np.mean(list(per_col.values()))),
        per_column_jsd=per_col,
        mae_v_error=err,
        mae_v_complement=1.0 - err,
        per_pair_v=pairs,
        energy_distance_sq=energy_distance_sq(real, syn),
    )
