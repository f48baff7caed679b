"""Chance-level reference dataset."""

from __future__ import annotations

import numpy as np

from ..errors import EmptyTable
from ..tabular import CategoricalTable


def random_baseline(real: CategoricalTable, seed: int = 0) -> CategoricalTable:
    """Same size as ``real``: demographics drawn i.i.d. from their empirical
    PMFs, every item drawn i.i.d. uniformly over the Likert domain."""
    if len(real) == 0:
        raise EmptyTable("baseline needs a non-empty real table")
    schema = real.schema
    rng = np.random.default_rng(seed)
    n = len(real)
    codes = np.empty((n, schema.n_columns), dtype=np.int64)
    for j, column in enumerate(schema.columns):
        k = len(schema.domains[j])
        if column in schema.demographic_columns:
            pmf = np.bincount(real.codes[:, j], minlength=k) / n
            codes[:, j] = rng.choice(k, size=n, p=pmf)
        else:
            codes[:, j] = rng.integers(0, k, size=n)
    rows = tuple(tuple(schema.domains[j][c] for j, c in enumerate(r)) for r in codes.tolist())
    return CategoricalTable(schema, rows)
