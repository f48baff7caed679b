from __future__ import annotations

import random

import pytest

from kgsynth.tabular import CategoricalTable, DisorderSchema


def make_schema(n_items: int = 3, likert=("0", "1", "2", "3", "4"), ages=("20", "30", "40"), demographics=("sex", "age")):
    return DisorderSchema(
        disorder_name="toy",
        item_ids=tuple(f"it{i}" for i in range(1, n_items + 1)),
        likert_domain=likert,
        demographic_columns=demographics,
        age_domain=ages,
    )


def random_table(rng: random.Random, schema: DisorderSchema, n: int) -> CategoricalTable:
    rows = [tuple(rng.choice(dom) for dom in schema.domains) for _ in range(n)]
    return CategoricalTable(schema, tuple(rows))


def random_pair(seed: int, max_rows: int = 30, max_cols: int = 6):
    """Two random tables over a shared random schema with small domains."""
    rng = random.Random(seed)
    p = rng.randint(2, max_cols)
    n_demo = rng.choice([0, 1, 2])
    demo = ("sex", "age")[:n_demo]
    n_items = max(1, p - n_demo)
    likert = tuple(str(v) for v in range(rng.randint(2, 5)))
    ages = tuple(str(a) for a in range(30, 30 + rng.randint(1, 4)))
    schema = make_schema(n_items, likert, ages, demo)
    real = random_table(rng, schema, rng.randint(1, max_rows))
    syn = random_table(rng, schema, rng.randint(1, max_rows))
    return real, syn


@pytest.fixture
def toy_schema():
    return make_schema()
