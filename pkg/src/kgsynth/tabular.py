"""Schemas and tables for small-domain categorical questionnaire data.

A :class:`CategoricalTable` is the common currency of the package: the
generator emits one, and every metric consumes two.  Cells are stored as the
literal category tokens (``"female"``, ``"34"``, ``"3"``) and every cell is
checked against its column domain at construction time, so downstream code
never has to re-validate.
"""

from __future__ import annotations

import csv
import json
import math
from importlib import resources
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    EmptyTable,
    InvalidSchema,
    MissingCell,
    MissingColumn,
    OutOfDomainValue,
    SchemaMismatch,
    UnknownColumn,
)

DEFAULT_LIKERT = ("0", "1", "2", "3", "4")
DEFAULT_SEX = ("female", "male")
DEFAULT_AGES = tuple(str(a) for a in range(18, 81))
DEMOGRAPHICS = ("sex", "age")


def _tokens(values: Iterable[object]) -> tuple[str, ...]:
    return tuple(str(v).strip() for v in values)


@dataclass(frozen=True)
class DisorderSchema:
    """Column layout and category domains of one questionnaire table.

    Columns are ``demographic_columns`` followed by ``item_ids``.  Every
    domain is a tuple of string tokens; numeric domains given as integers
    are converted on construction.
    """

    disorder_name: str
    item_ids: tuple[str, ...]
    likert_domain: tuple[str, ...] = DEFAULT_LIKERT
    demographic_columns: tuple[str, ...] = DEMOGRAPHICS
    sex_domain: tuple[str, ...] = DEFAULT_SEX
    age_domain: tuple[str, ...] = DEFAULT_AGES
    item_texts: Mapping[str, str] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        for name in ("item_ids", "likert_domain", "demographic_columns", "sex_domain", "age_domain"):
            object.__setattr__(self, name, _tokens(getattr(self, name)))
        object.__setattr__(self, "item_texts", dict(self.item_texts))

        if not self.disorder_name:
            raise InvalidSchema("disorder_name must be non-empty")
        if not self.item_ids or any(not i for i in self.item_ids):
            raise InvalidSchema("item_ids must be a non-empty list of non-empty names")
        if len(set(self.item_ids)) != len(self.item_ids):
            raise InvalidSchema("item_ids must be unique")
        if len(self.likert_domain) < 2 or len(set(self.likert_domain)) != len(self.likert_domain):
            raise InvalidSchema("likert_domain needs at least 2 distinct categories")
        unknown = [c for c in self.demographic_columns if c not in DEMOGRAPHICS]
        if unknown or len(set(self.demographic_columns)) != len(self.demographic_columns):
            raise InvalidSchema(f"demographic_columns must be drawn from {DEMOGRAPHICS}")
        if set(self.demographic_columns) & set(self.item_ids):
            raise InvalidSchema("demographic_columns and item_ids overlap")
        for name in ("sex_domain", "age_domain"):
            dom = getattr(self, name)
            if not dom or len(set(dom)) != len(dom):
                raise InvalidSchema(f"{name} must be non-empty without duplicates")

    @property
    def columns(self) -> tuple[str, ...]:
        return self.demographic_columns + self.item_ids

    @property
    def n_columns(self) -> int:
        return len(self.demographic_columns) + len(self.item_ids)

    def column_index(self, column: str) -> int:
        try:
            return self.columns.index(column)
        except ValueError:
            raise UnknownColumn(column) from None

    def domain(self, column: str) -> tuple[str, ...]:
        if column == "sex" and "sex" in self.demographic_columns:
            return self.sex_domain
        if column == "age" and "age" in self.demographic_columns:
            return self.age_domain
        if column in self.item_ids:
            return self.likert_domain
        raise UnknownColumn(column)

    @cached_property
    def domains(self) -> tuple[tuple[str, ...], ...]:
        return tuple(self.domain(c) for c in self.columns)

    def item_text(self, item_id: str) -> str:
        return self.item_texts.get(item_id, item_id)

    def to_dict(self) -> dict:
        out = {
            "disorder_name": self.disorder_name,
            "item_ids": list(self.item_ids),
            "likert_domain": list(self.likert_domain),
            "demographic_columns": list(self.demographic_columns),
            "sex_domain": list(self.sex_domain),
            "age_domain": list(self.age_domain),
        }
        if self.item_texts:
            out["item_texts"] = dict(self.item_texts)
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "DisorderSchema":
        known = {"disorder_name", "item_ids", "likert_domain", "demographic_columns",
                 "sex_domain", "age_domain", "item_texts"}
        extra = set(data) - known
        if extra:
            raise InvalidSchema(f"unexpected schema fields: {sorted(extra)}")
        if "disorder_name" not in data or "item_ids" not in data:
            raise InvalidSchema("schema needs disorder_name and item_ids")
        return cls(**data)


def load_schema(path: str | Path) -> DisorderSchema:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InvalidSchema(f"schema file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InvalidSchema(f"schema file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise InvalidSchema("schema file must hold a JSON object")
    return DisorderSchema.from_dict(data)


def builtin_schema_names() -> list[str]:
    root = resources.files("kgsynth") / "schemas"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def builtin_schema(name: str) -> DisorderSchema:
    """One of the bundled six-disorder schemas, e.g. ``"social_anxiety"``."""
    if name not in builtin_schema_names():
        raise InvalidSchema(f"no bundled schema {name!r}; choose from {builtin_schema_names()}")
    text = (resources.files("kgsynth") / "schemas" / f"{name}.json").read_text(encoding="utf-8")
    return DisorderSchema.from_dict(json.loads(text))


def save_schema(schema: DisorderSchema, path: str | Path) -> None:
    Path(path).write_text(json.dumps(schema.to_dict(), indent=2) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class CategoricalTable:
    """Validated rows of a questionnaire table.

    ``rows`` holds one tuple of string tokens per record, in schema column
    order.  ``codes`` gives the same content as an ``(n, p)`` integer array of
    positions within each column domain, which is what the metrics use.
    """

    schema: DisorderSchema
    rows: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        p = self.schema.n_columns
        rows = tuple(_tokens(r) for r in self.rows)
        lookups = [set(d) for d in self.schema.domains]
        for i, row in enumerate(rows):
            if len(row) < p:
                raise MissingCell(i, self.schema.columns[len(row)])
            if len(row) > p:
                raise SchemaMismatch(f"row {i} has {len(row)} cells, schema has {p} columns")
            for j, value in enumerate(row):
                if value == "":
                    raise MissingCell(i, self.schema.columns[j])
                if value not in lookups[j]:
                    raise OutOfDomainValue(i, self.schema.columns[j], value)
        object.__setattr__(self, "rows", rows)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def n_columns(self) -> int:
        return self.schema.n_columns

    @cached_property
    def codes(self) -> np.ndarray:
        p = self.schema.n_columns
        out = np.empty((len(self.rows), p), dtype=np.int64)
        for j, dom in enumerate(self.schema.domains):
            pos = {v: k for k, v in enumerate(dom)}
            for i, row in enumerate(self.rows):
                out[i, j] = pos[row[j]]
        out.setflags(write=False)
        return out

    def column(self, name: str) -> tuple[str, ...]:
        j = self.schema.column_index(name)
        return tuple(r[j] for r in self.rows)

    def take(self, indices: Sequence[int]) -> "CategoricalTable":
        return CategoricalTable(self.schema, tuple(self.rows[i] for i in indices))


def require_same_schema(*tables: CategoricalTable) -> DisorderSchema:
    schema = tables[0].schema
    for t in tables[1:]:
        if t.schema != schema:
            raise SchemaMismatch(
                f"tables use different schemas ({schema.disorder_name!r} vs {t.schema.disorder_name!r})"
            )
    return schema


def _normalize_token(value: str) -> str:
    # Imputed CSVs often carry integer categories as floats ("2.0").
    value = value.strip()
    try:
        as_float = float(value)
    except ValueError:
        return value
    if math.isfinite(as_float) and as_float.is_integer() and not value.lstrip("+-").isdigit():
        return str(int(as_float))
    return value


def load_table(path: str | Path, schema: DisorderSchema) -> CategoricalTable:
    """Read a CSV whose header names every schema column.

    Columns may appear in any order and are rearranged into schema order;
    a header without some schema column raises :class:`MissingColumn`, a
    header with a column the schema does not know raises
    :class:`UnknownColumn`.  Row indices in errors are 0-based data rows.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise MissingColumn(schema.columns[0]) from None
        for col in schema.columns:
            if col not in header:
                raise MissingColumn(col)
        for col in header:
            if col not in schema.columns:
                raise UnknownColumn(col)
        order = [header.index(c) for c in schema.columns]
        rows = []
        for i, raw in enumerate(reader):
            if not raw:
                continue
            row = []
            for j, src in zip(range(schema.n_columns), order):
                if src >= len(raw) or raw[src].strip() == "":
                    raise MissingCell(i, schema.columns[j])
                row.append(_normalize_token(raw[src]))
            rows.append(tuple(row))
    return CategoricalTable(schema, tuple(rows))


def save_table(table: CategoricalTable, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(table_to_csv(table))


def table_to_csv(table: CategoricalTable) -> str:
    lines = [",".join(table.schema.columns)]
    lines.extend(",".join(r) for r in table.rows)
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class EmpiricalPMF:
    column: str
    probabilities: Mapping[str, float]

    def vector(self) -> np.ndarray:
        return np.fromiter(self.probabilities.values(), dtype=float, count=len(self.probabilities))


def empirical_pmf(table: CategoricalTable, column: str) -> EmpiricalPMF:
    """Relative frequency of every category of ``column``, zeros included."""
    j = table.schema.column_index(column)
    if len(table) == 0:
        raise EmptyTable("cannot take the PMF of an empty table")
    dom = table.schema.domains[j]
    counts = np.bincount(table.codes[:, j], minlength=len(dom))
    probs = counts / counts.sum()
    return EmpiricalPMF(column, dict(zip(dom, probs.tolist())))


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5 + 1e-9)


def stratified_split(
    table: CategoricalTable,
    train_fraction: float,
    stratify_column: str | None = None,
    seed: int = 0,
) -> tuple[CategoricalTable, CategoricalTable]:
    """Split rows into (train, tune), optionally per stratum.

    Each stratum of size ``s`` contributes ``round_half_up(train_fraction * s)``
    rows to train, clamped to ``[1, s - 1]`` when ``s >= 2``; a single-row
    stratum goes to train.  Both outputs keep the input row order.
    """
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    if len(table) == 0:
        raise EmptyTable("cannot split an empty table")

    if stratify_column is None:
        strata = {None: list(range(len(table)))}
    else:
        j = table.schema.column_index(stratify_column)
        strata = {}
        for code in range(len(table.schema.domains[j])):
            idx = np.flatnonzero(table.codes[:, j] == code).tolist()
            if idx:
                strata[code] = idx

    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    for members in strata.values():
        s = len(members)
        t = _round_half_up(train_fraction * s)
        t = 1 if s == 1 else min(max(t, 1), s - 1)
        perm = rng.permutation(s)
        train_idx.extend(members[k] for k in perm[:t])

    chosen = set(train_idx)
    train = sorted(chosen)
    tune = [i for i in range(len(table)) if i not in chosen]
    return table.take(train), table.take(tune)
