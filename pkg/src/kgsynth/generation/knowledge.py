"""Clinical reference chunks with lexical BM25 retrieval."""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from ..errors import ConfigError, EmptyCorpus, IndexNotBuilt, UnreadableFile

DSM = "DSM-V"
ICD = "ICD-10"
SOURCES = (DSM, ICD)

MAX_TOKENS = 512
OVERLAP = 64
DEFAULT_K = 4

_WORD = re.compile(r"\w+")
_PARAGRAPH_BREAK = re.compile(r"\n\s*\n")


class KbMode(str, Enum):
    NO_KB = "none"
    DSM_ONLY = "dsm"
    ICD_ONLY = "icd"
    DUAL_KB = "dual"

    @property
    def sources(self) -> frozenset[str]:
        return {
            KbMode.NO_KB: frozenset(),
            KbMode.DSM_ONLY: frozenset({DSM}),
            KbMode.ICD_ONLY: frozenset({ICD}),
            KbMode.DUAL_KB: frozenset(SOURCES),
        }[self]


@dataclass(frozen=True)
class KnowledgeSnippet:
    source: str
    disorder_tag: str
    text: str
    score: float
    chunk_id: int = -1


@dataclass(frozen=True)
class Chunk:
    chunk_id: int
    source: str
    disorder_tags: tuple[str, ...]
    text: str
    path: str


def tokenize(text: str) -> list[str]:
    return _WORD.findall(text.lower())


def chunk_text(text: str, max_tokens: int = MAX_TOKENS, overlap: int = OVERLAP) -> list[str]:
    """Split on blank lines; paragraphs over ``max_tokens`` whitespace tokens
    become overlapping windows of at most ``max_tokens`` tokens."""
    if overlap >= max_tokens:
        raise ValueError("overlap must be smaller than max_tokens")
    chunks = []
    for para in _PARAGRAPH_BREAK.split(text):
        words = para.split()
        if not words:
            continue
        if len(words) <= max_tokens:
            chunks.append(para.strip())
            continue
        step = max_tokens - overlap
        for start in range(0, len(words), step):
            chunks.append(" ".join(words[start:start + max_tokens]))
            if start + max_tokens >= len(words):
                break
    return chunks


class KnowledgeIndex:
    """BM25 (Okapi, k1=1.2, b=0.75) over knowledge chunks.

    ``search_calls`` counts lookups so callers can confirm when retrieval
    was skipped.
    """

    def __init__(self, chunks: Sequence[Chunk], k1: float = 1.2, b: float = 0.75):
        if not chunks:
            raise EmptyCorpus("knowledge base has no chunks")
        self.chunks = list(chunks)
        self.k1 = k1
        self.b = b
        self.search_calls = 0
        self._tf = [Counter(tokenize(c.text)) for c in self.chunks]
        self._len = [sum(tf.values()) for tf in self._tf]
        self._avgdl = sum(self._len) / len(self._len) or 1.0
        df = Counter()
        for tf in self._tf:
            df.update(tf.keys())
        n = len(self.chunks)
        self._idf = {t: math.log(1 + (n - d + 0.5) / (d + 0.5)) for t, d in df.items()}

    def __len__(self) -> int:
        return len(self.chunks)

    def score(self, query: str, chunk_id: int) -> float:
        tf = self._tf[chunk_id]
        norm = self.k1 * (1 - self.b + self.b * self._len[chunk_id] / self._avgdl)
        total = 0.0
        for term in set(tokenize(query)):
            f = tf.get(term, 0)
            if f:
                total += self._idf[term] * f * (self.k1 + 1) / (f + norm)
        return total

    def search(self, query: str, k: int, sources: Iterable[str] | None = None) -> list[KnowledgeSnippet]:
        """Top-``k`` chunks with a positive score, best first.

        Ties are ordered by ``(source, chunk_id)``.
        """
        self.search_calls += 1
        allowed = None if sources is None else set(sources)
        scored = []
        for c in self.chunks:
            if allowed is not None and c.source not in allowed:
                continue
            s = self.score(query, c.chunk_id)
            if s > 0:
                scored.append((-s, c.source, c.chunk_id))
        scored.sort()
        out = []
        for neg, _, cid in scored[:k]:
            c = self.chunks[cid]
            tag = ",".join(c.disorder_tags) or "general"
            out.append(KnowledgeSnippet(c.source, tag, c.text, -neg, cid))
        return out


def build_kb(
    paths: Sequence[str | Path],
    source_labels: Sequence[str],
    disorder_tags: Sequence[Sequence[str]] | None = None,
) -> KnowledgeIndex:
    if len(paths) != len(source_labels):
        raise ConfigError("every knowledge file needs a source label")
    if not paths:
        raise EmptyCorpus("no knowledge files given")
    tags = disorder_tags or [()] * len(paths)
    chunks: list[Chunk] = []
    for path, source, tag in zip(paths, source_labels, tags):
        if source not in SOURCES:
            raise ConfigError(f"source label must be one of {SOURCES}, got {source!r}")
        try:
            text = Path(path).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise UnreadableFile(f"cannot read {path}: {exc}") from None
        for piece in chunk_text(text):
            chunks.append(Chunk(len(chunks), source, tuple(tag), piece, str(path)))
    if not chunks:
        raise EmptyCorpus("knowledge files contain no text")
    return KnowledgeIndex(chunks)


def load_kb(manifest_path: str | Path) -> KnowledgeIndex:
    """Build an index from a manifest listing ``{path, source, disorders}`` entries.

    Relative paths resolve against the manifest's directory.
    """
    manifest_path = Path(manifest_path)
    try:
        entries = json.loads(manifest_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"knowledge manifest not found: {manifest_path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"knowledge manifest is not valid JSON: {exc}") from None
    if isinstance(entries, dict):
        entries = entries.get("files", [])
    paths, labels, tags = [], [], []
    for e in entries:
        if not isinstance(e, dict) or "path" not in e or "source" not in e:
            raise ConfigError("knowledge manifest entries need path and source")
        p = Path(e["path"])
        paths.append(p if p.is_absolute() else manifest_path.parent / p)
        labels.append(e["source"])
        tags.append(tuple(e.get("disorders", ())))
    return build_kb(paths, labels, tags)


def retrieve(index: KnowledgeIndex | None, query: str, k: int, mode: KbMode) -> list[KnowledgeSnippet]:
    mode = KbMode(mode)
    if k < 1:
        raise ValueError("k must be at least 1")
    if mode is KbMode.NO_KB:
        return []
    if index is None:
        raise IndexNotBuilt(f"mode {mode.value!r} needs a knowledge index")
    return index.search(query, k, mode.sources)
