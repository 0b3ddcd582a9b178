"""Sparse salient-term vectors and the operations the extractors build on.

An item's meaning is carried by a sparse map from salient terms (unigrams or
bigrams) to nonnegative salience weights. Any group of items lives in the
same open-ended term space via element-wise aggregation, and similarity
between anything representable there is plain cosine.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

__all__ = [
    "MIN_WEIGHT",
    "InvalidVectorError",
    "ConceptVector",
    "Item",
    "UserHistory",
    "cosine",
    "aggregate",
    "top_terms",
    "tfidf_extract",
]

# Entries below this are dropped at canonicalization to bound sparse growth.
MIN_WEIGHT = 1e-12


class InvalidVectorError(ValueError):
    """A term weight is non-finite, negative, or attached to a bad term."""


class ConceptVector:
    """Immutable sparse term->weight vector in canonical form.

    Canonical form: no zero (or sub-MIN_WEIGHT) entries, terms iterated in
    sorted order, all weights finite and >= 0. Item-level vectors keep
    weights <= 1; aggregated vectors may exceed 1.
    """

    __slots__ = ("_entries", "_norm")

    def __init__(self, entries: Mapping[str, float] | Iterable[tuple[str, float]] | None = None):
        acc: dict[str, float] = {}
        if entries:
            pairs = entries.items() if isinstance(entries, Mapping) else entries
            for term, weight in pairs:
                if not isinstance(term, str) or not term:
                    raise InvalidVectorError(f"term must be a non-empty string, got {term!r}")
                w = float(weight)
                if not math.isfinite(w) or w < 0.0:
                    raise InvalidVectorError(f"weight for {term!r} must be finite and >= 0, got {weight!r}")
                acc[term] = acc.get(term, 0.0) + w
        self._entries: dict[str, float] = {
            t: w for t, w in sorted(acc.items()) if w >= MIN_WEIGHT
        }
        self._norm: float = math.sqrt(math.fsum(w * w for w in self._entries.values()))

    @property
    def norm(self) -> float:
        return self._norm

    def items(self) -> Iterator[tuple[str, float]]:
        return iter(self._entries.items())

    def get(self, term: str, default: float = 0.0) -> float:
        return self._entries.get(term, default)

    def to_dict(self) -> dict[str, float]:
        return dict(self._entries)

    def __contains__(self, term: str) -> bool:
        return term in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __bool__(self) -> bool:
        return bool(self._entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConceptVector):
            return NotImplemented
        return self._entries == other._entries

    def __repr__(self) -> str:
        inner = ", ".join(f"{t}: {w:.4g}" for t, w in list(self._entries.items())[:6])
        more = ", ..." if len(self._entries) > 6 else ""
        return f"ConceptVector({{{inner}{more}}})"


_EMPTY = ConceptVector()


def cosine(a: ConceptVector, b: ConceptVector) -> float:
    """Cosine similarity of two concept vectors, in [0, 1].

    Returns 0 when either vector is empty or has zero norm.
    """
    if a.norm == 0.0 or b.norm == 0.0:
        return 0.0
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    dot = math.fsum(w * large.get(t) for t, w in small.items())
    return min(1.0, max(0.0, dot / (a.norm * b.norm)))


def aggregate(vectors: Iterable[ConceptVector]) -> ConceptVector:
    """Element-wise sum of concept vectors; empty input gives the empty vector."""
    acc: dict[str, float] = {}
    for vec in vectors:
        for term, weight in vec.items():
            acc[term] = acc.get(term, 0.0) + weight
    return ConceptVector(acc)


def top_terms(v: ConceptVector, k: int) -> list[tuple[str, float]]:
    """The k heaviest entries, descending by weight, ties broken by term."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ranked = sorted(v.items(), key=lambda pair: (-pair[1], pair[0]))
    return ranked[:k]


@dataclass(frozen=True)
class Item:
    """One interaction unit: an id, display title, timestamp, and concepts.

    ``dense`` is an optional fixed-length embedding used only by the
    dense-similarity baseline; when present it must share one length
    corpus-wide (enforced at ingestion).
    """

    id: str
    title: str
    timestamp: int
    concepts: ConceptVector = field(default_factory=lambda: _EMPTY)
    dense: tuple[float, ...] | None = None

    def __post_init__(self):
        for term, weight in self.concepts.items():
            if weight > 1.0 + 1e-12:
                raise InvalidVectorError(
                    f"item {self.id!r}: salience weight for {term!r} exceeds 1 ({weight})"
                )
        if self.dense is not None and not isinstance(self.dense, tuple):
            object.__setattr__(self, "dense", tuple(float(x) for x in self.dense))


@dataclass
class UserHistory:
    """Time-ordered interaction sequence for one user (caller-sorted)."""

    user_id: str
    items: list[Item]

    def __len__(self) -> int:
        return len(self.items)


_TOKEN_RE = re.compile(r"[0-9a-z]+")


def _tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumeric runs, drop tokens shorter than 2 chars."""
    return [tok for tok in _TOKEN_RE.findall(text.lower()) if len(tok) >= 2]


def tfidf_extract(corpus: Sequence[tuple[str, str]]) -> dict[str, ConceptVector]:
    """Fallback salience extractor: per-document unigram+bigram TF-IDF.

    IDF is smoothed as ln(1 + N/df) so corpus-universal terms keep a small
    positive weight; each document is max-normalized so weights land in
    (0, 1]. A document with no tokens maps to the empty vector.
    """
    if not corpus:
        raise ValueError("corpus must be non-empty")
    doc_terms: list[tuple[str, Counter[str]]] = []
    df: Counter[str] = Counter()
    seen_ids: set[str] = set()
    for doc_id, text in corpus:
        if doc_id in seen_ids:
            raise ValueError(f"duplicate document id {doc_id!r}")
        seen_ids.add(doc_id)
        tokens = _tokenize(text)
        counts = Counter(tokens)
        counts.update(" ".join(pair) for pair in zip(tokens, tokens[1:]))
        doc_terms.append((doc_id, counts))
        df.update(counts.keys())

    n_docs = len(corpus)
    out: dict[str, ConceptVector] = {}
    for doc_id, counts in doc_terms:
        if not counts:
            out[doc_id] = ConceptVector()
            continue
        weights = {
            term: count * math.log(1.0 + n_docs / df[term])
            for term, count in counts.items()
        }
        peak = max(weights.values())
        out[doc_id] = ConceptVector({t: w / peak for t, w in weights.items()})
    return out
