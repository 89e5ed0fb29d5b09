"""Corpus statistics: entity spread, active-entity counts, rank correlation.

An entity is active at token t when t falls inside its spread, the closed
interval from its first mention's start to its last mention's end. The
peak number of simultaneously active entities bounds how many memory slots
an incremental clusterer needs for the document, which is why these
statistics sit next to the engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .types import Document, GoldCluster, MentionSpan


class EmptyClusterError(ValueError):
    """Spread is undefined for a cluster with no mentions."""


class LengthMismatchError(ValueError):
    """Paired sequences of different lengths."""


@dataclass(frozen=True)
class SpreadRecord:
    """Spread of one entity inside one document."""

    entity_id: int
    spread: MentionSpan
    mention_count: int
    spread_fraction: float  # spread length / document length, in (0, 1]


def entity_spread(cluster: GoldCluster) -> MentionSpan:
    """Smallest closed interval containing every mention of the cluster."""
    if not cluster.mentions:
        raise EmptyClusterError(f"cluster {cluster.entity_id} has no mentions")
    return MentionSpan(
        min(m.start for m in cluster.mentions),
        max(m.end for m in cluster.mentions),
    )


def _spreads(doc: Document, exclude_singletons: bool = False) -> list[MentionSpan]:
    return [
        entity_spread(c)
        for c in doc.gold_clusters
        if not (exclude_singletons and len(c.mentions) == 1)
    ]


def active_entity_count(doc: Document, t: int) -> int:
    """Number of entities whose spread covers token t."""
    if not 0 <= t < len(doc):
        raise IndexError(f"token index {t} outside document of length {len(doc)}")
    return sum(1 for s in _spreads(doc) if s.covers(t))


def max_active_entities(doc: Document, exclude_singletons: bool = False) -> int:
    """Peak active-entity count over all tokens, 0 for an entityless document.

    Runs as an endpoint sweep in O(M log M) for M entities; the document
    length never enters, so very long documents cost the same as short ones.
    """
    deltas: dict[int, int] = {}
    for s in _spreads(doc, exclude_singletons):
        deltas[s.start] = deltas.get(s.start, 0) + 1
        deltas[s.end + 1] = deltas.get(s.end + 1, 0) - 1
    best = 0
    active = 0
    # Net delta per position: an entity ending at t and another starting at
    # t+1 must never be counted as overlapping.
    for pos in sorted(deltas):
        active += deltas[pos]
        if active > best:
            best = active
    return best


def corpus_max_active(docs: Iterable[Document], exclude_singletons: bool = False) -> int:
    return max((max_active_entities(d, exclude_singletons) for d in docs), default=0)


def corpus_max_total(docs: Iterable[Document]) -> int:
    """Largest number of gold entities found in any single document."""
    return max((len(d.gold_clusters) for d in docs), default=0)


def spread_records(doc: Document) -> list[SpreadRecord]:
    out = []
    for c in doc.gold_clusters:
        s = entity_spread(c)
        out.append(
            SpreadRecord(
                entity_id=c.entity_id,
                spread=s,
                mention_count=len(c.mentions),
                spread_fraction=s.length / len(doc),
            )
        )
    return out


def spread_histogram(
    docs: Iterable[Document], buckets: int, exclude_singletons: bool = False
) -> list[int]:
    """Histogram of spread fractions over uniform buckets covering [0, 1].

    Bucket i covers [i/buckets, (i+1)/buckets); the last bucket also takes
    the value 1.0 exactly, so every entity lands somewhere.
    """
    if buckets < 1:
        raise ValueError("need at least one bucket")
    counts = [0] * buckets
    for doc in docs:
        for rec in spread_records(doc):
            if exclude_singletons and rec.mention_count == 1:
                continue
            idx = min(int(rec.spread_fraction * buckets), buckets - 1)
            counts[idx] += 1
    return counts


def histogram_rows(counts: Sequence[int], buckets: int) -> list[tuple[float, float, int]]:
    return [(i / buckets, (i + 1) / buckets, counts[i]) for i in range(buckets)]


def per_document_stats(docs: Iterable[Document]) -> list[tuple[str, int, int, int]]:
    """Rows of (doc_id, max active entities, total entities, doc length)."""
    return [
        (d.doc_id, max_active_entities(d), len(d.gold_clusters), len(d))
        for d in docs
    ]


def _average_ranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1  # ranks are 1-based
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Spearman rank correlation with average ranks for ties.

    Returns None when either input is constant: correlation is undefined
    there and a marker beats a misleading number. Raises
    LengthMismatchError when the inputs cannot be paired.
    """
    if len(xs) != len(ys):
        raise LengthMismatchError(f"paired lists of lengths {len(xs)} and {len(ys)}")
    if len(xs) < 2:
        raise LengthMismatchError("need at least two pairs")
    rx = _average_ranks(xs)
    ry = _average_ranks(ys)
    n = len(rx)
    mx = sum(rx) / n
    my = sum(ry) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    if vx == 0.0 or vy == 0.0:
        return None
    return cov / math.sqrt(vx * vy)
