"""Coreference evaluation: link-based, mention-based, and entity-based scores.

Every metric reduces to precision/recall numerators and denominators so
corpus-level figures can sum the counts across documents before dividing;
averaging per-document F1 values is a different (wrong) statistic. The
0/0 case is 0 by convention throughout.

Clusters are collections of hashable mention keys; the engine hands over
MentionSpan values, which qualify.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

Cluster = frozenset
Counts = tuple[float, float, float, float]  # p_num, p_den, r_num, r_den


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, counts: Counts) -> "PRF":
        p_num, p_den, r_num, r_den = counts
        p = p_num / p_den if p_den else 0.0
        r = r_num / r_den if r_den else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        return cls(p, r, f)


@dataclass(frozen=True)
class ScoreReport:
    muc: PRF
    b_cubed: PRF
    ceaf_phi4: PRF
    conll_f1: float


def _freeze(clusters: Iterable[Iterable[Hashable]]) -> list[frozenset]:
    return [frozenset(c) for c in clusters]


def filter_singletons(clusters: Iterable[Iterable[Hashable]]) -> list[frozenset]:
    """Drop size-one clusters; applied to both sides under drop mode."""
    return [c for c in _freeze(clusters) if len(c) > 1]


def _vilain_side(clusters: Sequence[frozenset], other: Sequence[frozenset]) -> tuple[float, float]:
    """Link counts for one direction of MUC.

    For each cluster: size minus the number of partitions the other side
    cuts it into, where every mention missing from the other side is its
    own partition. Denominator is size minus one.
    """
    cluster_of: dict[Hashable, int] = {}
    for idx, c in enumerate(other):
        for m in c:
            cluster_of[m] = idx
    num = 0.0
    den = 0.0
    for c in clusters:
        partitions = set()
        unaligned = 0
        for m in c:
            if m in cluster_of:
                partitions.add(cluster_of[m])
            else:
                unaligned += 1
        num += len(c) - unaligned - len(partitions)
        den += len(c) - 1
    return num, den


def muc_counts(gold: Iterable[Iterable[Hashable]], pred: Iterable[Iterable[Hashable]]) -> Counts:
    g = _freeze(gold)
    p = _freeze(pred)
    r_num, r_den = _vilain_side(g, p)
    p_num, p_den = _vilain_side(p, g)
    return (p_num, p_den, r_num, r_den)


def _b3_side(clusters: Sequence[frozenset], other: Sequence[frozenset]) -> tuple[float, float]:
    cluster_of: dict[Hashable, frozenset] = {}
    for c in other:
        for m in c:
            cluster_of[m] = c
    num = 0.0
    den = 0.0
    for c in clusters:
        for m in c:
            den += 1
            o = cluster_of.get(m)
            if o is not None:
                num += len(c & o) / len(c)
    return num, den


def b_cubed_counts(gold: Iterable[Iterable[Hashable]], pred: Iterable[Iterable[Hashable]]) -> Counts:
    g = _freeze(gold)
    p = _freeze(pred)
    r_num, r_den = _b3_side(g, p)
    p_num, p_den = _b3_side(p, g)
    return (p_num, p_den, r_num, r_den)


def phi4(a: frozenset, b: frozenset) -> float:
    return 2 * len(a & b) / (len(a) + len(b))


def ceaf_phi4_counts(gold: Iterable[Iterable[Hashable]], pred: Iterable[Iterable[Hashable]]) -> Counts:
    """Entity-based counts under the optimal one-to-one cluster alignment.

    The alignment is solved exactly (Hungarian assignment); a greedy match
    can score differently and is not acceptable here.
    """
    g = _freeze(gold)
    p = _freeze(pred)
    if not g or not p:
        return (0.0, float(len(p)), 0.0, float(len(g)))
    sim = np.array([[phi4(gc, pc) for pc in p] for gc in g])
    rows, cols = linear_sum_assignment(sim, maximize=True)
    total = float(sim[rows, cols].sum())
    return (total, float(len(p)), total, float(len(g)))


def muc(gold, pred) -> PRF:
    return PRF.from_counts(muc_counts(gold, pred))


def b_cubed(gold, pred) -> PRF:
    return PRF.from_counts(b_cubed_counts(gold, pred))


def ceaf_phi4(gold, pred) -> PRF:
    return PRF.from_counts(ceaf_phi4_counts(gold, pred))


def build_report(muc_prf: PRF, b3_prf: PRF, ceaf_prf: PRF) -> ScoreReport:
    return ScoreReport(
        muc=muc_prf,
        b_cubed=b3_prf,
        ceaf_phi4=ceaf_prf,
        conll_f1=(muc_prf.f1 + b3_prf.f1 + ceaf_prf.f1) / 3,
    )


def conll_f1(gold, pred) -> ScoreReport:
    """All three metrics plus their unweighted mean, for one cluster pair."""
    return build_report(muc(gold, pred), b_cubed(gold, pred), ceaf_phi4(gold, pred))


_METRICS = (muc_counts, b_cubed_counts, ceaf_phi4_counts)


class CountAccumulator:
    """Sums per-document counts; corpus scores divide at the end."""

    def __init__(self) -> None:
        self._sums = [np.zeros(4) for _ in _METRICS]

    def add(self, gold, pred, drop_singletons: bool = False) -> None:
        g = filter_singletons(gold) if drop_singletons else _freeze(gold)
        p = filter_singletons(pred) if drop_singletons else _freeze(pred)
        for sums, fn in zip(self._sums, _METRICS):
            sums += np.array(fn(g, p))

    def report(self) -> ScoreReport:
        prfs = [PRF.from_counts(tuple(sums)) for sums in self._sums]
        return build_report(*prfs)


def evaluate_documents(
    pairs: Iterable[tuple[Iterable[Iterable[Hashable]], Iterable[Iterable[Hashable]]]],
    drop_singletons: bool = False,
) -> ScoreReport:
    acc = CountAccumulator()
    for gold, pred in pairs:
        acc.add(gold, pred, drop_singletons)
    return acc.report()
