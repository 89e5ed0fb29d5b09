"""Incremental clustering engine: one pass over mentions, bounded memory.

Each mention is resolved in two steps. Step one looks for the best cell to
corefer with: the mention joins the cell with the highest coref score when
that score is strictly positive (ties go to the lowest slot). Step two,
reached only when no cell attracts the mention, depends on the policy:

* unbounded: new entity when the mention score is positive, otherwise the
  span is treated as invalid and ignored;
* unbounded-star: always a new entity;
* learned-bounded: while memory has room, behaves like unbounded. At
  capacity, the argmin over [f_r(cell 1..M), f_r(mention), s_m(mention)]
  picks what to forget: a cell (evict and replace), the mention itself
  (ignored for capacity), or the span as invalid. Ties go to the lowest
  index;
* rule-bounded: same comparison, but the only evictable cell is the least
  recently used one, so the vector is [f_r(LRU cell), f_r(mention),
  s_m(mention)].

A zero top coref score does not trigger coreference; the inequality is
strict. Cells keep their slot forever: evict-and-replace swaps the
occupant but not the position. A cell's "use" is creation, coreference,
or replacement; reading its scores does not refresh recency.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

from .scoring import EntityCell, ScoreProvider
from .types import Action, ActionKind, Document, MemoryPolicy, MentionSpan, PolicyConfig

REPR_DIM = 16


class DimensionMismatchError(ValueError):
    """Entity and mention representations of different widths."""


@lru_cache(maxsize=65536)
def _string_representation(text: str) -> tuple[float, ...]:
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    raw = [
        int.from_bytes(digest[2 * i : 2 * i + 2], "big") / 32767.5 - 1.0
        for i in range(REPR_DIM)
    ]
    norm = math.sqrt(sum(v * v for v in raw))
    if norm == 0.0:  # unreachable in practice, kept for determinism
        raw[0] = 1.0
        norm = 1.0
    return tuple(v / norm for v in raw)


def mention_representation(doc: Document, span: MentionSpan) -> tuple[float, ...]:
    """Deterministic unit vector derived from the span's token string.

    A stand-in for a learned encoder: it gives the update rule real
    arithmetic to chew on while keeping runs reproducible everywhere.
    """
    return _string_representation(doc.span_text(span))


def update_entity(cell: EntityCell, mention_repr: Sequence[float]) -> EntityCell:
    """Fold a mention into a cell: running mean over representations.

    With n mentions absorbed so far, the new representation is
    (n * e + x) / (n + 1) and the count becomes n + 1. Recency is the
    engine's business and is not touched here.
    """
    if len(mention_repr) != len(cell.representation):
        raise DimensionMismatchError(
            f"cell has dimension {len(cell.representation)}, mention {len(mention_repr)}"
        )
    n = cell.mention_count
    rep = tuple((n * e + x) / (n + 1) for e, x in zip(cell.representation, mention_repr))
    return replace(cell, representation=rep, mention_count=n + 1)


@dataclass(frozen=True)
class StepScores:
    """The full score tuple for one step, per-cell values in slot order."""

    s_m: float
    s_c: tuple[float, ...]
    f_r_cells: tuple[float, ...]
    f_r_mention: float


@dataclass(frozen=True)
class MemoryState:
    """Memory between steps: cells in creation order plus counters."""

    cells: tuple[EntityCell, ...] = ()
    capacity: int | None = None
    next_ordinal: int = 0
    next_cell_id: int = 0

    @property
    def full(self) -> bool:
        return self.capacity is not None and len(self.cells) >= self.capacity


def decide_unbounded(scores: StepScores, star: bool) -> Action:
    """Step-two rule with unlimited memory."""
    if star or scores.s_m > 0.0:
        return Action.new_entity()
    return Action.ignore_invalid()


def decide_lb(state: MemoryState, scores: StepScores) -> Action:
    """Step-two rule for learned-bounded memory.

    Below capacity this is the unbounded rule. At capacity, forget the
    candidate with the least remaining value: one of the cells, the
    mention (capacity ignore), or the span's validity (invalid ignore).
    """
    if not state.full:
        return decide_unbounded(scores, star=False)
    vector = list(scores.f_r_cells) + [scores.f_r_mention, scores.s_m]
    d = min(range(len(vector)), key=vector.__getitem__)
    m = len(state.cells)
    if d < m:
        return Action.evict(d)
    if d == m:
        return Action.ignore_capacity()
    return Action.ignore_invalid()


def lru_slot(state: MemoryState) -> int:
    """Slot of the least recently used cell (ordinals are all distinct)."""
    return min(range(len(state.cells)), key=lambda i: state.cells[i].last_use_ordinal)


def decide_rb(state: MemoryState, scores: StepScores) -> Action:
    """Step-two rule for rule-bounded memory: only the LRU cell is at stake."""
    if not state.full:
        return decide_unbounded(scores, star=False)
    lru = lru_slot(state)
    vector = (scores.f_r_cells[lru], scores.f_r_mention, scores.s_m)
    d = min(range(3), key=vector.__getitem__)
    if d == 0:
        return Action.evict(lru)
    if d == 1:
        return Action.ignore_capacity()
    return Action.ignore_invalid()


def _fresh_cell(
    state: MemoryState,
    slot: int,
    doc: Document,
    mention: MentionSpan,
    scores: ScoreProvider,
    ordinal: int,
) -> EntityCell:
    return EntityCell(
        cell_id=state.next_cell_id,
        slot=slot,
        representation=mention_representation(doc, mention),
        mention_count=1,
        last_use_ordinal=ordinal,
        gold_entity_id=scores.gold_entity_id(doc, mention),
    )


def step(
    doc: Document,
    state: MemoryState,
    mention: MentionSpan,
    scores: ScoreProvider,
    policy: PolicyConfig,
) -> tuple[MemoryState, Action]:
    """Process one mention; total over every (state, mention) pair.

    Queries the provider for the complete score tuple every step, whatever
    the policy ends up needing: providers are pure, the cost stays
    O(cells), and recorded runs always have the full replay row shape.
    """
    cells = state.cells
    prefetched = StepScores(
        s_m=float(scores.mention_score(doc, mention)),
        s_c=tuple(float(scores.coref_score(doc, mention, c)) for c in cells),
        f_r_cells=tuple(float(scores.remaining_score(doc, c)) for c in cells),
        f_r_mention=float(scores.remaining_score(doc, mention)),
    )
    ordinal = state.next_ordinal

    if cells:
        top = max(range(len(cells)), key=lambda i: prefetched.s_c[i])
        if prefetched.s_c[top] > 0.0:
            updated = update_entity(cells[top], mention_representation(doc, mention))
            updated = replace(updated, last_use_ordinal=ordinal)
            new_cells = cells[:top] + (updated,) + cells[top + 1 :]
            return (
                replace(state, cells=new_cells, next_ordinal=ordinal + 1),
                Action.coref(top),
            )

    if policy.policy is MemoryPolicy.UNBOUNDED:
        action = decide_unbounded(prefetched, star=False)
    elif policy.policy is MemoryPolicy.UNBOUNDED_STAR:
        action = decide_unbounded(prefetched, star=True)
    elif policy.policy is MemoryPolicy.LEARNED_BOUNDED:
        action = decide_lb(state, prefetched)
    else:
        action = decide_rb(state, prefetched)

    if action.kind is ActionKind.NEW_ENTITY:
        cell = _fresh_cell(state, len(cells), doc, mention, scores, ordinal)
        return (
            replace(
                state,
                cells=cells + (cell,),
                next_ordinal=ordinal + 1,
                next_cell_id=state.next_cell_id + 1,
            ),
            action,
        )
    if action.kind is ActionKind.EVICT:
        slot = action.cell
        cell = _fresh_cell(state, slot, doc, mention, scores, ordinal)
        new_cells = cells[:slot] + (cell,) + cells[slot + 1 :]
        return (
            replace(
                state,
                cells=new_cells,
                next_ordinal=ordinal + 1,
                next_cell_id=state.next_cell_id + 1,
            ),
            action,
        )
    # Ignores advance the step ordinal and leave memory untouched.
    return replace(state, next_ordinal=ordinal + 1), action


@dataclass(frozen=True)
class RunStats:
    """Bookkeeping for one document run."""

    avg_entities_in_memory: float
    max_entities_in_memory: int
    ignored_capacity_count: int
    ignored_invalid_count: int
    eviction_count: int
    actions: tuple[Action, ...]


@dataclass(frozen=True)
class ClusteringResult:
    predicted_clusters: tuple[tuple[MentionSpan, ...], ...]
    stats: RunStats


def clusters_from_actions(
    mentions: Sequence[MentionSpan], actions: Sequence[Action]
) -> list[list[MentionSpan]]:
    """Assemble clusters from an action trace.

    A cell's cluster is every mention assigned to it since its last
    (re)initialization; an evicted lineage still comes out as a completed
    cluster. Ignored mentions belong to no cluster.
    """
    lineages: list[list[MentionSpan]] = []
    open_by_slot: dict[int, int] = {}
    n_slots = 0
    for mention, action in zip(mentions, actions):
        if action.kind is ActionKind.COREF:
            lineages[open_by_slot[action.cell]].append(mention)
        elif action.kind is ActionKind.NEW_ENTITY:
            open_by_slot[n_slots] = len(lineages)
            lineages.append([mention])
            n_slots += 1
        elif action.kind is ActionKind.EVICT:
            open_by_slot[action.cell] = len(lineages)
            lineages.append([mention])
    return lineages


def run_document(
    doc: Document,
    mentions: Sequence[MentionSpan],
    scores: ScoreProvider,
    policy: PolicyConfig,
) -> ClusteringResult:
    """Fold step over the mentions of one document, from empty memory.

    Mentions must already be in processing order. Per-mention work is
    O(capacity) for the bounded policies.
    """
    state = MemoryState(capacity=policy.capacity)
    actions: list[Action] = []
    samples: list[int] = []
    evictions = ignored_cap = ignored_inv = 0

    scores.start_document(doc, mentions)
    for i, mention in enumerate(mentions):
        scores.mention_begin(i, mention)
        state, action = step(doc, state, mention, scores, policy)
        actions.append(action)
        samples.append(len(state.cells))
        if action.kind is ActionKind.EVICT:
            evictions += 1
        elif action.kind is ActionKind.IGNORE_CAPACITY:
            ignored_cap += 1
        elif action.kind is ActionKind.IGNORE_INVALID:
            ignored_inv += 1
        if action.cell is not None:
            touched: EntityCell | None = state.cells[action.cell]
        elif action.kind is ActionKind.NEW_ENTITY:
            touched = state.cells[-1]
        else:
            touched = None
        scores.observe_action(i, mention, action, touched)
    scores.end_document()

    clusters = tuple(
        tuple(lineage) for lineage in clusters_from_actions(mentions, actions)
    )
    stats = RunStats(
        avg_entities_in_memory=sum(samples) / len(samples) if samples else 0.0,
        max_entities_in_memory=max(samples, default=0),
        ignored_capacity_count=ignored_cap,
        ignored_invalid_count=ignored_inv,
        eviction_count=evictions,
        actions=tuple(actions),
    )
    return ClusteringResult(predicted_clusters=clusters, stats=stats)


def trace_objs(
    mentions: Sequence[MentionSpan], actions: Sequence[Action]
) -> list[dict]:
    """Action trace in its serialized form, one object per mention."""
    out = []
    for mention, action in zip(mentions, actions):
        obj = {"mention": mention.as_pair()}
        obj.update(action.to_obj())
        out.append(obj)
    return out
