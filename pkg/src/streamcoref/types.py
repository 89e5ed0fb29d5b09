"""Shared domain types: spans, documents, gold clusters, actions, policies.

Token indices are document-global and 0-based. Spans are closed intervals:
a span covers tokens start..end inclusive. All values here are immutable
after construction; invariant checking lives in validate_document, which
reports violations instead of raising so that callers can decide what is
fatal.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property


class ConfigError(ValueError):
    """Contradictory or incomplete policy configuration."""


class MemoryPolicy(enum.Enum):
    UNBOUNDED = "unbounded"
    UNBOUNDED_STAR = "ustar"
    LEARNED_BOUNDED = "lb"
    RULE_BOUNDED = "rb"

    @property
    def bounded(self) -> bool:
        return self in (MemoryPolicy.LEARNED_BOUNDED, MemoryPolicy.RULE_BOUNDED)


class SingletonMode(enum.Enum):
    KEEP = "keep"
    DROP = "drop"


@dataclass(frozen=True, order=True)
class MentionSpan:
    """Closed token interval [start, end]."""

    start: int
    end: int

    @property
    def length(self) -> int:
        return self.end - self.start + 1

    def covers(self, t: int) -> bool:
        return self.start <= t <= self.end

    def as_pair(self) -> list[int]:
        return [self.start, self.end]


@dataclass(frozen=True)
class GoldCluster:
    """All mentions of one gold entity."""

    entity_id: int
    mentions: tuple[MentionSpan, ...]


@dataclass(frozen=True)
class Document:
    doc_id: str
    tokens: tuple[str, ...]
    # Cumulative sentence ends: boundary b means a sentence ends right
    # before token b. Strictly increasing, each in 1..len(tokens).
    sentence_boundaries: tuple[int, ...] = ()
    genre: str | None = None
    candidate_mentions: tuple[tuple[MentionSpan, float], ...] = ()
    gold_clusters: tuple[GoldCluster, ...] = ()

    def __len__(self) -> int:
        return len(self.tokens)

    def span_text(self, span: MentionSpan) -> str:
        return " ".join(self.tokens[span.start : span.end + 1])

    def gold_mentions(self) -> list[MentionSpan]:
        return [m for c in self.gold_clusters for m in c.mentions]

    @cached_property
    def entity_by_span(self) -> dict[MentionSpan, int]:
        out: dict[MentionSpan, int] = {}
        for cluster in self.gold_clusters:
            for span in cluster.mentions:
                out[span] = cluster.entity_id
        return out


class ActionKind(enum.Enum):
    COREF = "coref"
    NEW_ENTITY = "new"
    EVICT = "evict"
    IGNORE_CAPACITY = "ignore_cap"
    IGNORE_INVALID = "ignore_inv"


_CELL_KINDS = frozenset({ActionKind.COREF, ActionKind.EVICT})


@dataclass(frozen=True)
class Action:
    """One per-mention decision; cell is the target slot for coref/evict."""

    kind: ActionKind
    cell: int | None = None

    def __post_init__(self) -> None:
        if self.kind in _CELL_KINDS:
            if self.cell is None or self.cell < 0:
                raise ValueError(f"{self.kind.value} requires a cell index")
        elif self.cell is not None:
            raise ValueError(f"{self.kind.value} carries no cell index")

    @classmethod
    def coref(cls, cell: int) -> "Action":
        return cls(ActionKind.COREF, cell)

    @classmethod
    def new_entity(cls) -> "Action":
        return cls(ActionKind.NEW_ENTITY)

    @classmethod
    def evict(cls, cell: int) -> "Action":
        return cls(ActionKind.EVICT, cell)

    @classmethod
    def ignore_capacity(cls) -> "Action":
        return cls(ActionKind.IGNORE_CAPACITY)

    @classmethod
    def ignore_invalid(cls) -> "Action":
        return cls(ActionKind.IGNORE_INVALID)

    def to_obj(self) -> dict:
        obj: dict = {"action": self.kind.value}
        if self.cell is not None:
            obj["cell"] = self.cell
        return obj

    @classmethod
    def from_obj(cls, obj: dict) -> "Action":
        return cls(ActionKind(obj["action"]), obj.get("cell"))


@dataclass(frozen=True)
class PolicyConfig:
    """Which memory policy to run, its capacity, and singleton handling.

    capacity is None for the unbounded policies and a positive integer for
    the bounded ones. Unbounded-star appends every non-coreferent mention
    as a new entity, so it cannot be evaluated with singletons kept: the
    config is rejected here rather than by a surprise downstream.
    """

    policy: MemoryPolicy
    capacity: int | None = None
    singleton_mode: SingletonMode = SingletonMode.KEEP

    def __post_init__(self) -> None:
        if self.policy.bounded:
            if self.capacity is None:
                raise ConfigError(f"policy {self.policy.value} requires a finite capacity")
            if self.capacity < 1:
                raise ConfigError(f"capacity must be >= 1, got {self.capacity}")
        elif self.capacity is not None:
            raise ConfigError(
                f"policy {self.policy.value} is unbounded; capacity must be omitted"
            )
        if (
            self.policy is MemoryPolicy.UNBOUNDED_STAR
            and self.singleton_mode is SingletonMode.KEEP
        ):
            raise ConfigError(
                "unbounded-star turns every non-coreferent mention into an entity "
                "and only makes sense when singletons are dropped in evaluation"
            )

    @property
    def bounded(self) -> bool:
        return self.policy.bounded


def _span_issues(label: str, span: MentionSpan, n_tokens: int) -> list[str]:
    out = []
    if span.start > span.end:
        out.append(f"{label}: start > end")
    if span.start < 0:
        out.append(f"{label}: start < 0")
    elif span.start <= span.end and span.end >= n_tokens:
        out.append(f"{label}: end beyond document")
    return out


def validate_document(doc: Document) -> list[str]:
    """Check every Document invariant and return one message per violation.

    Pure, never raises, and safe to call repeatedly: the document is not
    modified and the same input yields the same list.
    """
    issues: list[str] = []
    n = len(doc.tokens)

    prev = 0
    for i, b in enumerate(doc.sentence_boundaries):
        if b <= prev:
            issues.append(f"sentence_boundaries[{i}]: not strictly increasing")
        if b < 1 or b > n:
            issues.append(f"sentence_boundaries[{i}]: out of range")
        prev = b

    seen_candidates: set[MentionSpan] = set()
    for i, (span, _score) in enumerate(doc.candidate_mentions):
        issues.extend(_span_issues(f"mention {i}", span, n))
        if span in seen_candidates:
            issues.append(f"duplicate candidate mention ({span.start},{span.end})")
        seen_candidates.add(span)

    seen_gold: set[MentionSpan] = set()
    for k, cluster in enumerate(doc.gold_clusters):
        if not cluster.mentions:
            issues.append(f"cluster {k}: empty")
        for j, span in enumerate(cluster.mentions):
            issues.extend(_span_issues(f"cluster {k} mention {j}", span, n))
            if span in seen_gold:
                issues.append(f"duplicate gold mention ({span.start},{span.end})")
            seen_gold.add(span)

    return issues
