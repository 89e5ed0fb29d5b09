"""Score providers: deterministic sources of the three scores the engine needs.

A ScoreProvider answers, for the mention currently being processed:

* mention_score(doc, span): is this span a real mention at all,
* coref_score(doc, span, cell): does it belong to the entity in that cell
  (this value already folds in the mention score term, so the engine
  compares it against zero directly),
* remaining_score(doc, span_or_cell): how much future material the span's
  entity, or the cell's entity, still has in the document.

Providers are pure within a run: the same query during the same step gives
the same value. They may keep per-run state (cursors, per-cell caches) fed
by the lifecycle hooks that the engine calls: start_document once,
mention_begin before each step, observe_action after each step,
end_document once. One provider serves one engine run at a time.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Iterable, Sequence

from .types import Action, ActionKind, Document, MentionSpan


@dataclass(frozen=True)
class EntityCell:
    """One memory slot tracking a single entity.

    slot is the cell's fixed position in memory: positions are assigned at
    creation and survive evict-and-replace, which only swaps the occupant.
    gold_entity_id is populated only when the provider knows gold identities.
    """

    cell_id: int
    slot: int
    representation: tuple[float, ...]
    mention_count: int
    last_use_ordinal: int
    gold_entity_id: int | None = None


class ScoreShapeMismatch(RuntimeError):
    """The engine asked for a score the replay file does not hold."""

    def __init__(self, mention_index: int, message: str):
        self.mention_index = mention_index
        super().__init__(f"mention {mention_index}: {message}")


class ScoreProvider:
    """Interface plus no-op lifecycle hooks; subclasses fill in the scores."""

    def start_document(self, doc: Document, mentions: Sequence[MentionSpan]) -> None:
        pass

    def mention_begin(self, index: int, mention: MentionSpan) -> None:
        pass

    def mention_score(self, doc: Document, mention: MentionSpan) -> float:
        raise NotImplementedError

    def coref_score(self, doc: Document, mention: MentionSpan, cell: EntityCell) -> float:
        raise NotImplementedError

    def remaining_score(self, doc: Document, item: MentionSpan | EntityCell) -> float:
        raise NotImplementedError

    def gold_entity_id(self, doc: Document, mention: MentionSpan) -> int | None:
        """Gold identity for seeding a cell, None when unknown."""
        return None

    def observe_action(
        self, index: int, mention: MentionSpan, action: Action, cell: EntityCell | None
    ) -> None:
        pass

    def end_document(self) -> None:
        pass


class GoldScoreProvider(ScoreProvider):
    """Scores read off the gold clustering: +1 / -1 by gold membership.

    remaining_score counts gold mentions of an entity not yet processed;
    the mention currently being processed still counts for its own entity,
    while a tracked cell's count covers strictly future material. An
    invalid span has no entity and gets remaining 0.
    """

    def __init__(self, doc: Document | None = None):
        self._ent_of: dict[MentionSpan, int] = {}
        self._remaining: dict[int, int] = {}
        self._prev_entity: int | None = None
        if doc is not None:
            self.start_document(doc, [])

    def start_document(self, doc: Document, mentions: Sequence[MentionSpan]) -> None:
        self._ent_of = dict(doc.entity_by_span)
        self._remaining = {c.entity_id: len(c.mentions) for c in doc.gold_clusters}
        self._prev_entity = None

    def mention_begin(self, index: int, mention: MentionSpan) -> None:
        # The previous mention is now fully in the past; its entity's
        # remaining count drops. The current mention still counts.
        if self._prev_entity is not None:
            self._remaining[self._prev_entity] -= 1
        self._prev_entity = self._ent_of.get(mention)

    def mention_score(self, doc: Document, mention: MentionSpan) -> float:
        return 1.0 if mention in self._ent_of else -1.0

    def coref_score(self, doc: Document, mention: MentionSpan, cell: EntityCell) -> float:
        ent = self._ent_of.get(mention)
        if ent is not None and cell.gold_entity_id is not None and ent == cell.gold_entity_id:
            return 1.0
        return -1.0

    def remaining_score(self, doc: Document, item: MentionSpan | EntityCell) -> float:
        if isinstance(item, EntityCell):
            ent = item.gold_entity_id
        else:
            ent = self._ent_of.get(item)
        if ent is None:
            return 0.0
        return float(self._remaining[ent])

    def gold_entity_id(self, doc: Document, mention: MentionSpan) -> int | None:
        return self._ent_of.get(mention)


def gold_scorer(doc: Document) -> GoldScoreProvider:
    """Provider that reproduces the gold clustering of the given document."""
    return GoldScoreProvider(doc)


_DETERMINERS = frozenset({"the", "a", "an"})


@dataclass(frozen=True)
class StringMatchConfig:
    lowercase: bool = True
    strip_determiners: bool = False


class StringMatchScoreProvider(ScoreProvider):
    """Coreference by exact match of normalized mention strings.

    A mention corefers with a cell when its normalized token string equals
    the string of any mention previously assigned to that cell. Every
    candidate span counts as a mention (mention_score +1); remaining_score
    counts identical normalized strings later in the candidate list.
    """

    def __init__(self, config: StringMatchConfig | None = None):
        self.config = config or StringMatchConfig()
        self._norm: dict[MentionSpan, str] = {}
        self._future: Counter[str] = Counter()
        self._cell_strings: dict[int, set[str]] = {}
        self._doc: Document | None = None

    def _normalize(self, doc: Document, span: MentionSpan) -> str:
        cached = self._norm.get(span)
        if cached is not None and doc is self._doc:
            return cached
        words = list(doc.tokens[span.start : span.end + 1])
        if self.config.strip_determiners:
            while len(words) > 1 and words[0].lower() in _DETERMINERS:
                words.pop(0)
        text = " ".join(words)
        if self.config.lowercase:
            text = text.lower()
        return text

    def start_document(self, doc: Document, mentions: Sequence[MentionSpan]) -> None:
        self._doc = doc
        self._norm = {}
        for span in mentions:
            self._norm[span] = self._normalize(doc, span)
        self._future = Counter(self._norm[m] for m in mentions)
        self._cell_strings = {}

    def mention_begin(self, index: int, mention: MentionSpan) -> None:
        self._future[self._norm[mention]] -= 1

    def mention_score(self, doc: Document, mention: MentionSpan) -> float:
        return 1.0

    def coref_score(self, doc: Document, mention: MentionSpan, cell: EntityCell) -> float:
        text = self._normalize(doc, mention)
        if text in self._cell_strings.get(cell.cell_id, ()):
            return 1.0
        return -1.0

    def remaining_score(self, doc: Document, item: MentionSpan | EntityCell) -> float:
        if isinstance(item, EntityCell):
            strings = self._cell_strings.get(item.cell_id, ())
            return float(sum(self._future[s] for s in strings))
        return float(self._future[self._normalize(doc, item)])

    def observe_action(
        self, index: int, mention: MentionSpan, action: Action, cell: EntityCell | None
    ) -> None:
        if cell is None:
            return
        text = self._normalize(self._doc, mention)
        if action.kind is ActionKind.COREF:
            self._cell_strings[cell.cell_id].add(text)
        elif action.kind in (ActionKind.NEW_ENTITY, ActionKind.EVICT):
            self._cell_strings[cell.cell_id] = {text}


def string_match_scorer(config: StringMatchConfig | None = None) -> StringMatchScoreProvider:
    return StringMatchScoreProvider(config)


@dataclass(frozen=True)
class ScoreRow:
    """All scores for one mention step, with per-cell values in slot order."""

    s_m: float
    s_c: tuple[float, ...]
    f_r_cells: tuple[float, ...]
    f_r_mention: float

    def to_obj(self) -> dict:
        return {
            "s_m": self.s_m,
            "s_c": list(self.s_c),
            "f_r_cells": list(self.f_r_cells),
            "f_r_mention": self.f_r_mention,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "ScoreRow":
        try:
            return cls(
                s_m=float(obj["s_m"]),
                s_c=tuple(float(v) for v in obj["s_c"]),
                f_r_cells=tuple(float(v) for v in obj["f_r_cells"]),
                f_r_mention=float(obj["f_r_mention"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ValueError(f"malformed score row: {e}") from e


def load_score_rows(path: str | Path) -> list[ScoreRow]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(ScoreRow.from_obj(json.loads(line)))
    return rows


def dump_score_rows(rows: Iterable[ScoreRow], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row.to_obj()) + "\n")


class ReplayScoreProvider(ScoreProvider):
    """Serves scores verbatim from pre-recorded rows, one row per mention.

    Rows run in processing order and continue across documents, so one
    provider replays a whole corpus run. Any query outside the recorded
    shape raises ScoreShapeMismatch with the offending mention's index.
    """

    def __init__(self, rows: Sequence[ScoreRow]):
        self._rows = list(rows)
        self._cursor = -1  # global mention counter, -1 before the first step

    @classmethod
    def from_file(cls, path: str | Path) -> "ReplayScoreProvider":
        return cls(load_score_rows(path))

    def rewind(self) -> None:
        self._cursor = -1

    def _row(self) -> ScoreRow:
        if self._cursor < 0:
            raise ScoreShapeMismatch(0, "score queried before any mention began")
        if self._cursor >= len(self._rows):
            raise ScoreShapeMismatch(
                self._cursor, f"file holds only {len(self._rows)} rows"
            )
        return self._rows[self._cursor]

    def mention_begin(self, index: int, mention: MentionSpan) -> None:
        self._cursor += 1
        if self._cursor >= len(self._rows):
            raise ScoreShapeMismatch(
                self._cursor, f"file holds only {len(self._rows)} rows"
            )

    def mention_score(self, doc: Document, mention: MentionSpan) -> float:
        return self._row().s_m

    def coref_score(self, doc: Document, mention: MentionSpan, cell: EntityCell) -> float:
        row = self._row()
        if cell.slot >= len(row.s_c):
            raise ScoreShapeMismatch(
                self._cursor,
                f"coref score for cell {cell.slot} but row has {len(row.s_c)}",
            )
        return row.s_c[cell.slot]

    def remaining_score(self, doc: Document, item: MentionSpan | EntityCell) -> float:
        row = self._row()
        if isinstance(item, EntityCell):
            if item.slot >= len(row.f_r_cells):
                raise ScoreShapeMismatch(
                    self._cursor,
                    f"remaining score for cell {item.slot} but row has {len(row.f_r_cells)}",
                )
            return row.f_r_cells[item.slot]
        return row.f_r_mention


def replay_scorer(path: str | Path) -> ReplayScoreProvider:
    return ReplayScoreProvider.from_file(path)


class RecordingScoreProvider(ScoreProvider):
    """Wraps a provider and captures every step's scores as replay rows.

    Relies on the engine querying the full score tuple each step (it does);
    captured values are keyed by cell slot, so query order does not matter.
    """

    def __init__(self, inner: ScoreProvider):
        self.inner = inner
        self.rows: list[ScoreRow] = []
        self._s_m: float | None = None
        self._s_c: dict[int, float] = {}
        self._f_r: dict[int, float] = {}
        self._f_r_mention: float | None = None
        self._open = False

    def _flush(self) -> None:
        if not self._open:
            return
        s_c = tuple(self._s_c[i] for i in range(len(self._s_c)))
        f_r = tuple(self._f_r[i] for i in range(len(self._f_r)))
        self.rows.append(
            ScoreRow(
                s_m=self._s_m if self._s_m is not None else 0.0,
                s_c=s_c,
                f_r_cells=f_r,
                f_r_mention=self._f_r_mention if self._f_r_mention is not None else 0.0,
            )
        )
        self._open = False

    def start_document(self, doc: Document, mentions: Sequence[MentionSpan]) -> None:
        self.inner.start_document(doc, mentions)

    def mention_begin(self, index: int, mention: MentionSpan) -> None:
        self._flush()
        self._s_m = None
        self._s_c = {}
        self._f_r = {}
        self._f_r_mention = None
        self._open = True
        self.inner.mention_begin(index, mention)

    def mention_score(self, doc: Document, mention: MentionSpan) -> float:
        value = self.inner.mention_score(doc, mention)
        self._s_m = value
        return value

    def coref_score(self, doc: Document, mention: MentionSpan, cell: EntityCell) -> float:
        value = self.inner.coref_score(doc, mention, cell)
        self._s_c[cell.slot] = value
        return value

    def remaining_score(self, doc: Document, item: MentionSpan | EntityCell) -> float:
        value = self.inner.remaining_score(doc, item)
        if isinstance(item, EntityCell):
            self._f_r[item.slot] = value
        else:
            self._f_r_mention = value
        return value

    def gold_entity_id(self, doc: Document, mention: MentionSpan) -> int | None:
        return self.inner.gold_entity_id(doc, mention)

    def observe_action(
        self, index: int, mention: MentionSpan, action: Action, cell: EntityCell | None
    ) -> None:
        self.inner.observe_action(index, mention, action, cell)

    def end_document(self) -> None:
        self._flush()
        self.inner.end_document()

    def save(self, path: str | Path) -> None:
        dump_score_rows(self.rows, path)


def propose_top_spans(
    candidates: Sequence[tuple[MentionSpan, float]], ratio: float, doc_len: int
) -> list[MentionSpan]:
    """Keep the floor(ratio * doc_len) highest-scoring candidate spans.

    Score ties at the cutoff keep the earlier span in mention order. The
    selection is returned re-sorted into processing order. The count is
    computed on the decimal value of the ratio, so 0.3 of a 10-token
    document is exactly 3 despite binary floating point.
    """
    if ratio <= 0:
        raise ValueError("ratio must be positive")
    if doc_len < 1:
        raise ValueError("doc_len must be at least 1")
    k = int(Decimal(str(ratio)) * doc_len)
    order = sorted(range(len(candidates)), key=lambda i: candidates[i][0])
    rank = {i: r for r, i in enumerate(order)}
    by_score = sorted(range(len(candidates)), key=lambda i: (-candidates[i][1], rank[i]))
    chosen = by_score[: max(k, 0)]
    chosen.sort(key=lambda i: candidates[i][0])
    return [candidates[i][0] for i in chosen]
