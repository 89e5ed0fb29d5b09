"""Corpus ingestion: column-formatted coreference files and JSON-lines documents.

The column format follows the CoNLL-2012 conventions: documents are wrapped
in ``#begin document (name); part NNN`` / ``#end document`` sentinels, blank
lines separate sentences, the surface token sits in column 3 and the
coreference annotation in the last column. Coreference fields combine
``(id`` (mention opens here), ``id)`` (mention closes here) and ``(id)``
(single-token mention), with ``-`` meaning no annotation. A close binds to
the most recent unclosed open with the same id.

The JSON-lines format carries one document per line; see parse_jsonl for
the schema. parse -> serialize -> parse is the identity on documents that
came from JSON lines (gold entity ids are positional there).
"""

from __future__ import annotations

import json
import re
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .types import Document, GoldCluster, MentionSpan, validate_document


class ParseError(ValueError):
    """Input could not be interpreted; carries file path and line number."""

    def __init__(self, message: str, *, path: str = "<input>", line: int | None = None):
        self.path = path
        self.line = line
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {message}")


class UnbalancedBracketError(ParseError):
    """A mention close without an open, or an open left dangling."""


class MalformedColumnError(ParseError):
    """A line or coreference field that does not follow the column grammar."""


class SchemaError(ParseError):
    """A JSON document line with a missing or ill-typed key."""

    def __init__(self, key: str, *, path: str = "<input>", line: int | None = None,
                 detail: str = "missing or ill-typed"):
        self.key = key
        super().__init__(f"{detail} key {key!r}", path=path, line=line)


_BEGIN = re.compile(r"#begin document \((?P<name>[^)]*)\)(?:; part (?P<part>\d+))?\s*$")
_COREF_PIECE = re.compile(r"\((\d+)\)|\((\d+)|(\d+)\)")


def _coref_events(field: str, path: str, line_no: int) -> list[tuple[str, int]]:
    """Tokenize one coreference column into (kind, id) events, left to right."""
    if field == "-":
        return []
    events: list[tuple[str, int]] = []
    pos = 0
    while pos < len(field):
        if field[pos] == "|":
            pos += 1
            continue
        m = _COREF_PIECE.match(field, pos)
        if m is None:
            raise MalformedColumnError(
                f"unrecognized coreference annotation {field!r}", path=path, line=line_no
            )
        if m.group(1) is not None:
            events.append(("both", int(m.group(1))))
        elif m.group(2) is not None:
            events.append(("open", int(m.group(2))))
        else:
            events.append(("close", int(m.group(3))))
        pos = m.end()
    return events


class _DocAccumulator:
    def __init__(self, name: str, part: str | None, begin_line: int):
        self.name = name
        self.part = part
        self.begin_line = begin_line
        self.tokens: list[str] = []
        self.boundaries: list[int] = []
        self.open_stacks: dict[int, list[tuple[int, int]]] = defaultdict(list)
        self.clusters: dict[int, list[MentionSpan]] = defaultdict(list)

    def add_token(self, cols: Sequence[str], path: str, line_no: int) -> None:
        if len(cols) < 2:
            raise MalformedColumnError("too few columns", path=path, line=line_no)
        # Canonical layout puts the token in column 3; minimal two-column
        # files put it first.
        token = cols[3] if len(cols) >= 5 else cols[0]
        t = len(self.tokens)
        self.tokens.append(token)
        for kind, cid in _coref_events(cols[-1], path, line_no):
            if kind == "open":
                self.open_stacks[cid].append((t, line_no))
            elif kind == "close":
                if not self.open_stacks[cid]:
                    raise UnbalancedBracketError(
                        f"close for id {cid} without a matching open", path=path, line=line_no
                    )
                start, _ = self.open_stacks[cid].pop()
                self.clusters[cid].append(MentionSpan(start, t))
            else:
                self.clusters[cid].append(MentionSpan(t, t))

    def end_sentence(self) -> None:
        n = len(self.tokens)
        if n and (not self.boundaries or self.boundaries[-1] != n):
            self.boundaries.append(n)

    def finish(self, path: str) -> Document:
        self.end_sentence()
        for cid, stack in self.open_stacks.items():
            if stack:
                _, line_no = stack[-1]
                raise UnbalancedBracketError(
                    f"open for id {cid} never closed", path=path, line=line_no
                )
        doc_id = self.name if self.part is None else f"{self.name}; part {self.part}"
        gold = tuple(
            GoldCluster(cid, tuple(sorted(spans)))
            for cid, spans in sorted(self.clusters.items())
        )
        seen: set[MentionSpan] = set()
        candidates = []
        for cluster in gold:
            for span in cluster.mentions:
                if span not in seen:
                    seen.add(span)
                    candidates.append(span)
        return Document(
            doc_id=doc_id,
            tokens=tuple(self.tokens),
            sentence_boundaries=tuple(self.boundaries),
            candidate_mentions=tuple((s, 0.0) for s in sorted(candidates)),
            gold_clusters=gold,
        )


def parse_conll(text: str, path: str = "<string>") -> list[Document]:
    """Parse a column-formatted file into documents.

    Each part of a multi-part source becomes its own Document; documents
    with no gold mentions are kept. Candidate mentions default to the set
    of gold mentions with score 0.
    """
    docs: list[Document] = []
    acc: _DocAccumulator | None = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        if line.startswith("#begin document"):
            if acc is not None:
                raise ParseError("nested #begin document", path=path, line=line_no)
            m = _BEGIN.match(line)
            if m is None:
                raise MalformedColumnError("malformed #begin document line", path=path, line=line_no)
            acc = _DocAccumulator(m.group("name"), m.group("part"), line_no)
        elif line.startswith("#end document"):
            if acc is None:
                raise ParseError("#end document without #begin", path=path, line=line_no)
            docs.append(acc.finish(path))
            acc = None
        elif acc is None:
            if not line.strip() or line.startswith("#"):
                continue
            raise ParseError("content outside a document block", path=path, line=line_no)
        elif not line.strip():
            acc.end_sentence()
        elif line.startswith("#"):
            continue
        else:
            acc.add_token(line.split(), path, line_no)
    if acc is not None:
        raise UnbalancedBracketError(
            "missing #end document", path=path, line=acc.begin_line
        )
    return docs


def _require(obj: dict, key: str, path: str, line_no: int | None):
    if key not in obj:
        raise SchemaError(key, path=path, line=line_no, detail="missing")
    return obj[key]


def _span_from_pair(pair, key: str, path: str, line_no: int | None) -> MentionSpan:
    if (
        not isinstance(pair, (list, tuple))
        or len(pair) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in pair)
    ):
        raise SchemaError(key, path=path, line=line_no, detail="ill-typed")
    return MentionSpan(pair[0], pair[1])


def parse_jsonl(line: str, *, path: str = "<string>", line_no: int | None = None) -> Document:
    """Parse one JSON document line.

    Schema: {"doc_id": str, "tokens": [str], "gold_clusters": [[[s, e], ...]],
    optional "candidate_mentions": [[s, e, score]], optional
    "sentence_boundaries": [int], optional "genre": str}. Gold entity ids
    are the positions in the gold_clusters list. The parsed document must
    satisfy every type invariant.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", path=path, line=line_no)
    if not isinstance(obj, dict):
        raise ParseError("document line must be a JSON object", path=path, line=line_no)

    doc_id = _require(obj, "doc_id", path, line_no)
    if not isinstance(doc_id, str):
        raise SchemaError("doc_id", path=path, line=line_no, detail="ill-typed")

    tokens = _require(obj, "tokens", path, line_no)
    if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
        raise SchemaError("tokens", path=path, line=line_no, detail="ill-typed")

    raw_clusters = _require(obj, "gold_clusters", path, line_no)
    if not isinstance(raw_clusters, list):
        raise SchemaError("gold_clusters", path=path, line=line_no, detail="ill-typed")
    gold = []
    for idx, raw in enumerate(raw_clusters):
        if not isinstance(raw, list):
            raise SchemaError("gold_clusters", path=path, line=line_no, detail="ill-typed")
        mentions = tuple(
            sorted(_span_from_pair(p, "gold_clusters", path, line_no) for p in raw)
        )
        gold.append(GoldCluster(idx, mentions))

    candidates = []
    if "candidate_mentions" in obj:
        raw_cands = obj["candidate_mentions"]
        if not isinstance(raw_cands, list):
            raise SchemaError("candidate_mentions", path=path, line=line_no, detail="ill-typed")
        for triple in raw_cands:
            if (
                not isinstance(triple, (list, tuple))
                or len(triple) != 3
                or not all(isinstance(v, int) and not isinstance(v, bool) for v in triple[:2])
                or not isinstance(triple[2], (int, float))
                or isinstance(triple[2], bool)
            ):
                raise SchemaError("candidate_mentions", path=path, line=line_no, detail="ill-typed")
            candidates.append((MentionSpan(triple[0], triple[1]), float(triple[2])))

    boundaries: tuple[int, ...] = ()
    if "sentence_boundaries" in obj:
        raw_b = obj["sentence_boundaries"]
        if not isinstance(raw_b, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in raw_b
        ):
            raise SchemaError("sentence_boundaries", path=path, line=line_no, detail="ill-typed")
        boundaries = tuple(raw_b)

    genre = obj.get("genre")
    if genre is not None and not isinstance(genre, str):
        raise SchemaError("genre", path=path, line=line_no, detail="ill-typed")

    doc = Document(
        doc_id=doc_id,
        tokens=tuple(tokens),
        sentence_boundaries=boundaries,
        genre=genre,
        candidate_mentions=tuple(candidates),
        gold_clusters=tuple(gold),
    )
    problems = validate_document(doc)
    if problems:
        raise ParseError(f"invalid document: {problems[0]}", path=path, line=line_no)
    return doc


def document_to_obj(doc: Document) -> dict:
    """Serialize a document to the JSON-lines schema (entity ids positional)."""
    obj: dict = {
        "doc_id": doc.doc_id,
        "tokens": list(doc.tokens),
        "sentence_boundaries": list(doc.sentence_boundaries),
        "gold_clusters": [
            [m.as_pair() for m in cluster.mentions] for cluster in doc.gold_clusters
        ],
        "candidate_mentions": [
            [span.start, span.end, score] for span, score in doc.candidate_mentions
        ],
    }
    if doc.genre is not None:
        obj["genre"] = doc.genre
    return obj


def document_to_jsonl(doc: Document) -> str:
    return json.dumps(document_to_obj(doc), ensure_ascii=False)


def load_jsonl(path: str | Path) -> list[Document]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if line.strip():
                docs.append(parse_jsonl(line, path=str(path), line_no=line_no))
    return docs


def load_conll(path: str | Path) -> list[Document]:
    with open(path, encoding="utf-8") as fh:
        return parse_conll(fh.read(), path=str(path))


def write_jsonl(docs: Iterable[Document], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(document_to_jsonl(doc) + "\n")


_CONLL_SUFFIXES = (".conll", ".v4_gold_conll", ".v9_gold_conll", ".gold_conll")


def detect_format(path: str | Path) -> str:
    name = str(path)
    if any(name.endswith(suf) for suf in _CONLL_SUFFIXES):
        return "conll"
    return "jsonl"


@dataclass(frozen=True)
class CorpusSource:
    """One or more corpus files in a single format ("conll" or "jsonl")."""

    format: str
    paths: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.format not in ("conll", "jsonl"):
            raise ValueError(f"unknown corpus format {self.format!r}")
        if not self.paths:
            raise ValueError("a corpus source needs at least one path")

    def load(self) -> list[Document]:
        docs: list[Document] = []
        for p in self.paths:
            docs.extend(load_conll(p) if self.format == "conll" else load_jsonl(p))
        return docs


def read_corpus(paths: Sequence[str | Path], fmt: str = "auto") -> list[Document]:
    docs: list[Document] = []
    for p in paths:
        actual = detect_format(p) if fmt == "auto" else fmt
        docs.extend(CorpusSource(actual, (str(p),)).load())
    return docs


def order_mentions(spans: Iterable[MentionSpan]) -> tuple[list[MentionSpan], int]:
    """Sort spans into processing order and drop exact duplicates.

    Processing order is by start, ties broken by end. Returns the ordered
    spans plus the number of duplicates removed so callers can warn.
    """
    ordered = sorted(spans, key=lambda s: (s.start, s.end))
    out: list[MentionSpan] = []
    dupes = 0
    for s in ordered:
        if out and out[-1] == s:
            dupes += 1
        else:
            out.append(s)
    return out, dupes
