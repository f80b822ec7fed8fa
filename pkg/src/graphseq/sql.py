"""SELECT/WHERE SQL subset: parsing, graph conversion, template sequences.

The grammar covers single-column selection with an optional aggregation
function and an optional WHERE clause of AND-joined comparisons:

    SELECT [agg(]column[)] [WHERE column op value [AND column op value]*]

Column and value tokens are normalized to lowercase and literal values are
abstracted to placeholder tokens ``val0``, ``val1``, ... in order of first
appearance (tokens already of that form pass through unchanged).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .graphs import DirectedGraph

__all__ = ["SqlParseError", "SqlCondition", "SqlQuery", "parse_sql", "query_to_text",
           "sql_to_graph", "sql_to_sequence", "AGGREGATIONS", "OPERATORS", "SEP_TOKEN"]

AGGREGATIONS = ("count", "max", "min", "sum", "avg")
OPERATORS = ("=", ">", "<")
SEP_TOKEN = "<sep>"

_PLACEHOLDER = re.compile(r"val\d+\Z")


class SqlParseError(ValueError):
    """Parse failure with the byte offset and the token set expected there."""

    def __init__(self, offset: int, expected, found: str):
        self.offset = offset
        self.expected = sorted(expected)
        super().__init__(f"offset {offset}: expected {'|'.join(self.expected)}, found {found!r}")


@dataclass(frozen=True)
class SqlCondition:
    column: str
    op: str
    value: str


@dataclass
class SqlQuery:
    select_column: str
    aggregation: str | None = None
    conditions: list = field(default_factory=list)

    def __post_init__(self):
        if not self.select_column:
            raise ValueError("query must select a column")
        if self.aggregation is not None and self.aggregation not in AGGREGATIONS:
            raise ValueError(f"unknown aggregation {self.aggregation!r}")
        for c in self.conditions:
            if c.op not in OPERATORS:
                raise ValueError(f"unknown operator {c.op!r}")


# ---------------------------------------------------------------------------
# tokenizer + recursive descent


_TOKEN = re.compile(r"""\s*(?:
    (?P<punct>[()=<>])
  | (?P<number>\d+(?:\.\d+)?)
  | (?P<string>'[^']*'|"[^"]*")
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
)""", re.VERBOSE)


def _tokenize(text: str):
    tokens = []  # (kind, value, offset)
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == m.start():
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            offset = len(text) - len(stripped)
            raise SqlParseError(offset, {"token"}, stripped[0])
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.placeholders: dict[str, str] = {}

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, expected):
        kind, value, offset = self.peek()
        raise SqlParseError(offset, expected, value if kind != "eof" else "<end>")

    def expect_keyword(self, word: str):
        kind, value, _ = self.peek()
        if kind == "word" and value.lower() == word:
            return self.advance()
        self.fail({word.upper()})

    def expect_punct(self, ch: str):
        kind, value, _ = self.peek()
        if kind == "punct" and value == ch:
            return self.advance()
        self.fail({ch})

    def identifier(self) -> str:
        kind, value, _ = self.peek()
        if kind == "word":
            self.advance()
            return value.lower()
        self.fail({"identifier"})

    def value_token(self) -> str:
        kind, value, _ = self.peek()
        if kind not in ("word", "number", "string"):
            self.fail({"value"})
        self.advance()
        raw = value.strip("'\"").lower()
        if _PLACEHOLDER.match(raw):
            return raw
        if raw not in self.placeholders:
            self.placeholders[raw] = f"val{len(self.placeholders)}"
        return self.placeholders[raw]

    def parse(self) -> SqlQuery:
        self.expect_keyword("select")
        aggregation = None
        kind, value, _ = self.peek()
        if kind == "word" and value.lower() in AGGREGATIONS \
                and self.tokens[self.pos + 1][:2] == ("punct", "("):
            aggregation = value.lower()
            self.advance()
            self.expect_punct("(")
            column = self.identifier()
            self.expect_punct(")")
        else:
            column = self.identifier()
        conditions = []
        kind, value, _ = self.peek()
        if kind == "word" and value.lower() == "where":
            self.advance()
            conditions.append(self.condition())
            while True:
                kind, value, _ = self.peek()
                if kind == "word" and value.lower() == "and":
                    self.advance()
                    conditions.append(self.condition())
                else:
                    break
        kind, value, offset = self.peek()
        if kind != "eof":
            raise SqlParseError(offset, {"AND", "<end>"}, value)
        return SqlQuery(select_column=column, aggregation=aggregation, conditions=conditions)

    def condition(self) -> SqlCondition:
        column = self.identifier()
        kind, value, _ = self.peek()
        if kind != "punct" or value not in OPERATORS:
            self.fail(set(OPERATORS))
        self.advance()
        return SqlCondition(column=column, op=value, value=self.value_token())


def parse_sql(text: str) -> SqlQuery:
    """Parse one query of the subset grammar into its AST."""
    return _Parser(text).parse()


def query_to_text(q: SqlQuery) -> str:
    """Canonical lowercase text form; parsing it back reproduces the AST."""
    head = f"{q.aggregation}({q.select_column})" if q.aggregation else q.select_column
    parts = [f"select {head}"]
    if q.conditions:
        conds = " and ".join(f"{c.column} {c.op} {c.value}" for c in q.conditions)
        parts.append(f"where {conds}")
    return " ".join(parts)


# ---------------------------------------------------------------------------
# conversions


def sql_to_graph(q: SqlQuery) -> DirectedGraph:
    """Query AST to a directed graph with text-attributed nodes.

    Node order is deterministic: the select node first, then column nodes in
    appearance order (selected column first), the aggregation node if any,
    then constraint nodes in appearance order, then the logic node. Column
    nodes are shared by name and constraint nodes with identical text (the
    operator fused with the value placeholder) are merged into one.

    Edges: select -> selected column; aggregation -> selected column;
    condition column -> its constraint node. With two or more conditions an
    ``and`` node points at every condition column and is linked with the
    select node in both directions (so the where side is attached to select
    and every condition column stays reachable from it); a lone condition's
    column is linked with select the same way.
    """
    attrs = ["select"]
    index: dict[tuple, int] = {}

    def node(kind: str, text: str) -> int:
        key = (kind, text)
        if key not in index:
            index[key] = len(attrs)
            attrs.append(text)
        return index[key]

    select_col = node("col", q.select_column)
    for c in q.conditions:
        node("col", c.column)
    agg = node("agg", q.aggregation) if q.aggregation else None
    constraint_of = {}
    for c in q.conditions:
        constraint_of[c] = node("constraint", f"{c.op}{c.value}")

    edges = [(0, select_col)]
    if agg is not None:
        edges.append((agg, select_col))
    for c in q.conditions:
        edge = (index[("col", c.column)], constraint_of[c])
        if edge not in edges:
            edges.append(edge)
    if len(q.conditions) >= 2:
        and_node = node("logic", "and")
        for c in q.conditions:
            edge = (and_node, index[("col", c.column)])
            if edge not in edges:
                edges.append(edge)
        edges.append((and_node, 0))
        edges.append((0, and_node))
    elif len(q.conditions) == 1:
        col = index[("col", q.conditions[0].column)]
        for edge in ((col, 0), (0, col)):
            if edge not in edges:
                edges.append(edge)
    return DirectedGraph(attrs, edges)


def sql_to_sequence(q: SqlQuery) -> list[str]:
    """Template expansion of the query with the split-symbol token.

    SELECT + aggregation + <sep> + column + WHERE + condition + <sep> + ...
    (sections without content are omitted, the separator between the
    aggregation slot and the column stays).
    """
    seq = ["select"]
    if q.aggregation:
        seq.append(q.aggregation)
    seq.extend([SEP_TOKEN, q.select_column])
    if q.conditions:
        seq.append("where")
        for i, c in enumerate(q.conditions):
            if i:
                seq.append(SEP_TOKEN)
            seq.extend([c.column, c.op, c.value])
    return seq
