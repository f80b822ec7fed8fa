"""Directed graphs with text attributes, transformations, and the JSONL format.

Node ids are dense integers ``0..V-1``; each node carries a text attribute
that is either a single token or a list of tokens. Adjacency is kept both
ways: ``forward_neighbors(v)`` lists the nodes ``v`` directs to and
``backward_neighbors(v)`` the nodes directing to ``v``, in edge insertion
order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

__all__ = [
    "GraphError",
    "GraphFileError",
    "DirectedGraph",
    "LabeledGraph",
    "Sample",
    "transform_labeled_edges",
    "add_supernode",
    "sample_neighbors",
    "sample_to_dict",
    "sample_from_dict",
    "write_samples",
    "parse_graph_file",
]

SUPERNODE_TOKEN = "<SUPER>"

Attr = "str | list[str]"


class GraphError(ValueError):
    """Invalid graph structure."""


class GraphFileError(ValueError):
    """Malformed graph file contents."""


def _check_attr(attr):
    if isinstance(attr, str):
        return attr
    if isinstance(attr, (list, tuple)) and attr and all(isinstance(t, str) for t in attr):
        return list(attr)
    raise GraphError(f"node attribute must be a token or non-empty token list, got {attr!r}")


class DirectedGraph:
    """Immutable directed graph; duplicate edges and self-loops are rejected."""

    __slots__ = ("attrs", "edges", "_fwd", "_bwd")

    def __init__(self, node_attrs: Sequence, edges: Iterable[tuple[int, int]]):
        self.attrs = [_check_attr(a) for a in node_attrs]
        n = len(self.attrs)
        fwd = [[] for _ in range(n)]
        bwd = [[] for _ in range(n)]
        seen = set()
        edge_list = []
        for src, dst in edges:
            src, dst = int(src), int(dst)
            if not (0 <= src < n and 0 <= dst < n):
                raise GraphError(f"edge ({src}, {dst}) references a node outside 0..{n - 1}")
            if src == dst:
                raise GraphError(f"self-loop at node {src}")
            if (src, dst) in seen:
                raise GraphError(f"duplicate edge ({src}, {dst})")
            seen.add((src, dst))
            edge_list.append((src, dst))
            fwd[src].append(dst)
            bwd[dst].append(src)
        self.edges = tuple(edge_list)
        self._fwd = tuple(tuple(l) for l in fwd)
        self._bwd = tuple(tuple(l) for l in bwd)

    @property
    def num_nodes(self) -> int:
        return len(self.attrs)

    def _check_node(self, v: int) -> int:
        v = int(v)
        if not 0 <= v < self.num_nodes:
            raise GraphError(f"node id {v} outside 0..{self.num_nodes - 1}")
        return v

    def forward_neighbors(self, v: int) -> list[int]:
        """Nodes that v directs to, in edge insertion order."""
        return list(self._fwd[self._check_node(v)])

    def backward_neighbors(self, v: int) -> list[int]:
        """Nodes that direct to v, in edge insertion order."""
        return list(self._bwd[self._check_node(v)])

    def __eq__(self, other):
        return (isinstance(other, DirectedGraph)
                and self.attrs == other.attrs
                and set(self.edges) == set(other.edges))

    def __repr__(self):
        return f"DirectedGraph(nodes={self.num_nodes}, edges={len(self.edges)})"


@dataclass(frozen=True)
class LabeledGraph:
    """Generator-internal graph whose every edge carries a label token."""

    node_attrs: list
    edges: list  # (src, dst, label)


def transform_labeled_edges(g: LabeledGraph) -> DirectedGraph:
    """Replace each labeled edge (u, v, l) by a node w with attribute l.

    The new node sits on the former edge: u -> w -> v. Edge labels thereby
    become ordinary node attributes and the result is label-free.
    """
    attrs = list(g.node_attrs)
    edges = []
    for src, dst, label in g.edges:
        if not isinstance(label, str) or not label:
            raise GraphError(f"edge ({src}, {dst}) lacks a label token")
        w = len(attrs)
        attrs.append(label)
        edges.append((src, w))
        edges.append((w, dst))
    return DirectedGraph(attrs, edges)


def add_supernode(g: DirectedGraph) -> tuple[DirectedGraph, int]:
    """Append one node that every existing node directs to.

    Returns the augmented graph and the new node's id (== original V). The
    supernode carries the reserved attribute token and has no out-edges.
    """
    super_id = g.num_nodes
    attrs = list(g.attrs) + [SUPERNODE_TOKEN]
    edges = list(g.edges) + [(v, super_id) for v in range(g.num_nodes)]
    return DirectedGraph(attrs, edges), super_id


def sample_neighbors(nbrs: Sequence[int], cap: int, rng) -> list[int]:
    """At most ``cap`` neighbors: all of them if few, else a uniform subset.

    The subset keeps the original relative order so downstream iteration
    stays deterministic given the rng stream.
    """
    if cap < 1:
        raise ValueError(f"neighbor cap must be >= 1, got {cap}")
    nbrs = list(nbrs)
    if len(nbrs) <= cap:
        return nbrs
    return [nbrs[i] for i in rng.sample_indices(len(nbrs), cap)]


@dataclass
class Sample:
    """One (graph, target sequence) pair, optionally with start/end markers."""

    graph: DirectedGraph
    target: list
    markers: tuple | None = None

    def __post_init__(self):
        if not self.target or not all(isinstance(t, str) for t in self.target):
            raise ValueError("target must be a non-empty list of tokens")
        if self.markers is not None:
            s, e = self.markers
            self.markers = (self.graph._check_node(s), self.graph._check_node(e))


# ---------------------------------------------------------------------------
# on-disk format: one JSON object per line


def sample_to_dict(sample: Sample) -> dict:
    d = {
        "nodes": [{"id": i, "attr": a} for i, a in enumerate(sample.graph.attrs)],
        "edges": [[s, t] for s, t in sample.graph.edges],
        "target": list(sample.target),
    }
    if sample.markers is not None:
        d["markers"] = list(sample.markers)
    return d


def sample_from_dict(d: dict) -> Sample:
    nodes = d["nodes"]
    ids = sorted(n["id"] for n in nodes)
    if ids != list(range(len(nodes))):
        raise GraphError(f"node ids must be exactly 0..{len(nodes) - 1}")
    attrs = [None] * len(nodes)
    for n in nodes:
        attrs[n["id"]] = n["attr"]
    graph = DirectedGraph(attrs, [tuple(e) for e in d["edges"]])
    markers = tuple(d["markers"]) if "markers" in d else None
    return Sample(graph=graph, target=list(d["target"]), markers=markers)


def write_samples(path, samples: Iterable[Sample]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(json.dumps(sample_to_dict(s), separators=(",", ":")) + "\n")


def parse_graph_file(path) -> list[Sample]:
    """Read a JSONL graph file; errors carry the 1-based line number."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
                out.append(sample_from_dict(d))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise GraphFileError(f"{path}: line {lineno}: {exc}") from exc
    return out
