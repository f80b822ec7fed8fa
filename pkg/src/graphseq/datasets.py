"""Synthetic dataset generators: shortest-path families, place-map path
finding with labeled edges, and the SQL-to-description corpus.

Every emitted path sample is validated at generation time: a breadth-first
search with path counting must confirm exactly one shortest path of at least
the requested length between the chosen endpoints (the independent
re-verification in the test suite uses a different implementation).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .graphs import DirectedGraph, LabeledGraph, Sample, transform_labeled_edges, write_samples
from .rng import Rng
from .sql import AGGREGATIONS, SqlQuery, parse_sql, sql_to_graph, sql_to_sequence
from .vocab import END, START

__all__ = [
    "GenerationError",
    "DatasetSpec",
    "FAMILIES",
    "bfs_shortest_paths",
    "generate_sdp",
    "generate_babi19",
    "generate_dataset",
    "write_dataset",
    "generate_sql_queries",
    "describe_query",
    "queries_to_graph_samples",
    "queries_to_sequence_samples",
    "generate_sql_corpus",
]

FAMILIES = ("sp-s", "sp-l", "sdp-dag", "sdp-dcg", "sdp-seq", "babi19")

_GRAPH_TRIES = 200
_PAIR_TRIES = 50  # 200 * 50 = 1e4 attempts per sample before giving up


class GenerationError(RuntimeError):
    """Rejection sampling exhausted its retry budget."""


@dataclass
class DatasetSpec:
    """Recipe for one dataset: family, graph size, path constraint, split sizes."""

    family: str
    graph_size: int
    min_path_len: int
    counts: tuple  # (train, dev, test)
    seed: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        self.counts = tuple(int(c) for c in self.counts)
        if len(self.counts) != 3 or any(c <= 0 for c in self.counts):
            raise ValueError(f"counts must be three positive sizes, got {self.counts}")
        if self.min_path_len < 2:
            raise ValueError(f"min_path_len must be >= 2, got {self.min_path_len}")
        if self.graph_size < self.min_path_len + 1:
            raise ValueError(f"graph_size {self.graph_size} too small for paths of length {self.min_path_len}")

    def to_dict(self) -> dict:
        return {"family": self.family, "graph_size": self.graph_size,
                "min_path_len": self.min_path_len, "counts": list(self.counts),
                "seed": self.seed}

    @classmethod
    def preset(cls, family: str, seed: int = 1) -> "DatasetSpec":
        table = {
            "sp-s": (5, 2, (1000, 1000, 1000)),
            "sp-l": (100, 4, (1000, 1000, 1000)),
            "sdp-dag": (100, 4, (8000, 1000, 1000)),
            "sdp-dcg": (100, 4, (8000, 1000, 1000)),
            "sdp-seq": (100, 4, (8000, 1000, 1000)),
            "babi19": (6, 2, (1000, 1000, 1000)),
        }
        if family not in table:
            raise ValueError(f"unknown family {family!r}")
        size, min_len, counts = table[family]
        return cls(family=family, graph_size=size, min_path_len=min_len, counts=counts, seed=seed)


# ---------------------------------------------------------------------------
# shortest-path machinery


def bfs_shortest_paths(fwd: list[list[int]], src: int):
    """Distances, shortest-path counts (capped at 2), and parents from ``src``.

    ``parent[v]`` is meaningful only when ``count[v] == 1``, in which case the
    parent chain reconstructs the unique shortest path.
    """
    n = len(fwd)
    dist = [-1] * n
    count = [0] * n
    parent = [-1] * n
    dist[src] = 0
    count[src] = 1
    queue = [src]
    head = 0
    while head < len(queue):
        u = queue[head]
        head += 1
        for v in fwd[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                count[v] = count[u]
                parent[v] = u
                queue.append(v)
            elif dist[v] == dist[u] + 1:
                count[v] = min(2, count[v] + count[u])
    return dist, count, parent


def _unique_path(fwd: list[list[int]], a: int, b: int, min_len: int):
    """The unique shortest path a->b of length >= min_len, or None."""
    dist, count, parent = bfs_shortest_paths(fwd, a)
    if dist[b] < min_len or count[b] != 1:
        return None
    path = [b]
    while path[-1] != a:
        path.append(parent[path[-1]])
    return path[::-1]


def _has_cycle(n: int, edges: set) -> bool:
    indeg = [0] * n
    fwd = [[] for _ in range(n)]
    for u, v in edges:
        fwd[u].append(v)
        indeg[v] += 1
    queue = [v for v in range(n) if indeg[v] == 0]
    head = 0
    while head < len(queue):
        u = queue[head]
        head += 1
        for v in fwd[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    return len(queue) < n


# ---------------------------------------------------------------------------
# random graph families


def _edges_seq(n: int, rng: Rng) -> set:
    order = rng.permutation(n)
    return {(int(order[i]), int(order[i + 1])) for i in range(n - 1)}


def _edges_dag(n: int, rng: Rng) -> set:
    order = [int(v) for v in rng.permutation(n)]
    edges = set()
    for i in range(n - 1):
        later = order[i + 1:]
        degree = min(rng.integers(1, 4), len(later))
        for j in rng.sample_indices(len(later), degree):
            edges.add((order[i], later[j]))
    return edges


def _edges_random(n: int, rng: Rng) -> set:
    edges = set()
    for v in range(n):
        others = [u for u in range(n) if u != v]
        degree = min(rng.integers(1, 4), len(others))
        for j in rng.sample_indices(len(others), degree):
            edges.add((v, others[j]))
    return edges


def _edges_dcg(n: int, rng: Rng) -> set:
    edges = _edges_random(n, rng)
    if not _has_cycle(n, edges):
        a, b, c = (int(v) for v in rng.permutation(n)[:3])
        edges.update({(a, b), (b, c), (c, a)})
    return edges


_EDGE_BUILDERS = {
    "sp-s": _edges_random,
    "sp-l": _edges_random,
    "sdp-dag": _edges_dag,
    "sdp-dcg": _edges_dcg,
    "sdp-seq": _edges_seq,
}


def _one_path_sample(family: str, size: int, min_len: int, rng: Rng) -> Sample:
    for _ in range(_GRAPH_TRIES):
        edges = sorted(_EDGE_BUILDERS[family](size, rng))
        fwd = [[] for _ in range(size)]
        for u, v in edges:
            fwd[u].append(v)
        for _ in range(_PAIR_TRIES):
            a = rng.integers(0, size)
            b = rng.integers(0, size)
            if a == b:
                continue
            path = _unique_path(fwd, a, b, min_len)
            if path is None:
                continue
            attrs: list = [str(v) for v in range(size)]
            # endpoint attributes carry the marker and keep the id token so the
            # target's endpoint tokens stay predictable from the input
            attrs[a] = [START, str(a)]
            attrs[b] = [END, str(b)]
            graph = DirectedGraph(attrs, edges)
            return Sample(graph=graph, target=[str(v) for v in path], markers=(a, b))
    raise GenerationError(
        f"no unique shortest path of length >= {min_len} found for {family} "
        f"(size {size}) after {_GRAPH_TRIES * _PAIR_TRIES} attempts; try a larger graph")


def generate_sdp(spec: DatasetSpec, rng: Rng) -> list[Sample]:
    """All ``sum(counts)`` samples for a shortest-path family, in order."""
    if spec.family == "babi19":
        raise ValueError("use generate_babi19 for the place-map family")
    total = sum(spec.counts)
    return [_one_path_sample(spec.family, spec.graph_size, spec.min_path_len, rng)
            for _ in range(total)]


# ---------------------------------------------------------------------------
# place-map path finding (direction-labeled edges)


_DIRECTIONS = {"n": (0, 1), "s": (0, -1), "e": (1, 0), "w": (-1, 0)}
_OPPOSITE = {"n": "s", "s": "n", "e": "w", "w": "e"}


def _place_map(n_places: int, rng: Rng):
    """Tree of places on the integer grid; adjacencies carry true directions."""
    positions = {0: (0, 0)}
    occupied = {(0, 0): 0}
    adjacencies = []  # (u, v, direction from u to v)
    while len(positions) < n_places:
        u = rng.integers(0, len(positions))
        x, y = positions[u]
        options = [(d, (x + dx, y + dy)) for d, (dx, dy) in _DIRECTIONS.items()
                   if (x + dx, y + dy) not in occupied]
        if not options:
            continue
        d, cell = options[rng.integers(0, len(options))]
        v = len(positions)
        positions[v] = cell
        occupied[cell] = v
        adjacencies.append((u, v, d))
    return adjacencies


def generate_babi19(count: int, rng: Rng, n_places: int = 6, min_path_len: int = 2,
                    reverse_edge_prob: float = 0.5) -> list[Sample]:
    """Path-finding samples over direction-labeled place maps.

    Each labeled edge becomes an attribute-bearing node in the emitted graph;
    the target is the sequence of direction tokens along the unique shortest
    path between the two marked places. When both orientations of an
    adjacency are present their labels are opposites by construction.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if n_places < 2:
        raise ValueError(f"n_places must be >= 2, got {n_places}")
    samples = []
    for _ in range(count):
        samples.append(_one_babi_sample(n_places, min_path_len, reverse_edge_prob, rng))
    return samples


def _one_babi_sample(n_places: int, min_len: int, reverse_prob: float, rng: Rng) -> Sample:
    for _ in range(_GRAPH_TRIES):
        adjacencies = _place_map(n_places, rng)
        labeled = []
        for u, v, d in adjacencies:
            if rng.random() < 0.5:
                labeled.append((u, v, d))
            else:
                labeled.append((v, u, _OPPOSITE[d]))
            if rng.random() < reverse_prob:
                src, dst, lab = labeled[-1]
                labeled.append((dst, src, _OPPOSITE[lab]))
        fwd = [[] for _ in range(n_places)]
        label_of = {}
        for u, v, lab in labeled:
            fwd[u].append(v)
            label_of[(u, v)] = lab
        for _ in range(_PAIR_TRIES):
            a = rng.integers(0, n_places)
            b = rng.integers(0, n_places)
            if a == b:
                continue
            path = _unique_path(fwd, a, b, min_len)
            if path is None:
                continue
            attrs: list = [str(v) for v in range(n_places)]
            attrs[a] = START
            attrs[b] = END
            graph = transform_labeled_edges(LabeledGraph(attrs, labeled))
            target = [label_of[(path[i], path[i + 1])] for i in range(len(path) - 1)]
            return Sample(graph=graph, target=target, markers=(a, b))
    raise GenerationError(
        f"no unique shortest path of length >= {min_len} found on place maps "
        f"({n_places} places) after {_GRAPH_TRIES * _PAIR_TRIES} attempts; try a larger map")


# ---------------------------------------------------------------------------
# split handling and files


def generate_dataset(spec: DatasetSpec):
    """(train, dev, test) lists; each split gets its own child rng stream."""
    master = Rng(spec.seed)
    splits = []
    for i, count in enumerate(spec.counts):
        rng = master.child(i)
        if spec.family == "babi19":
            samples = generate_babi19(count, rng, n_places=spec.graph_size,
                                      min_path_len=spec.min_path_len)
        else:
            samples = [_one_path_sample(spec.family, spec.graph_size, spec.min_path_len, rng)
                       for _ in range(count)]
        splits.append(samples)
    return tuple(splits)


def write_dataset(out_dir, spec: DatasetSpec) -> dict:
    """Write train/dev/test JSONL plus a manifest recording spec and seed."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train, dev, test = generate_dataset(spec)
    for name, samples in (("train", train), ("dev", dev), ("test", test)):
        write_samples(out_dir / f"{name}.jsonl", samples)
    manifest = {"spec": spec.to_dict(), "files": ["train.jsonl", "dev.jsonl", "test.jsonl"]}
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


# ---------------------------------------------------------------------------
# SQL-to-description corpus


_SQL_COLUMNS = ("company", "sales", "assets", "name", "age", "city", "country",
                "price", "year", "score", "rank", "population")

_AGG_PHRASES = {
    "count": ["count", "the", "number", "of"],
    "max": ["show", "the", "largest"],
    "min": ["show", "the", "smallest"],
    "sum": ["show", "the", "total"],
    "avg": ["show", "the", "average"],
}

_OP_PHRASES = {"=": ["is"], ">": ["is", "greater", "than"], "<": ["is", "less", "than"]}


def generate_sql_queries(count: int, rng: Rng, max_conditions: int = 3) -> list[SqlQuery]:
    """Random queries over a fixed column pool, parsed from generated text.

    Condition counts lean toward two or three so that descriptions depend on
    which operator and value belong to which column.
    """
    queries = []
    for _ in range(count):
        n_cond = (1, 2, 2, 3, 3)[rng.integers(0, 5)]
        n_cond = min(n_cond, max_conditions)
        cols = [
            _SQL_COLUMNS[j]
            for j in rng.sample_indices(len(_SQL_COLUMNS), n_cond + 1)
        ]
        cols = rng.shuffled(cols)
        agg = AGGREGATIONS[rng.integers(0, len(AGGREGATIONS))] if rng.random() < 0.3 else None
        head = f"{agg}({cols[0]})" if agg else cols[0]
        used_values: list[int] = []
        conds = []
        for i in range(n_cond):
            op = ("=", ">", "<")[rng.integers(0, 3)]
            if used_values and rng.random() < 0.15:
                value = used_values[rng.integers(0, len(used_values))]
            else:
                value = rng.integers(1, 1000)
                while value in used_values:
                    value = rng.integers(1, 1000)
                used_values.append(value)
            conds.append(f"{cols[1 + i]} {op} {value}")
        text = f"select {head}"
        if conds:
            text += " where " + " and ".join(conds)
        queries.append(parse_sql(text))
    return queries


def describe_query(q: SqlQuery) -> list[str]:
    """Deterministic natural-language rendering used as the target sequence."""
    out = list(_AGG_PHRASES[q.aggregation]) if q.aggregation else ["show"]
    out.append(q.select_column)
    for i, c in enumerate(q.conditions):
        out.append("where" if i == 0 else "and")
        out.append(c.column)
        out.extend(_OP_PHRASES[c.op])
        out.append(c.value)
    return out


def queries_to_graph_samples(queries) -> list[Sample]:
    return [Sample(graph=sql_to_graph(q), target=describe_query(q)) for q in queries]


def queries_to_sequence_samples(queries) -> list[Sample]:
    """Template-sequence view: tokens as attribute-only nodes, no edges."""
    return [Sample(graph=DirectedGraph(sql_to_sequence(q), []), target=describe_query(q))
            for q in queries]


def generate_sql_corpus(counts: tuple, seed: int = 1, view: str = "graph"):
    """(train, dev, test) SQL description corpora in the requested view."""
    if view not in ("graph", "sequence"):
        raise ValueError(f"unknown view {view!r}; expected 'graph' or 'sequence'")
    master = Rng(seed)
    build = queries_to_graph_samples if view == "graph" else queries_to_sequence_samples
    return tuple(build(generate_sql_queries(count, master.child(i)))
                 for i, count in enumerate(counts))
