"""Bi-directional node embeddings over K hops, plus whole-graph embeddings.

Each node starts from an embedding of its text attribute. At every hop it
aggregates its forward neighbors' previous-hop representations into one
vector, concatenates that with its own previous representation, and passes
the result through a per-hop dense layer with ReLU; the backward direction
runs the same recurrence over the reversed adjacency. The final node
embedding concatenates both directions. Hops past ``tie_after`` reuse the
last hop's weights instead of introducing new ones.

Aggregators:
  mean     elementwise mean of the neighbor vectors
  pooling  elementwise max of a shared dense+ReLU transform of each neighbor
  lstm     final hidden state of an LSTM run over one random permutation

Mean and pooling are permutation invariant bit-for-bit: reductions run in a
canonical order (sorted neighbor ids inside the batched path, value-sorted
rows in the list path), so reordering a neighbor list cannot change even the
floating-point rounding.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .graphs import DirectedGraph, add_supernode, sample_neighbors
from .nn import lstm_step
from .optim import ParamSet, glorot_uniform
from .vocab import Vocabulary

__all__ = [
    "AGGREGATORS",
    "EncoderParams",
    "init_node_features",
    "aggregate",
    "encode_nodes",
    "graph_embedding_pooling",
    "graph_embedding_supernode",
]

AGGREGATORS = ("mean", "lstm", "pooling")
DIRECTIONS = ("bi", "fwd", "bwd")


def _add_lstm(params: ParamSet, rng, prefix: str, in_dim: int, hidden: int) -> dict:
    return {
        "wx": params.add(f"{prefix}.wx", glorot_uniform(rng, in_dim, 4 * hidden)),
        "wh": params.add(f"{prefix}.wh", glorot_uniform(rng, hidden, 4 * hidden)),
        "b": params.add(f"{prefix}.b", np.zeros(4 * hidden)),
    }


class EncoderParams:
    """Creates and owns the encoder weights inside a ParamSet.

    ``hops`` controls how many aggregation iterations run; only
    ``min(hops, tie_after)`` distinct per-hop weight groups exist, and later
    hops reuse the last group. Forward and backward directions get separate
    weights unless ``tie_directions`` is set.
    """

    def __init__(self, params: ParamSet, rng, vocab_size: int, feat_dim: int = 40,
                 node_dim: int = 40, out_dim: int = 80, hops: int = 6,
                 aggregator: str = "mean", attr_mode: str = "mean",
                 tie_after: int = 10, tie_directions: bool = False):
        if aggregator not in AGGREGATORS:
            raise ValueError(f"unknown aggregator {aggregator!r}; expected one of {AGGREGATORS}")
        if attr_mode not in ("mean", "lstm"):
            raise ValueError(f"unknown attribute mode {attr_mode!r}")
        if hops < 1:
            raise ValueError(f"hops must be >= 1, got {hops}")
        self.params = params
        self.feat_dim = feat_dim
        self.node_dim = node_dim
        self.out_dim = out_dim
        self.hops = hops
        self.aggregator = aggregator
        self.attr_mode = attr_mode
        self.tie_after = tie_after
        self.n_groups = min(hops, tie_after)

        self.embed = params.add("enc.embed", rng.uniform(-0.1, 0.1, (vocab_size, feat_dim)))
        if attr_mode == "lstm":
            self.attr_lstm = _add_lstm(params, rng, "enc.attr_lstm", feat_dim, feat_dim)

        self.hop_groups = {"fwd": [], "bwd": []}
        for k in range(1, self.n_groups + 1):
            in_dim = feat_dim if k == 1 else node_dim
            for direction in ("fwd", "bwd"):
                if tie_directions and direction == "bwd":
                    self.hop_groups["bwd"].append(self.hop_groups["fwd"][-1])
                    continue
                prefix = f"enc.{direction}.hop{k}"
                group = {"update": params.add(f"{prefix}.update", glorot_uniform(rng, 2 * in_dim, node_dim))}
                if aggregator == "pooling":
                    group["pool_w"] = params.add(f"{prefix}.pool_w", glorot_uniform(rng, in_dim, in_dim))
                    group["pool_b"] = params.add(f"{prefix}.pool_b", np.zeros(in_dim))
                elif aggregator == "lstm":
                    group["lstm"] = _add_lstm(params, rng, f"{prefix}.lstm", in_dim, in_dim)
                self.hop_groups[direction].append(group)

        z_dim = 2 * node_dim
        self.pool_w = params.add("enc.graph_pool.w", glorot_uniform(rng, z_dim, z_dim))
        self.pool_b = params.add("enc.graph_pool.b", np.zeros(z_dim))
        self.bridge_w = params.add("enc.bridge.w", glorot_uniform(rng, z_dim, out_dim))
        self.bridge_b = params.add("enc.bridge.b", np.zeros(out_dim))

    def group(self, direction: str, hop: int) -> dict:
        """Weight group for 1-based ``hop``; hops past the last group reuse it."""
        return self.hop_groups[direction][min(hop, self.n_groups) - 1]


# ---------------------------------------------------------------------------
# initial node features


def init_node_features(g: DirectedGraph, vocab: Vocabulary, enc: EncoderParams,
                       mode: str | None = None) -> Tensor:
    """Embed each node's text attribute into a [V, feat_dim] matrix.

    Single-token attributes are embedding rows; multi-token attributes are
    averaged rows (``mean``) or the final state of the attribute LSTM
    (``lstm``). Unknown tokens map to the unknown-token row.
    """
    mode = mode or enc.attr_mode
    if all(isinstance(a, str) for a in g.attrs):
        ids = [vocab.lookup(a) for a in g.attrs]
        return ad.gather_rows(enc.embed, ids)
    rows = []
    for attr in g.attrs:
        tokens = [attr] if isinstance(attr, str) else attr
        ids = [vocab.lookup(t) for t in tokens]
        vecs = ad.gather_rows(enc.embed, ids)
        if len(ids) == 1:
            rows.append(vecs)
        elif mode == "mean":
            rows.append(ad.reduce_mean(vecs, axis=0))
        else:
            h = ad.zeros((1, enc.feat_dim))
            c = ad.zeros((1, enc.feat_dim))
            cell = enc.attr_lstm
            for tok_id in ids:
                h, c = lstm_step(ad.gather_rows(enc.embed, [tok_id]), h, c,
                                 cell["wx"], cell["wh"], cell["b"])
            rows.append(h)
    return ad.concat(rows, axis=0)


# ---------------------------------------------------------------------------
# aggregation


def _canonical_rows(reps: list[Tensor]) -> list[Tensor]:
    """Order a list of [1, d] rows by value so reductions are order-stable."""
    stacked = np.concatenate([r.data for r in reps], axis=0)
    order = np.lexsort(stacked.T[::-1])
    return [reps[i] for i in order]


def aggregate(neighbor_reps: list[Tensor], kind: str, hop: int, direction: str,
              enc: EncoderParams, rng=None) -> Tensor:
    """Combine a non-empty list of [1, d] neighbor vectors into one [1, d] vector."""
    if kind not in AGGREGATORS:
        raise ValueError(f"unknown aggregator {kind!r}; expected one of {AGGREGATORS}")
    if not neighbor_reps:
        raise ValueError("aggregate requires at least one neighbor representation")
    group = enc.group(direction, hop)
    if kind == "mean":
        ordered = _canonical_rows(neighbor_reps)
        return ad.scale(ad.add_n(ordered), 1.0 / len(ordered))
    if kind == "pooling":
        stacked = ad.concat(_canonical_rows(neighbor_reps), axis=0)
        transformed = ad.relu(ad.add(ad.matmul(stacked, group["pool_w"]), group["pool_b"]))
        return ad.reduce_max(transformed, axis=0)
    # lstm: one random permutation of the neighbor set, then a sequential pass
    perm = rng.permutation(len(neighbor_reps))
    dim = neighbor_reps[0].shape[1]
    h = ad.zeros((1, dim))
    c = ad.zeros((1, dim))
    cell = group["lstm"]
    for i in perm:
        h, c = lstm_step(neighbor_reps[int(i)], h, c, cell["wx"], cell["wh"], cell["b"])
    return h


def _adjacency_flat(g: DirectedGraph, forward: bool, cap=None, rng=None):
    """Sorted-id flattened adjacency (indices + per-node counts) for one direction."""
    lists = []
    for v in range(g.num_nodes):
        nbrs = g.forward_neighbors(v) if forward else g.backward_neighbors(v)
        if cap is not None and len(nbrs) > cap:
            nbrs = sample_neighbors(nbrs, cap, rng)
        lists.append(sorted(nbrs))
    counts = np.array([len(l) for l in lists], dtype=np.intp)
    flat = np.array([u for l in lists for u in l], dtype=np.intp)
    return flat, counts, lists


def _aggregate_all(h: Tensor, flat, counts, lists, kind: str, group: dict, rng) -> Tensor:
    """Per-node neighbor aggregation for a whole [V, d] matrix at once."""
    if kind == "mean":
        return ad.segment_mean(h, flat, counts)
    if kind == "pooling":
        transformed = ad.relu(ad.add(ad.matmul(h, group["pool_w"]), group["pool_b"]))
        return ad.segment_max(transformed, flat, counts)
    dim = h.shape[1]
    cell = group["lstm"]
    rows = []
    for nbrs in lists:
        if not nbrs:
            rows.append(ad.zeros((1, dim)))
            continue
        perm = rng.permutation(len(nbrs))
        hh = ad.zeros((1, dim))
        cc = ad.zeros((1, dim))
        for i in perm:
            hh, cc = lstm_step(ad.gather_rows(h, [nbrs[int(i)]]), hh, cc,
                               cell["wx"], cell["wh"], cell["b"])
        rows.append(hh)
    return ad.concat(rows, axis=0)


# ---------------------------------------------------------------------------
# the K-hop recurrence


def encode_nodes(g: DirectedGraph, vocab: Vocabulary, enc: EncoderParams,
                 K: int | None = None, kind: str | None = None, rng=None,
                 direction: str = "bi", neighbor_cap: int | None = None) -> Tensor:
    """Run the K-hop recurrence; returns [V, 2*node_dim] node embeddings.

    The first half of each row is the forward-direction representation, the
    second the backward one. In single-direction modes the skipped half is
    zero, which is exactly what zeroed-out weights for that direction would
    produce.
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"unknown direction {direction!r}; expected one of {DIRECTIONS}")
    K = enc.hops if K is None else K
    kind = kind or enc.aggregator
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")

    feats = init_node_features(g, vocab, enc)
    halves = {}
    for dirname, use_forward_adj in (("fwd", True), ("bwd", False)):
        if direction != "bi" and direction != dirname:
            continue
        h = feats
        if neighbor_cap is None:
            flat, counts, lists = _adjacency_flat(g, use_forward_adj)
        for k in range(1, K + 1):
            if neighbor_cap is not None:
                flat, counts, lists = _adjacency_flat(g, use_forward_adj, neighbor_cap, rng)
            group = enc.group(dirname, k)
            agg = _aggregate_all(h, flat, counts, lists, kind, group, rng)
            h = ad.relu(ad.matmul(ad.concat([h, agg], axis=1), group["update"]))
        halves[dirname] = h

    zero_half = ad.zeros((g.num_nodes, enc.node_dim))
    return ad.concat([halves.get("fwd", zero_half), halves.get("bwd", zero_half)], axis=1)


# ---------------------------------------------------------------------------
# graph embeddings


def graph_embedding_pooling(z: Tensor, enc: EncoderParams, method: str = "max") -> Tensor:
    """Dense-transform the node embeddings, then pool elementwise over nodes."""
    transformed = ad.add(ad.matmul(z, enc.pool_w), enc.pool_b)
    if method == "max":
        return ad.reduce_max(transformed, axis=0)
    if method == "min":
        return ad.reduce_min(transformed, axis=0)
    if method == "avg":
        return ad.reduce_mean(transformed, axis=0)
    raise ValueError(f"unknown pooling method {method!r}; expected max, min or avg")


def graph_embedding_supernode(g: DirectedGraph, vocab: Vocabulary, enc: EncoderParams,
                              K: int | None = None, kind: str | None = None, rng=None,
                              direction: str = "bi") -> tuple[Tensor, Tensor]:
    """Graph embedding read off an added supernode.

    Augments the graph with a node every other node directs to, encodes the
    augmented graph, and returns (supernode embedding [1, 2*node_dim],
    original-node embeddings [V, 2*node_dim]).
    """
    augmented, super_id = add_supernode(g)
    z = encode_nodes(augmented, vocab, enc, K=K, kind=kind, rng=rng, direction=direction)
    emb = ad.gather_rows(z, [super_id])
    original = ad.gather_rows(z, list(range(g.num_nodes)))
    return emb, original
