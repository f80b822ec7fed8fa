"""Shared test utilities: finite-difference gradcheck and path oracles."""

import numpy as np

from graphseq import autodiff as ad


def finite_diff(make_loss, tensor, h=1e-5):
    """Central-difference gradient of ``make_loss()`` w.r.t. every coordinate."""
    flat = tensor.data.reshape(-1)
    out = np.zeros_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = make_loss().item()
        flat[i] = orig - h
        down = make_loss().item()
        flat[i] = orig
        out[i] = (up - down) / (2.0 * h)
    return out.reshape(tensor.data.shape)


def gradcheck(make_loss, params, h=1e-5, floor=1e-4):
    """Worst relative error between analytic and central-difference gradients.

    The relative error per coordinate is |analytic - fd| / max(|analytic|,
    |fd|, floor); the floor keeps fd roundoff on near-zero gradients from
    dominating (for those coordinates the comparison is effectively
    absolute at floor * tolerance).
    """
    loss = make_loss()
    ad.backward(loss, params)
    analytic = {name: t.grad.copy() for name, t in params.items()}
    worst = 0.0
    for name, t in params.items():
        fd = finite_diff(make_loss, t, h=h)
        denom = np.maximum(np.maximum(np.abs(fd), np.abs(analytic[name])), floor)
        worst = max(worst, float(np.max(np.abs(fd - analytic[name]) / denom)))
    return worst


def nx_digraph(graph):
    """networkx view of a DirectedGraph (test-side independent structure)."""
    import networkx as nx
    g = nx.DiGraph()
    g.add_nodes_from(range(graph.num_nodes))
    g.add_edges_from(graph.edges)
    return g


def nx_unique_shortest_path(graph, a, b):
    """All shortest a->b paths via networkx; the independent dataset oracle."""
    import networkx as nx
    g = nx_digraph(graph)
    try:
        return list(nx.all_shortest_paths(g, a, b))
    except nx.NetworkXNoPath:
        return []
