"""Scikit-learn style estimator wrapping the graph-to-sequence model.

``GraphSeq`` follows the estimator contract: constructor arguments are
stored verbatim, ``fit`` builds the fitted state on attributes with a
trailing underscore and returns ``self``, and ``get_params``/``set_params``
come from ``BaseEstimator`` so cloning and pipeline composition work.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator

from .graphs import DirectedGraph, Sample
from .rng import Rng
from .training import (TrainConfig, default_max_len, evaluate_path_accuracy, train)

__all__ = ["GraphSeq", "as_samples"]


def as_samples(X, y=None) -> list[Sample]:
    """Normalize estimator input into Samples.

    ``X`` may already be Samples (then ``y`` must be omitted) or a list of
    DirectedGraphs with ``y`` a matching list of token sequences.
    """
    X = list(X)
    if not X:
        raise ValueError("X must be non-empty")
    if all(isinstance(x, Sample) for x in X):
        if y is not None:
            raise ValueError("y must be None when X already contains Samples")
        return X
    if not all(isinstance(x, DirectedGraph) for x in X):
        raise TypeError("X must contain Samples or DirectedGraphs")
    if y is None:
        raise ValueError("y (target token sequences) is required with graph inputs")
    y = list(y)
    if len(y) != len(X):
        raise ValueError(f"X has {len(X)} graphs but y has {len(y)} targets")
    return [Sample(graph=g, target=list(t)) for g, t in zip(X, y)]


class GraphSeq(BaseEstimator):
    """Graph-to-sequence learner with fit/predict/score.

    Parameters mirror ``TrainConfig``; see that class for semantics. ``fit``
    accepts either ``(graphs, targets)`` or a list of ``Sample`` objects,
    plus an optional ``dev`` set used for early stopping (defaults to a
    held-out tail of the training data).
    """

    def __init__(self, lr=0.001, batch_size=30, dropout=0.5, clip_norm=20.0,
                 hops=6, feat_dim=40, hidden_dim=80, beam=5, aggregator="mean",
                 graph_embedding="pooling", direction="bi", attention=True,
                 attr_mode="mean", encoder_mode="graph", pooling_method="max",
                 tie_after=10, neighbor_cap=None, max_epochs=200, patience=20,
                 seed=1, dev_beam=1, dev_metric="accuracy", target_metric=None,
                 max_decode_len=None, dev_fraction=0.1):
        self.lr = lr
        self.batch_size = batch_size
        self.dropout = dropout
        self.clip_norm = clip_norm
        self.hops = hops
        self.feat_dim = feat_dim
        self.hidden_dim = hidden_dim
        self.beam = beam
        self.aggregator = aggregator
        self.graph_embedding = graph_embedding
        self.direction = direction
        self.attention = attention
        self.attr_mode = attr_mode
        self.encoder_mode = encoder_mode
        self.pooling_method = pooling_method
        self.tie_after = tie_after
        self.neighbor_cap = neighbor_cap
        self.max_epochs = max_epochs
        self.patience = patience
        self.seed = seed
        self.dev_beam = dev_beam
        self.dev_metric = dev_metric
        self.target_metric = target_metric
        self.max_decode_len = max_decode_len
        self.dev_fraction = dev_fraction

    def _config(self) -> TrainConfig:
        fields = {k: v for k, v in self.get_params().items() if k != "dev_fraction"}
        return TrainConfig(**fields)

    def fit(self, X, y=None, dev=None):
        samples = as_samples(X, y)
        if dev is not None:
            dev_samples = as_samples(dev)
            train_samples = samples
        else:
            n_dev = max(1, int(len(samples) * self.dev_fraction))
            if len(samples) - n_dev < 1:
                raise ValueError("not enough samples to split off a dev set; pass dev=")
            split = Rng(self.seed).permutation(len(samples))
            dev_samples = [samples[int(i)] for i in split[:n_dev]]
            train_samples = [samples[int(i)] for i in split[n_dev:]]
        cfg = self._config()
        self.checkpoint_, self.model_ = train(cfg, train_samples, dev_samples)
        self.vocab_ = self.model_.vocab
        self.max_len_ = cfg.max_decode_len or default_max_len(train_samples)
        return self

    def predict(self, X) -> list:
        """Decoded token sequences, one per input graph (or Sample)."""
        if not hasattr(self, "model_"):
            raise RuntimeError("estimator is not fitted; call fit first")
        graphs = [x.graph if isinstance(x, Sample) else x for x in X]
        return [self.model_.decode(g, beam=self.beam, max_len=self.max_len_)
                for g in graphs]

    def score(self, X, y=None) -> float:
        """Exact-match accuracy of beam-decoded sequences."""
        samples = as_samples(X, y)
        if not hasattr(self, "model_"):
            raise RuntimeError("estimator is not fitted; call fit first")
        return evaluate_path_accuracy(self.model_, samples, beam=self.beam,
                                      max_len=self.max_len_)
