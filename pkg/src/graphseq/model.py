"""Full graph-to-sequence model: parameters, loss, and decoding in one place."""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .decoder import DecoderParams, beam_search, sequence_loss
from .encoder import (EncoderParams, encode_nodes, graph_embedding_pooling,
                      graph_embedding_supernode, init_node_features)
from .graphs import DirectedGraph, Sample
from .optim import ParamSet
from .rng import Rng
from .vocab import Vocabulary

__all__ = ["GraphSeqModel"]

GRAPH_EMBEDDINGS = ("pooling", "supernode")
ENCODER_MODES = ("graph", "echo")


class GraphSeqModel:
    """Bundles the vocabulary, encoder, and decoder behind loss/decode calls.

    ``encoder_mode="echo"`` bypasses the graph encoder entirely: node
    embeddings are the raw attribute-token embeddings tiled to the context
    width and the graph vector is their mean. It exists as the
    no-graph-encoding baseline for sequence-shaped inputs.
    """

    def __init__(self, vocab: Vocabulary, *, feat_dim: int = 40, hidden_dim: int = 80,
                 hops: int = 6, aggregator: str = "mean", graph_embedding: str = "pooling",
                 direction: str = "bi", attention: bool = True, dropout: float = 0.5,
                 attr_mode: str = "mean", encoder_mode: str = "graph",
                 pooling_method: str = "max", tie_after: int = 10,
                 neighbor_cap: int | None = None, init_rng: Rng | None = None):
        if hidden_dim % 2 != 0:
            raise ValueError(f"hidden_dim must be even, got {hidden_dim}")
        if graph_embedding not in GRAPH_EMBEDDINGS:
            raise ValueError(f"unknown graph embedding {graph_embedding!r}; expected one of {GRAPH_EMBEDDINGS}")
        if encoder_mode not in ENCODER_MODES:
            raise ValueError(f"unknown encoder mode {encoder_mode!r}; expected one of {ENCODER_MODES}")
        if encoder_mode == "echo" and 2 * feat_dim != hidden_dim:
            raise ValueError("echo mode needs hidden_dim == 2 * feat_dim")
        init_rng = init_rng or Rng(0)
        self.vocab = vocab
        self.hops = hops
        self.aggregator = aggregator
        self.graph_embedding = graph_embedding
        self.direction = direction
        self.attention = attention
        self.dropout = dropout
        self.encoder_mode = encoder_mode
        self.pooling_method = pooling_method
        self.neighbor_cap = neighbor_cap
        node_dim = hidden_dim // 2

        self.params = ParamSet()
        self.enc = EncoderParams(self.params, init_rng.child(1), len(vocab),
                                 feat_dim=feat_dim, node_dim=node_dim, out_dim=hidden_dim,
                                 hops=hops, aggregator=aggregator, attr_mode=attr_mode,
                                 tie_after=tie_after)
        self.dec = DecoderParams(self.params, init_rng.child(2), len(vocab),
                                 token_embed=self.enc.embed, ctx_dim=2 * node_dim,
                                 hidden=hidden_dim, align_dim=hidden_dim)

    # -- forward paths -----------------------------------------------------

    def encode(self, graph: DirectedGraph, rng: Rng | None = None) -> tuple[Tensor, Tensor]:
        """Node embeddings [V, ctx] and graph embedding [1, ctx]."""
        if self.encoder_mode == "echo":
            feats = init_node_features(graph, self.vocab, self.enc, mode="mean")
            z = ad.concat([feats, feats], axis=1)
            return z, ad.reduce_mean(z, axis=0)
        if self.graph_embedding == "supernode":
            gemb, z = graph_embedding_supernode(graph, self.vocab, self.enc, K=self.hops,
                                                kind=self.aggregator, rng=rng,
                                                direction=self.direction)
            return z, gemb
        z = encode_nodes(graph, self.vocab, self.enc, K=self.hops, kind=self.aggregator,
                         rng=rng, direction=self.direction, neighbor_cap=self.neighbor_cap)
        return z, graph_embedding_pooling(z, self.enc, method=self.pooling_method)

    def initial_state(self, gemb: Tensor) -> tuple[Tensor, Tensor]:
        """Decoder start state: tanh bridge from the graph embedding, zero cell."""
        h0 = ad.tanh(ad.add(ad.matmul(gemb, self.enc.bridge_w), self.enc.bridge_b))
        return h0, ad.zeros((1, h0.shape[1]))

    def loss(self, sample: Sample, rng: Rng | None = None, training: bool = True) -> Tensor:
        """Teacher-forced mean NLL per target token for one sample."""
        z, gemb = self.encode(sample.graph, rng=rng)
        target_ids = self.vocab.encode(sample.target)
        return sequence_loss(target_ids, z, self.initial_state(gemb), self.dec, self.vocab,
                             rng=rng, training=training, dropout_rate=self.dropout,
                             attention=self.attention,
                             fixed_context=None if self.attention else gemb)

    def decode(self, graph: DirectedGraph, beam: int = 5, max_len: int = 40,
               rng: Rng | None = None) -> list[str]:
        """Beam-search decode a graph into a token sequence."""
        with ad.no_grad():
            z, gemb = self.encode(graph, rng=rng)
            ids = beam_search(z, self.initial_state(gemb), self.dec, self.vocab,
                              beam=beam, max_len=max_len, attention=self.attention,
                              fixed_context=None if self.attention else gemb)
        return self.vocab.decode(ids)

    # -- parameter plumbing ------------------------------------------------

    def config_dict(self) -> dict:
        return {
            "feat_dim": self.enc.feat_dim,
            "hidden_dim": self.enc.out_dim,
            "hops": self.hops,
            "aggregator": self.aggregator,
            "graph_embedding": self.graph_embedding,
            "direction": self.direction,
            "attention": self.attention,
            "dropout": self.dropout,
            "attr_mode": self.enc.attr_mode,
            "encoder_mode": self.encoder_mode,
            "pooling_method": self.pooling_method,
            "tie_after": self.enc.tie_after,
            "neighbor_cap": self.neighbor_cap,
        }

    @classmethod
    def from_config(cls, vocab: Vocabulary, config: dict, init_rng: Rng | None = None) -> "GraphSeqModel":
        return cls(vocab, init_rng=init_rng, **config)
