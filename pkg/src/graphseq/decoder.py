"""Attention-based LSTM sequence decoder: loss, greedy decoding, beam search.

At each step the previous hidden state queries an additive alignment network
over the node embeddings; the softmax-weighted sum of those embeddings is
the context vector. The LSTM consumes the previous token's embedding
concatenated with the context, and the next-token logits come from a linear
projection of the new hidden state concatenated with the same context (with
dropout there during training).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .nn import lstm_step
from .optim import ParamSet, glorot_uniform
from .vocab import Vocabulary

__all__ = ["DecoderParams", "Hypothesis", "compute_attention", "decode_step",
           "sequence_loss", "beam_search", "greedy_decode"]


class DecoderParams:
    """Creates and owns the decoder weights inside a ParamSet.

    The token embedding is shared with the encoder: pass the encoder's
    embedding tensor as ``token_embed``.
    """

    def __init__(self, params: ParamSet, rng, vocab_size: int, token_embed: Tensor,
                 ctx_dim: int = 80, hidden: int = 80, align_dim: int = 80):
        feat_dim = token_embed.shape[1]
        self.token_embed = token_embed
        self.ctx_dim = ctx_dim
        self.hidden = hidden
        self.wx = params.add("dec.lstm.wx", glorot_uniform(rng, feat_dim + ctx_dim, 4 * hidden))
        self.wh = params.add("dec.lstm.wh", glorot_uniform(rng, hidden, 4 * hidden))
        self.b = params.add("dec.lstm.b", np.zeros(4 * hidden))
        self.attn_w = params.add("dec.attn.w", glorot_uniform(rng, hidden, align_dim))
        self.attn_u = params.add("dec.attn.u", glorot_uniform(rng, ctx_dim, align_dim))
        self.attn_v = params.add("dec.attn.v", glorot_uniform(rng, align_dim, 1))
        self.out_w = params.add("dec.out.w", glorot_uniform(rng, hidden + ctx_dim, vocab_size))
        self.out_b = params.add("dec.out.b", np.zeros(vocab_size))


@dataclass
class Hypothesis:
    """One partial beam-search output: token ids, their joint log-prob, LSTM state."""

    tokens: tuple
    log_prob: float
    state: tuple  # (h, c)


def compute_attention(s_prev: Tensor, z: Tensor, dec: DecoderParams) -> tuple[Tensor, Tensor]:
    """Alignment scores from the previous hidden state against every node.

    Returns (context [1, ctx_dim], alpha [V, 1]); alpha is a probability
    vector over nodes and the context is the alpha-weighted sum of node
    embeddings.
    """
    scores = ad.matmul(ad.tanh(ad.add(ad.matmul(z, dec.attn_u), ad.matmul(s_prev, dec.attn_w))),
                       dec.attn_v)
    alpha = ad.softmax(scores)
    context = ad.matmul(ad.transpose(alpha), z)
    return context, alpha


def decode_step(state: tuple, y_prev: int, z: Tensor, dec: DecoderParams,
                rng=None, training: bool = False, dropout_rate: float = 0.5,
                attention: bool = True, fixed_context: Tensor | None = None):
    """One decoder step given the previous token id.

    Returns (logits [1, vocab], new state, alpha or None). With attention
    disabled the caller supplies ``fixed_context`` (used at every step).
    """
    h, c = state
    vocab_size = dec.out_w.shape[1]
    if not 0 <= y_prev < vocab_size:
        raise ValueError(f"token id {y_prev} outside vocabulary of size {vocab_size}")
    if attention:
        context, alpha = compute_attention(h, z, dec)
    else:
        context, alpha = fixed_context, None
    x = ad.concat([ad.gather_rows(dec.token_embed, [y_prev]), context], axis=1)
    h_new, c_new = lstm_step(x, h, c, dec.wx, dec.wh, dec.b)
    feats = ad.concat([h_new, context], axis=1)
    feats = ad.dropout(feats, dropout_rate, rng, training)
    logits = ad.add(ad.matmul(feats, dec.out_w), dec.out_b)
    return logits, (h_new, c_new), alpha


def sequence_loss(target_ids: list[int], z: Tensor, init_state: tuple, dec: DecoderParams,
                  vocab: Vocabulary, rng=None, training: bool = True,
                  dropout_rate: float = 0.5, attention: bool = True,
                  fixed_context: Tensor | None = None) -> Tensor:
    """Teacher-forced mean negative log-likelihood per target token.

    The step count includes the end-of-sequence emission, so a uniform model
    over a vocabulary of size n scores ln(n) regardless of target length.
    """
    if not target_ids:
        raise ValueError("target must be non-empty")
    state = init_state
    inputs = [vocab.sos_id] + list(target_ids)
    outputs = list(target_ids) + [vocab.eos_id]
    step_losses = []
    for y_prev, y_true in zip(inputs, outputs):
        logits, state, _ = decode_step(state, y_prev, z, dec, rng=rng, training=training,
                                       dropout_rate=dropout_rate, attention=attention,
                                       fixed_context=fixed_context)
        logp = ad.log_softmax(logits)
        step_losses.append(ad.neg(ad.get_element(logp, 0, y_true)))
    return ad.scale(ad.add_n(step_losses), 1.0 / len(step_losses))


def _step_logprobs(state, y_prev, z, dec, attention, fixed_context) -> tuple[np.ndarray, tuple]:
    logits, new_state, _ = decode_step(state, y_prev, z, dec, training=False,
                                       attention=attention, fixed_context=fixed_context)
    x = logits.data.reshape(-1)
    shifted = x - x.max()
    logp = shifted - math.log(np.exp(shifted).sum())
    return logp, new_state


def beam_search(z: Tensor, init_state: tuple, dec: DecoderParams, vocab: Vocabulary,
                beam: int = 5, max_len: int = 40, attention: bool = True,
                fixed_context: Tensor | None = None) -> list[int]:
    """Length-bounded beam search over end-of-sequence-terminated hypotheses.

    Only regular tokens and the end token can be emitted. Returns the token
    ids of the best completed hypothesis; if nothing completes within
    ``max_len`` steps, the best running prefix. Ties in log-prob go to the
    lexicographically smaller token-id sequence, so results are fully
    deterministic. ``beam=1`` is greedy decoding.
    """
    if beam < 1 or max_len < 1:
        raise ValueError(f"beam and max_len must be >= 1, got beam={beam}, max_len={max_len}")
    regular = [tok for tok in vocab.emittable_ids() if tok != vocab.eos_id]
    eos = vocab.eos_id

    with ad.no_grad():
        live = [Hypothesis(tokens=(), log_prob=0.0, state=init_state)]
        completed: list[Hypothesis] = []
        while live:
            candidates = []
            for hyp in live:
                y_prev = hyp.tokens[-1] if hyp.tokens else vocab.sos_id
                logp, new_state = _step_logprobs(hyp.state, y_prev, z, dec, attention, fixed_context)
                completed.append(Hypothesis(hyp.tokens, hyp.log_prob + float(logp[eos]), new_state))
                if len(hyp.tokens) < max_len:
                    for tok in regular:
                        candidates.append(Hypothesis(hyp.tokens + (tok,),
                                                     hyp.log_prob + float(logp[tok]), new_state))
            if not candidates:
                break
            candidates.sort(key=lambda h: (-h.log_prob, h.tokens))
            live = candidates[:beam]
            best_done = max(completed, key=lambda h: h.log_prob)
            if live[0].log_prob < best_done.log_prob:
                break  # no live prefix can recover: log-probs only decrease
        pool = completed if completed else live
        best = min(pool, key=lambda h: (-h.log_prob, h.tokens))
        return list(best.tokens)


def greedy_decode(z: Tensor, init_state: tuple, dec: DecoderParams, vocab: Vocabulary,
                  max_len: int = 40, attention: bool = True,
                  fixed_context: Tensor | None = None) -> list[int]:
    return beam_search(z, init_state, dec, vocab, beam=1, max_len=max_len,
                       attention=attention, fixed_context=fixed_context)
