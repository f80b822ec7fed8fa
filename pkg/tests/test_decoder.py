import math

import numpy as np
import numpy.testing as npt
import pytest

from graphseq import autodiff as ad
from graphseq.decoder import (DecoderParams, beam_search, compute_attention, decode_step,
                              greedy_decode, sequence_loss)
from graphseq.optim import ParamSet, adam_step
from graphseq.rng import Rng
from graphseq.vocab import Vocabulary


def make_decoder(vocab, feat=4, ctx=6, hidden=6, seed=1):
    params = ParamSet()
    embed = params.add("embed", Rng(seed).uniform(-0.1, 0.1, (len(vocab), feat)))
    dec = DecoderParams(params, Rng(seed + 1), len(vocab), embed,
                        ctx_dim=ctx, hidden=hidden, align_dim=hidden)
    return params, dec


VOCAB = Vocabulary(["a", "b", "c"])


def logprobs_of(logits):
    x = logits.data.reshape(-1)
    x = x - x.max()
    return x - math.log(np.exp(x).sum())


def score_sequence(z, state0, dec, vocab, tokens):
    """Independent scorer: teacher-forced sum of step log-probs incl. EOS."""
    state = state0
    total = 0.0
    with ad.no_grad():
        for y_prev, y in zip([vocab.sos_id] + tokens, tokens + [vocab.eos_id]):
            logits, state, _ = decode_step(state, y_prev, z, dec, training=False)
            total += float(logprobs_of(logits)[y])
    return total


def brute_force_best(z, state0, dec, vocab, max_len):
    """Exhaustive, completed-preferred argmax over all decodable sequences."""
    emit = [t for t in vocab.emittable_ids() if t != vocab.eos_id]
    completed = []

    def recurse(state, y_prev, tokens, lp):
        with ad.no_grad():
            logits, new_state, _ = decode_step(state, y_prev, z, dec, training=False)
        logp = logprobs_of(logits)
        completed.append((lp + float(logp[vocab.eos_id]), tuple(tokens)))
        if len(tokens) < max_len:
            for t in emit:
                recurse(new_state, t, tokens + [t], lp + float(logp[t]))

    recurse(state0, vocab.sos_id, [], 0.0)
    best = min(completed, key=lambda c: (-c[0], c[1]))
    return list(best[1])


class TestAttention:
    def test_single_node_context_is_that_node(self):
        params, dec = make_decoder(VOCAB)
        z = ad.Tensor(Rng(3).uniform(-1, 1, (1, 6)))
        s = ad.Tensor(Rng(4).uniform(-1, 1, (1, 6)))
        context, alpha = compute_attention(s, z, dec)
        npt.assert_allclose(alpha.data, [[1.0]], rtol=0, atol=0)
        npt.assert_allclose(context.data, z.data, rtol=0, atol=1e-15)

    def test_identical_embeddings_split_evenly(self):
        params, dec = make_decoder(VOCAB)
        row = Rng(5).uniform(-1, 1, (1, 6))
        z = ad.Tensor(np.vstack([row, row]))
        s = ad.Tensor(Rng(6).uniform(-1, 1, (1, 6)))
        _, alpha = compute_attention(s, z, dec)
        npt.assert_allclose(alpha.data, [[0.5], [0.5]], rtol=0, atol=1e-15)

    def test_matches_scalar_oracle(self):
        params, dec = make_decoder(VOCAB, seed=9)
        rng = Rng(9)
        z = rng.uniform(-1, 1, (3, 6))
        s = rng.uniform(-1, 1, (1, 6))
        context, alpha = compute_attention(ad.Tensor(s), ad.Tensor(z), dec)
        scores = []
        for j in range(3):
            pre = s[0] @ dec.attn_w.data + z[j] @ dec.attn_u.data
            scores.append(float(np.tanh(pre) @ dec.attn_v.data[:, 0]))
        exps = [math.exp(v - max(scores)) for v in scores]
        weights = [e / sum(exps) for e in exps]
        expected_ctx = sum(w * z[j] for j, w in enumerate(weights))
        npt.assert_allclose(alpha.data[:, 0], weights, rtol=0, atol=1e-12)
        npt.assert_allclose(context.data[0], expected_ctx, rtol=0, atol=1e-12)

    def test_weights_are_probabilities_each_step(self):
        params, dec = make_decoder(VOCAB)
        z = ad.Tensor(Rng(12).uniform(-3, 3, (7, 6)))
        state = (ad.zeros((1, 6)), ad.zeros((1, 6)))
        for tok in VOCAB.encode(["a", "b", "c"]):
            _, state, alpha = decode_step(state, tok, z, dec, training=False)
            assert (alpha.data >= 0).all()
            assert abs(alpha.data.sum() - 1.0) <= 1e-12


class TestDecodeStep:
    def test_logits_shape(self):
        params, dec = make_decoder(VOCAB)
        z = ad.Tensor(Rng(2).uniform(-1, 1, (4, 6)))
        state = (ad.zeros((1, 6)), ad.zeros((1, 6)))
        logits, _, _ = decode_step(state, VOCAB.lookup("a"), z, dec, training=False)
        assert logits.shape == (1, len(VOCAB))

    def test_inference_deterministic(self):
        params, dec = make_decoder(VOCAB)
        z = ad.Tensor(Rng(2).uniform(-1, 1, (4, 6)))
        state = (ad.zeros((1, 6)), ad.zeros((1, 6)))
        a, _, _ = decode_step(state, 7, z, dec, training=False)
        b, _, _ = decode_step(state, 7, z, dec, training=False)
        assert (a.data == b.data).all()

    def test_matches_scalar_oracle(self):
        params, dec = make_decoder(VOCAB, feat=3, ctx=4, hidden=4, seed=21)
        rng = Rng(30)
        z = rng.uniform(-1, 1, (2, 4))
        h = rng.uniform(-0.5, 0.5, (1, 4))
        c = rng.uniform(-0.5, 0.5, (1, 4))
        tok = VOCAB.lookup("b")
        logits, (h2, c2), _ = decode_step((ad.Tensor(h), ad.Tensor(c)), tok,
                                          ad.Tensor(z), dec, training=False)

        def sig(v):
            return 1.0 / (1.0 + np.exp(-v))

        scores = np.array([np.tanh(h[0] @ dec.attn_w.data + z[j] @ dec.attn_u.data)
                           @ dec.attn_v.data[:, 0] for j in range(2)])
        e = np.exp(scores - scores.max())
        w = e / e.sum()
        ctx = w[0] * z[0] + w[1] * z[1]
        x = np.concatenate([dec.token_embed.data[tok], ctx])
        gates = x @ dec.wx.data + h[0] @ dec.wh.data + dec.b.data
        i, f, o, g = np.split(gates, 4)
        c_new = sig(f) * c[0] + sig(i) * np.tanh(g)
        h_new = sig(o) * np.tanh(c_new)
        feats = np.concatenate([h_new, ctx])
        expected = feats @ dec.out_w.data + dec.out_b.data
        npt.assert_allclose(c2.data[0], c_new, rtol=0, atol=1e-12)
        npt.assert_allclose(h2.data[0], h_new, rtol=0, atol=1e-12)
        npt.assert_allclose(logits.data[0], expected, rtol=0, atol=1e-12)

    def test_out_of_vocab_token_rejected(self):
        params, dec = make_decoder(VOCAB)
        z = ad.Tensor(np.zeros((1, 6)))
        state = (ad.zeros((1, 6)), ad.zeros((1, 6)))
        with pytest.raises(ValueError, match="vocabulary"):
            decode_step(state, len(VOCAB), z, dec, training=False)


class TestSequenceLoss:
    def test_uniform_model_scores_log_vocab(self):
        params, dec = make_decoder(VOCAB)
        dec.out_w.data[:] = 0.0
        dec.out_b.data[:] = 0.0
        z = ad.Tensor(Rng(2).uniform(-1, 1, (3, 6)))
        state = (ad.zeros((1, 6)), ad.zeros((1, 6)))
        for target in (["a"], ["a", "b"], ["c", "c", "b", "a"]):
            loss = sequence_loss(VOCAB.encode(target), z, state, dec, VOCAB, training=False)
            assert loss.item() == pytest.approx(math.log(len(VOCAB)), rel=1e-12)

    def test_loss_nonnegative(self):
        params, dec = make_decoder(VOCAB, seed=14)
        z = ad.Tensor(Rng(15).uniform(-2, 2, (3, 6)))
        state = (ad.zeros((1, 6)), ad.zeros((1, 6)))
        loss = sequence_loss(VOCAB.encode(["b", "a"]), z, state, dec, VOCAB, training=False)
        assert loss.item() >= 0.0

    def test_fifty_steps_overfit_one_sequence(self):
        params, dec = make_decoder(VOCAB, seed=3)
        zdata = Rng(4).uniform(-1, 1, (3, 6))
        target = VOCAB.encode(["b", "c", "a"])

        def loss_value():
            z = ad.Tensor(zdata)
            state = (ad.zeros((1, 6)), ad.zeros((1, 6)))
            return sequence_loss(target, z, state, dec, VOCAB, training=False)

        first = loss_value().item()
        for _ in range(50):
            loss = loss_value()
            ad.backward(loss, params)
            adam_step(params, 0.01)
        assert loss_value().item() < first


class TestBeamSearch:
    def setup_state(self, seed, vocab=VOCAB, ctx=6, hidden=6):
        params, dec = make_decoder(vocab, ctx=ctx, hidden=hidden, seed=seed)
        rng = Rng(seed + 100)
        z = ad.Tensor(rng.uniform(-2, 2, (3, ctx)))
        state = (ad.Tensor(rng.uniform(-1, 1, (1, hidden))), ad.zeros((1, hidden)))
        return dec, z, state

    def test_beam_one_equals_greedy(self):
        for seed in range(5):
            dec, z, state = self.setup_state(seed)
            a = beam_search(z, state, dec, VOCAB, beam=1, max_len=6)
            b = greedy_decode(z, state, dec, VOCAB, max_len=6)
            assert a == b

    def test_beam_matches_brute_force(self):
        for seed in range(30):
            dec, z, state = self.setup_state(seed)
            best = brute_force_best(z, state, dec, VOCAB, max_len=2)
            found = beam_search(z, state, dec, VOCAB, beam=5, max_len=2)
            assert found == best

    def test_hand_built_model_where_greedy_fails(self):
        # step 1 slightly prefers "a", but only "b" opens the door to a
        # near-certain <EOS>; the best sequence is ["b"] and greedy misses it
        params, dec = make_decoder(VOCAB, feat=4, ctx=4, hidden=4, seed=0)
        hid = 4
        dec.token_embed.data[:] = 0.0
        dec.token_embed.data[VOCAB.lookup("b"), 0] = 10.0
        dec.wh.data[:] = 0.0
        dec.b.data[:] = 0.0
        dec.wx.data[:] = 0.0
        dec.wx.data[0, 0] = 1.0            # input gate, coord 0
        dec.wx.data[0, 2 * hid] = 1.0      # output gate, coord 0
        dec.wx.data[0, 3 * hid] = 1.0      # candidate, coord 0
        dec.out_w.data[:] = 0.0
        dec.out_w.data[0, VOCAB.eos_id] = 20.0
        dec.out_b.data[:] = -5.0
        dec.out_b.data[VOCAB.lookup("a")] = 0.1
        dec.out_b.data[VOCAB.lookup("b")] = 0.0
        z = ad.Tensor(np.zeros((1, 4)))
        state = (ad.zeros((1, 4)), ad.zeros((1, 4)))
        best = brute_force_best(z, state, dec, VOCAB, max_len=2)
        assert best == [VOCAB.lookup("b")]
        greedy = greedy_decode(z, state, dec, VOCAB, max_len=2)
        assert greedy != best
        found = beam_search(z, state, dec, VOCAB, beam=5, max_len=2)
        assert found == best

    def test_output_respects_max_len(self):
        for seed in range(5):
            dec, z, state = self.setup_state(seed)
            for max_len in (1, 2, 4):
                out = beam_search(z, state, dec, VOCAB, beam=5, max_len=max_len)
                assert len(out) <= max_len

    def test_beam_monotonicity(self):
        for seed in range(10):
            dec, z, state = self.setup_state(seed)
            scores = []
            for k in (1, 2, 5):
                tokens = beam_search(z, state, dec, VOCAB, beam=k, max_len=5)
                scores.append(score_sequence(z, state, dec, VOCAB, VOCAB.encode(tokens)))
            assert scores[1] >= scores[0] - 1e-12
            assert scores[2] >= scores[1] - 1e-12

    def test_specials_never_emitted(self):
        for seed in range(5):
            dec, z, state = self.setup_state(seed)
            out = beam_search(z, state, dec, VOCAB, beam=3, max_len=8)
            assert all(t >= 7 for t in out)  # only regular-token ids

    def test_invalid_parameters(self):
        dec, z, state = self.setup_state(0)
        with pytest.raises(ValueError):
            beam_search(z, state, dec, VOCAB, beam=0, max_len=3)
        with pytest.raises(ValueError):
            beam_search(z, state, dec, VOCAB, beam=2, max_len=0)


def test_loss_gradcheck_through_attention_and_lstm():
    from helpers import gradcheck
    params, dec = make_decoder(VOCAB, feat=3, ctx=4, hidden=4, seed=8)
    zdata = Rng(44).uniform(-1, 1, (3, 4))
    target = VOCAB.encode(["a", "c"])

    def make_loss():
        z = ad.Tensor(zdata)
        state = (ad.zeros((1, 4)), ad.zeros((1, 4)))
        return sequence_loss(target, z, state, dec, VOCAB, training=False)

    assert gradcheck(make_loss, params) < 1e-6
