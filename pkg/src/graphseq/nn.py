"""Small recurrent building block shared by the encoder and decoder."""

from __future__ import annotations

from . import autodiff as ad

__all__ = ["lstm_step"]


def lstm_step(x, h, c, wx, wh, b):
    """One LSTM cell step; gate blocks are ordered input, forget, output, candidate.

    ``x`` is [1, in], ``h``/``c`` are [1, hidden]; weights map to [*, 4*hidden].
    Returns the new (h, c).
    """
    hidden = h.shape[1]
    gates = ad.add(ad.add(ad.matmul(x, wx), ad.matmul(h, wh)), b)
    i = ad.sigmoid(ad.slice_cols(gates, 0, hidden))
    f = ad.sigmoid(ad.slice_cols(gates, hidden, 2 * hidden))
    o = ad.sigmoid(ad.slice_cols(gates, 2 * hidden, 3 * hidden))
    g = ad.tanh(ad.slice_cols(gates, 3 * hidden, 4 * hidden))
    c_new = ad.add(ad.mul(f, c), ad.mul(i, g))
    h_new = ad.mul(o, ad.tanh(c_new))
    return h_new, c_new
