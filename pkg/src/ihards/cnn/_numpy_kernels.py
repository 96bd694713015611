"""Pure numpy implementations of the hot kernels (fallback backend)."""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv1d_forward(x, w, b):
    # x [B, L, C], w [K, C, F] -> [B, L-K+1, F]
    k = w.shape[0]
    win = sliding_window_view(x, k, axis=1)  # [B, T, C, K]
    out = np.tensordot(win, w, axes=((3, 2), (0, 1)))
    out += b
    return out


def conv1d_backward(g, x, w):
    k = w.shape[0]
    t = g.shape[1]
    win = sliding_window_view(x, k, axis=1)  # [B, T, C, K]
    gw = np.tensordot(win, g, axes=((0, 1), (0, 1)))  # [C, K, F]
    gw = np.ascontiguousarray(gw.transpose(1, 0, 2))
    gb = g.sum(axis=(0, 1))
    gx = np.zeros_like(x)
    for i in range(k):
        gx[:, i : i + t, :] += g @ w[i].T
    return gx, gw, gb


def maxpool1d_forward(x, pool):
    bsz, length, ch = x.shape
    n = length // pool
    win = x[:, : n * pool, :].reshape(bsz, n, pool, ch)
    arg = win.argmax(axis=2)
    out = np.take_along_axis(win, arg[:, :, None, :], axis=2)[:, :, 0, :]
    return out, arg


def maxpool1d_backward(g, arg, pool, length):
    bsz, n, ch = g.shape
    gx = np.zeros((bsz, length, ch), dtype=g.dtype)
    win = gx[:, : n * pool, :].reshape(bsz, n, pool, ch)
    np.put_along_axis(win, arg[:, :, None, :], g[:, :, None, :], axis=2)
    return gx
