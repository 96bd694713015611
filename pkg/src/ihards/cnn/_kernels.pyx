# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled conv1d / maxpool1d kernels (channels-last, valid padding, stride 1).

The convolution loops are plain C with ``restrict`` pointers so the
innermost filter loop vectorises; loop order is fixed, so results are
bit-reproducible from run to run.
"""

import numpy as np

cimport numpy as cnp
from cython cimport floating

cnp.import_array()

cdef extern from *:
    """
    #define IHARDS_CONV_KERNELS(T, SUFFIX)                                           \\
    static void conv_fwd_##SUFFIX(const T *restrict x, const T *restrict w,          \\
                                  const T *restrict b, T *restrict out,              \\
                                  Py_ssize_t B, Py_ssize_t L, Py_ssize_t C,          \\
                                  Py_ssize_t K, Py_ssize_t F) {                      \\
        Py_ssize_t T_ = L - K + 1;                                                   \\
        for (Py_ssize_t bi = 0; bi < B; bi++) {                                      \\
            for (Py_ssize_t t = 0; t < T_; t++) {                                    \\
                T *restrict o = out + (bi * T_ + t) * F;                             \\
                const T *restrict xw = x + (bi * L + t) * C;                         \\
                for (Py_ssize_t f = 0; f < F; f++) o[f] = b[f];                      \\
                for (Py_ssize_t ic = 0; ic < K * C; ic++) {                          \\
                    T xv = xw[ic];                                                   \\
                    const T *restrict wr = w + ic * F;                               \\
                    for (Py_ssize_t f = 0; f < F; f++) o[f] += xv * wr[f];           \\
                }                                                                    \\
            }                                                                        \\
        }                                                                            \\
    }                                                                                \\
    static void conv_bwd_##SUFFIX(const T *restrict g, const T *restrict x,          \\
                                  const T *restrict w, T *restrict gx,               \\
                                  T *restrict gw, T *restrict gb,                    \\
                                  Py_ssize_t B, Py_ssize_t L, Py_ssize_t C,          \\
                                  Py_ssize_t K, Py_ssize_t F) {                      \\
        Py_ssize_t T_ = L - K + 1;                                                   \\
        for (Py_ssize_t bi = 0; bi < B; bi++) {                                      \\
            for (Py_ssize_t t = 0; t < T_; t++) {                                    \\
                const T *restrict gr = g + (bi * T_ + t) * F;                        \\
                const T *restrict xw = x + (bi * L + t) * C;                         \\
                T *restrict gxw = gx + (bi * L + t) * C;                             \\
                for (Py_ssize_t f = 0; f < F; f++) gb[f] += gr[f];                   \\
                for (Py_ssize_t ic = 0; ic < K * C; ic++) {                          \\
                    T xv = xw[ic];                                                   \\
                    T *restrict gwr = gw + ic * F;                                   \\
                    const T *restrict wr = w + ic * F;                               \\
                    for (Py_ssize_t f = 0; f < F; f++) gwr[f] += xv * gr[f];         \\
                    /* eight fixed lanes: vectorisable, summation order fixed */     \\
                    T lane[8] = {0, 0, 0, 0, 0, 0, 0, 0};                            \\
                    Py_ssize_t f = 0;                                                \\
                    for (; f + 8 <= F; f += 8)                                       \\
                        for (int q = 0; q < 8; q++) lane[q] += gr[f + q] * wr[f + q];\\
                    T acc = ((lane[0] + lane[1]) + (lane[2] + lane[3]))              \\
                          + ((lane[4] + lane[5]) + (lane[6] + lane[7]));             \\
                    for (; f < F; f++) acc += gr[f] * wr[f];                         \\
                    gxw[ic] += acc;                                                  \\
                }                                                                    \\
            }                                                                        \\
        }                                                                            \\
    }
    IHARDS_CONV_KERNELS(float, f32)
    IHARDS_CONV_KERNELS(double, f64)
    """
    void conv_fwd_f32(const float *x, const float *w, const float *b, float *out,
                      Py_ssize_t B, Py_ssize_t L, Py_ssize_t C, Py_ssize_t K, Py_ssize_t F) nogil
    void conv_fwd_f64(const double *x, const double *w, const double *b, double *out,
                      Py_ssize_t B, Py_ssize_t L, Py_ssize_t C, Py_ssize_t K, Py_ssize_t F) nogil
    void conv_bwd_f32(const float *g, const float *x, const float *w, float *gx, float *gw,
                      float *gb, Py_ssize_t B, Py_ssize_t L, Py_ssize_t C, Py_ssize_t K,
                      Py_ssize_t F) nogil
    void conv_bwd_f64(const double *g, const double *x, const double *w, double *gx, double *gw,
                      double *gb, Py_ssize_t B, Py_ssize_t L, Py_ssize_t C, Py_ssize_t K,
                      Py_ssize_t F) nogil


def conv1d_forward(floating[:, :, ::1] x, floating[:, :, ::1] w, floating[::1] b):
    cdef Py_ssize_t B = x.shape[0], L = x.shape[1], C = x.shape[2]
    cdef Py_ssize_t K = w.shape[0], F = w.shape[2]
    dtype = np.float32 if floating is float else np.float64
    out_arr = np.empty((B, L - K + 1, F), dtype=dtype)
    cdef floating[:, :, ::1] out = out_arr
    if B == 0 or L - K + 1 <= 0 or F == 0:
        return out_arr
    with nogil:
        if floating is float:
            conv_fwd_f32(&x[0, 0, 0], &w[0, 0, 0], &b[0], &out[0, 0, 0], B, L, C, K, F)
        else:
            conv_fwd_f64(&x[0, 0, 0], &w[0, 0, 0], &b[0], &out[0, 0, 0], B, L, C, K, F)
    return out_arr


def conv1d_backward(floating[:, :, ::1] g, floating[:, :, ::1] x, floating[:, :, ::1] w):
    cdef Py_ssize_t B = x.shape[0], L = x.shape[1], C = x.shape[2]
    cdef Py_ssize_t K = w.shape[0], F = w.shape[2]
    dtype = np.float32 if floating is float else np.float64
    gx_arr = np.zeros((B, L, C), dtype=dtype)
    gw_arr = np.zeros((K, C, F), dtype=dtype)
    gb_arr = np.zeros(F, dtype=dtype)
    cdef floating[:, :, ::1] gx = gx_arr
    cdef floating[:, :, ::1] gw = gw_arr
    cdef floating[::1] gb = gb_arr
    if B == 0 or g.shape[1] == 0 or F == 0:
        return gx_arr, gw_arr, gb_arr
    with nogil:
        if floating is float:
            conv_bwd_f32(&g[0, 0, 0], &x[0, 0, 0], &w[0, 0, 0], &gx[0, 0, 0], &gw[0, 0, 0],
                         &gb[0], B, L, C, K, F)
        else:
            conv_bwd_f64(&g[0, 0, 0], &x[0, 0, 0], &w[0, 0, 0], &gx[0, 0, 0], &gw[0, 0, 0],
                         &gb[0], B, L, C, K, F)
    return gx_arr, gw_arr, gb_arr


def maxpool1d_forward(floating[:, :, ::1] x, Py_ssize_t pool):
    cdef Py_ssize_t B = x.shape[0], L = x.shape[1], C = x.shape[2]
    cdef Py_ssize_t N = L // pool
    dtype = np.float32 if floating is float else np.float64
    out_arr = np.empty((B, N, C), dtype=dtype)
    arg_arr = np.empty((B, N, C), dtype=np.intp)
    cdef floating[:, :, ::1] out = out_arr
    cdef Py_ssize_t[:, :, ::1] arg = arg_arr
    cdef Py_ssize_t bi, n, c, j, best
    cdef floating v, bv
    with nogil:
        for bi in range(B):
            for n in range(N):
                for c in range(C):
                    best = 0
                    bv = x[bi, n * pool, c]
                    for j in range(1, pool):
                        v = x[bi, n * pool + j, c]
                        # strict '>' keeps the first index on ties
                        if v > bv:
                            bv = v
                            best = j
                    out[bi, n, c] = bv
                    arg[bi, n, c] = best
    return out_arr, arg_arr


def maxpool1d_backward(floating[:, :, ::1] g, Py_ssize_t[:, :, ::1] arg, Py_ssize_t pool,
                       Py_ssize_t length):
    cdef Py_ssize_t B = g.shape[0], N = g.shape[1], C = g.shape[2]
    dtype = np.float32 if floating is float else np.float64
    gx_arr = np.zeros((B, length, C), dtype=dtype)
    cdef floating[:, :, ::1] gx = gx_arr
    cdef Py_ssize_t bi, n, c
    with nogil:
        for bi in range(B):
            for n in range(N):
                for c in range(C):
                    gx[bi, n * pool + arg[bi, n, c], c] = g[bi, n, c]
    return gx_arr
