"""Empirical scaling checks for the convolution and dense kernels.

Convolution cost is O(n k d f) for input length n, kernel size k, input
channels d and filters f; a dense layer costs O(s i j) for s samples and an
i -> j weight matrix, and a stack trained for e epochs costs
O(e s (ij + jk + kl)). Doubling any single factor should roughly double the
runtime. Each factor is timed as the median of several trials.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .cnn import backend, ops

RATIO_BAND = (1.5, 3.0)
# weights stay L1-resident even after doubling (k*d*f*8 bytes <= 16 KiB)
CONV_BASE = {"n": 1024, "k": 4, "d": 4, "f": 64}
DENSE_BASE = {"s": 256, "i": 512, "j": 256}
STACK_WIDTHS = (256, 128, 64, 5)


@dataclass
class FactorResult:
    group: str
    factor: str
    base_seconds: float
    doubled_seconds: float

    @property
    def ratio(self):
        return self.doubled_seconds / self.base_seconds

    @property
    def ok(self):
        return RATIO_BAND[0] <= self.ratio <= RATIO_BAND[1]


def _median_time(fn, number, trials):
    times = []
    for _ in range(trials):
        t0 = time.perf_counter()
        for _ in range(number):
            fn()
        times.append((time.perf_counter() - t0) / number)
    return float(np.median(times))


def _calibrate(fn, target=0.05):
    fn()
    number = 1
    while True:
        t0 = time.perf_counter()
        for _ in range(number):
            fn()
        if time.perf_counter() - t0 >= target or number >= 1 << 16:
            return number
        number *= 2


def _conv_job(kern, n, k, d, f, batch=8, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((batch, n, d))
    w = rng.standard_normal((k, d, f))
    b = rng.standard_normal(f)
    return lambda: kern.conv1d_forward(x, w, b)


def _dense_job(s, i, j, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((s, i))
    w = rng.standard_normal((i, j))
    b = rng.standard_normal(j)

    def run():
        y = ops.dense_affine(x, w, b)
        ops.dense_backward(y, x, w)

    return run


def _stack_job(s, widths, epochs, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((s, widths[0]))
    ws = [rng.standard_normal((a, b)) * 0.05 for a, b in zip(widths, widths[1:])]
    bs = [np.zeros(b) for b in widths[1:]]

    def run():
        for _ in range(epochs):
            h, cache = x, []
            for w, b in zip(ws, bs):
                cache.append(h)
                h = ops.dense_affine(h, w, b)
            g = h
            for w, hin in zip(reversed(ws), reversed(cache)):
                g, _, _ = ops.dense_backward(g, hin, w)

    return run


def _pair(group, factor, make_base, make_doubled, trials):
    base, doubled = make_base(), make_doubled()
    number = _calibrate(base)
    doubled()
    tb, td = [], []
    # alternate the two jobs so clock drift hits both equally
    for _ in range(trials):
        tb.append(_median_time(base, number, 1))
        td.append(_median_time(doubled, number, 1))
    return FactorResult(group, factor, float(np.median(tb)), float(np.median(td)))


def run_scaling(trials=5, kernel_backend=None):
    kern = backend.get(kernel_backend or backend.BACKEND)
    results = []
    with threadpool_limits(limits=1):
        warm = _conv_job(kern, **CONV_BASE)
        t_end = time.perf_counter() + 0.3
        while time.perf_counter() < t_end:
            warm()
        for factor in ("n", "k", "d", "f"):
            dbl = dict(CONV_BASE, **{factor: CONV_BASE[factor] * 2})
            results.append(
                _pair(
                    "conv1d",
                    factor,
                    lambda: _conv_job(kern, **CONV_BASE),
                    lambda dbl=dbl: _conv_job(kern, **dbl),
                    trials,
                )
            )
        for factor in ("s", "i", "j"):
            dbl = dict(DENSE_BASE, **{factor: DENSE_BASE[factor] * 2})
            results.append(
                _pair(
                    "dense",
                    factor,
                    lambda: _dense_job(**DENSE_BASE),
                    lambda dbl=dbl: _dense_job(**dbl),
                    trials,
                )
            )
        s = DENSE_BASE["s"]
        results.append(
            _pair(
                "dense_stack",
                "s",
                lambda: _stack_job(s, STACK_WIDTHS, 1),
                lambda: _stack_job(2 * s, STACK_WIDTHS, 1),
                trials,
            )
        )
        results.append(
            _pair(
                "dense_stack",
                "e",
                lambda: _stack_job(s, STACK_WIDTHS, 1),
                lambda: _stack_job(s, STACK_WIDTHS, 2),
                trials,
            )
        )
    return results


def conv_boundary(kernel_backend=None):
    """Kernel as long as the input: one output position, must not fail."""
    kern = backend.get(kernel_backend or backend.BACKEND)
    x = np.ones((2, 16, 3))
    w = np.ones((16, 3, 4))
    out = kern.conv1d_forward(x, w, np.zeros(4))
    return out.shape


def compare_backends(trials=5, batch=64, n=571, filters=32, kernel=7):
    """Time conv1d forward/backward and maxpool on each available backend."""
    rng = np.random.default_rng(0)
    x = rng.standard_normal((batch, n, 1)).astype(np.float32)
    w = rng.standard_normal((kernel, 1, filters)).astype(np.float32)
    b = np.zeros(filters, dtype=np.float32)
    rows = []
    with threadpool_limits(limits=1):
        for name in backend.available():
            kern = backend.get(name)
            out = kern.conv1d_forward(x, w, b)
            jobs = {
                "conv1d_forward": lambda kern=kern: kern.conv1d_forward(x, w, b),
                "conv1d_backward": lambda kern=kern, out=out: kern.conv1d_backward(out, x, w),
                "maxpool1d_forward": lambda kern=kern, out=out: kern.maxpool1d_forward(out, 2),
            }
            for op, fn in jobs.items():
                number = _calibrate(fn)
                rows.append((name, op, _median_time(fn, number, trials)))
    return rows


def format_scaling(results, kernel_backend=None):
    lines = ["# scaling check: doubling one factor, ratio band %.1f-%.1f" % RATIO_BAND]
    lines.append(f"backend={kernel_backend or backend.BACKEND}")
    for r in results:
        verdict = "linear" if r.ok else "NOT-linear"
        lines.append(
            f"{r.group}.{r.factor}: base={r.base_seconds:.6f}s doubled={r.doubled_seconds:.6f}s "
            f"ratio={r.ratio:.3f} verdict={verdict}"
        )
    lines.append(f"overall={'PASS' if all(r.ok for r in results) else 'FAIL'}")
    return "\n".join(lines) + "\n"


def format_comparison(rows):
    lines = ["# backend comparison (median seconds per call)"]
    for name, op, secs in rows:
        lines.append(f"{name}.{op}={secs:.6f}")
    return "\n".join(lines) + "\n"
