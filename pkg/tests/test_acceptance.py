"""Acceptance criteria, one test each, printing a PASS/FAIL line per criterion."""

import os
import time

import numpy as np
import pytest

from ihards import bench
from ihards.cli import main as cli
from ihards.cnn import backend, ops
from ihards.cnn.arch import ARCHITECTURES, build_architecture, get_arch, layer_plan
from ihards.cnn.checkpoint import checkpoint_load, checkpoint_save
from ihards.cnn.train import TrainConfig, train_model
from ihards.containers import read_ihds, write_ihds
from ihards.drwcc import correlation_matrix, drwcc_prune
from ihards.integrate import standardize_apply, standardize_fit
from ihards.metrics import SCORES, ConfusionMatrix, derive_scores
from ihards.pipeline import default_source_paths, synthetic_integrated

from gradcheck import LAYER_CHECKS, TOL
from test_drwcc import brute_greedy
from test_metrics import counting_oracle


@pytest.fixture
def verdict(capsys):
    def emit(criterion, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
        assert ok, detail

    return emit


def test_c1_gradient_suite(verdict):
    t0 = time.perf_counter()
    worst, cases = {}, 0
    for name in backend.available():
        saved = backend.kernels
        backend.kernels = backend.get(name)
        try:
            for layer, check in LAYER_CHECKS.items():
                errs = [check(np.random.default_rng(seed)) for seed in range(60)]
                cases += len(errs)
                worst[f"{layer}/{name}"] = max(errs)
        finally:
            backend.kernels = saved
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) <= TOL and elapsed < 30
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    verdict(1, ok, f"{cases} cases, worst rel err {max(worst.values()):.2e} <= {TOL} ({detail}); {elapsed:.1f}s < 30s")


def test_c2_drwcc_oracle(verdict):
    t0 = time.perf_counter()
    master = np.random.default_rng(2024)
    mismatches, worst_excess, pruned_any = 0, -np.inf, 0
    for _ in range(200):
        rows = int(master.integers(30, 200))
        latent = master.normal(size=(rows, int(master.integers(1, 8))))
        data = latent @ master.normal(size=(latent.shape[1], 20)) + master.normal(size=(rows, 20)) * master.uniform(
            0.05, 2.0, size=20
        )
        t = float(master.uniform(0.1, 0.95))
        corr = correlation_matrix(data)
        mask = drwcc_prune(corr, t)
        if mask.kept_indices.tolist() != brute_greedy(np.abs(corr.values).tolist(), t):
            mismatches += 1
        kept = np.abs(corr.values)[np.ix_(mask.keep, mask.keep)]
        off = kept[~np.eye(mask.kept_count, dtype=bool)]
        worst_excess = max(worst_excess, float(off.max(initial=0.0)) - t)
        pruned_any += mask.dropped_count > 0
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and worst_excess <= 0 and elapsed < 10
    verdict(
        2,
        ok,
        f"200 matrices ({pruned_any} with drops), {mismatches} oracle mismatches, "
        f"max(kept |r| - threshold) = {worst_excess:.3g} <= 0; {elapsed:.1f}s < 10s",
    )


def test_c3_metric_identities(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    micro_bad = macro_bad = 0
    for _ in range(1000):
        counts = rng.integers(0, 40, size=(5, 5)) * (rng.random((5, 5)) < 0.7)
        if counts.sum() == 0:
            counts[0, 0] = 1
        r = derive_scores(ConfusionMatrix(counts))
        if not (r.micro["prec"] == r.micro["sen"] == r.micro["f1"] == r.accuracy):
            micro_bad += 1
        labels, preds = [], []
        for i in range(5):
            for j in range(5):
                labels += [i] * int(counts[i, j])
                preds += [j] * int(counts[i, j])
        oracle = counting_oracle(labels, preds, 5)
        if any(r.macro[s] != sum(oracle[s]) / 5 for s in SCORES):
            macro_bad += 1
    elapsed = time.perf_counter() - t0
    ok = micro_bad == 0 and macro_bad == 0 and elapsed < 5
    verdict(3, ok, f"1000 matrices, micro identity violations {micro_bad}, macro oracle mismatches {macro_bad}; {elapsed:.1f}s < 5s")


@pytest.fixture(scope="module")
def e2e(tmp_path_factory):
    """Synthetic integrate followed by arch4 training with CLI defaults."""
    root = tmp_path_factory.mktemp("e2e")
    data = root / "d.ihds"
    t0 = time.perf_counter()
    rc1 = cli(["integrate", "--synthetic", "--per-class", "1000", "--sigma", "0.5", "--seed", "7", "--out", str(data)])
    rc2 = cli(["train", "--data", str(data), "--arch", "arch4", "--seed", "9", "--out-dir", str(root / "a")])
    return root, data, (rc1, rc2), time.perf_counter() - t0


def _kv(path):
    return dict(line.split("=", 1) for line in path.read_text().splitlines() if "=" in line)


def test_c4_synthetic_end_to_end(e2e, verdict):
    root, _, codes, elapsed = e2e
    assert codes == (0, 0)
    rep = _kv(root / "a" / "report.txt")
    man = _kv(root / "a" / "manifest.txt")
    accs = [float(rep[f"repeat.{r}.accuracy"]) for r in range(int(rep["repeats"]))]
    settings = (man["epochs"], man["batch_size"], man["lr"])
    ok = settings == ("10", "500", "0.001") and min(accs) >= 0.99 and elapsed < 300
    verdict(
        4,
        ok,
        f"arch4 epochs/batch/lr={'/'.join(settings)}, {len(accs)} repeats, test accuracy "
        f"min {min(accs):.4f} mean {float(rep['repeats.accuracy.mean']):.4f} >= 0.99; {elapsed:.0f}s < 300s",
    )


def test_c5_overfit(verdict):
    t0 = time.perf_counter()
    data = synthetic_integrated(5, 0.5, 5)
    x = standardize_apply(data.features, standardize_fit(data.features)).astype(np.float32)
    res = train_model(x, data.labels, get_arch("arch5"), TrainConfig(epochs=500, batch_size=25, seed=0))
    # one batch per epoch: each curve record is exactly one Adam step's loss
    step_losses = [c["loss"] for c in res.curves]
    first_below = next((i + 1 for i, v in enumerate(step_losses) if v < 1e-3), None)
    infer_loss, _ = ops.softmax_xent(res.checkpoint.model.logits(x).astype(np.float64), data.labels)
    elapsed = time.perf_counter() - t0
    ok = x.shape[0] == 25 and first_below is not None and infer_loss < 1e-3 and elapsed < 60
    verdict(
        5,
        ok,
        f"25 rows, training loss first < 1e-3 at step {first_below} of 500 (dropout active); "
        f"inference-mode loss after 500 steps {infer_loss:.2e} < 1e-3; {elapsed:.1f}s < 60s",
    )


def test_c6_determinism(e2e, verdict):
    root, data, _, _ = e2e
    assert cli(["train", "--data", str(data), "--arch", "arch4", "--seed", "9", "--out-dir", str(root / "b")]) == 0
    names = ("model.ihck", "curves.csv", "report.txt", "confusion.csv")
    same = [(root / "a" / n).read_bytes() == (root / "b" / n).read_bytes() for n in names]
    verdict(6, all(same), ", ".join(f"{n} {'identical' if s else 'DIFFERENT'}" for n, s in zip(names, same)))


def _walk_oracle(spec, n):
    length = n
    for k in spec.conv_kernels:
        length = length - k + 1
    return length, length // 2


def test_c7_shapes_and_formats(tmp_path, verdict):
    shape_bad = 0
    for name, spec in ARCHITECTURES.items():
        for n in range(16, 1025):
            layers = layer_plan(spec, n)
            shape, conv_len, pool_len = (n, 1), None, None
            expect_conv, expect_pool = _walk_oracle(spec, n)
            for layer in layers:
                shape = layer.output_shape(shape)
                if layer.kind == "conv1d":
                    conv_len = shape[0]
                elif layer.kind == "maxpool1d":
                    pool_len = shape[0]
            shape_bad += (conv_len, pool_len, shape) != (expect_conv, expect_pool, (5,))
    forward_bad = 0
    for spec in ARCHITECTURES.values():
        for n in (16, 17, 571, 1024):
            forward_bad += build_architecture(spec, n).logits(np.zeros((2, n), np.float32)).shape != (2, 5)

    data = synthetic_integrated(20, 0.5, 1)
    x = standardize_apply(data.features, standardize_fit(data.features)).astype(np.float32)
    ckpt_same = True
    for name in ARCHITECTURES:
        res = train_model(x, data.labels, get_arch(name), TrainConfig(epochs=1, batch_size=50, seed=1))
        a, b = tmp_path / f"{name}.a", tmp_path / f"{name}.b"
        checkpoint_save(res.checkpoint, a)
        checkpoint_save(checkpoint_load(a), b)
        ckpt_same &= a.read_bytes() == b.read_bytes()

    special = np.array(
        [0.0, -0.0, 1e-45, -1e-45, 3.4028235e38, -3.4028235e38, 1.1754944e-38, np.pi, -1.5, 7.0],
        dtype=np.float32,
    )
    feats = np.concatenate([data.features[:100, :10], special[None, :]]).astype(np.float32)
    labels = np.concatenate([data.labels[:100], [4]])
    write_ihds(tmp_path / "d.ihds", feats, labels)
    fx, fy = read_ihds(tmp_path / "d.ihds")
    ihds_same = fx.tobytes() == feats.tobytes() and fy.tolist() == labels.tolist()

    ok = shape_bad == 0 and forward_bad == 0 and ckpt_same and ihds_same
    verdict(
        7,
        ok,
        f"5 archs x sizes 16..1024 shape mismatches {shape_bad}, forward mismatches {forward_bad}; "
        f"checkpoint save/load/save identical={ckpt_same}; IHDS f32 lossless={ihds_same}",
    )


REQUIRED_FACTORS = {("conv1d", "n"), ("conv1d", "k"), ("conv1d", "f"), ("dense", "i"), ("dense", "j")}


def test_c8_scaling(verdict):
    results = bench.run_scaling(trials=5, kernel_backend=backend.BACKEND)
    got = {(r.group, r.factor): r for r in results}
    assert REQUIRED_FACTORS <= set(got)
    ok = all(r.ok for r in results)
    detail = ", ".join(f"{r.group}.{r.factor} {r.ratio:.2f}" for r in results)
    verdict(8, ok, f"backend {backend.BACKEND}, median of 5, band {bench.RATIO_BAND}: {detail}")


def _real_data_available():
    paths = default_source_paths()
    return bool(paths) and all(os.path.exists(p) for p in paths.values())


@pytest.mark.realdata
@pytest.mark.skipif(not _real_data_available(), reason="IHARDS_DATA_DIR with the three datasets not set")
def test_c9_real_data(tmp_path, verdict):
    t0 = time.perf_counter()
    data = tmp_path / "real.ihds"
    assert cli(["integrate", "--per-class", "5000", "--seed", "0", "--out", str(data)]) == 0
    kept = {}
    for t in ("0.5", "0.9"):
        out = tmp_path / f"m{t}.txt"
        assert cli(["analyze", "--data", str(data), "--threshold", t, "--fit-on-all", "--out", str(out)]) == 0
        kept[t] = int(_kv(out)["kept_count"])
    assert cli(["train", "--data", str(data), "--arch", "arch1", "--repeats", "1", "--out-dir", str(tmp_path / "r")]) == 0
    acc = float(_kv(tmp_path / "r" / "report.txt")["accuracy"])
    elapsed = time.perf_counter() - t0
    ok = acc >= 0.999 and elapsed < 1800
    verdict(
        9,
        ok,
        f"arch1 test accuracy {acc:.5f} >= 0.999; kept columns {kept['0.5']} at 0.5 (reference 111), "
        f"{kept['0.9']} at 0.9 (reference 251), drop order may differ; {elapsed:.0f}s < 1800s",
    )
