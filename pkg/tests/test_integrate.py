import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ihards.errors import CapacityError, ConfigError, ShapeError, StructuralError
from ihards.ingest import CanonicalFrame, SourceDataset
from ihards.integrate import (
    IHARDS_FEATURES,
    IhardsDataset,
    IntegrationConfig,
    ReplacementPolicy,
    StandardizationStats,
    build_integrated_dataset,
    draw_class_indices,
    generate_synthetic,
    standardize_apply,
    standardize_fit,
    standardize_invert,
    stratified_split,
)
from ihards.rng import substream


class TestDrawIndices:
    def test_exhaustive_draw_is_permutation(self):
        idx = draw_class_indices(5, 5, substream(3, "t"))
        assert sorted(idx.tolist()) == [0, 1, 2, 3, 4]

    def test_deterministic(self):
        a = draw_class_indices(5, 3, substream(42, "t"))
        b = draw_class_indices(5, 3, substream(42, "t"))
        assert a.tolist() == b.tolist()
        assert len(set(a.tolist())) == 3

    def test_capacity_error(self):
        with pytest.raises(CapacityError, match="KU_HAR class 0"):
            draw_class_indices(
                1945, 420_000, substream(0, "t"), ReplacementPolicy.ERROR_IF_SHORT, what="KU_HAR class 0"
            )

    def test_replace_if_short(self):
        idx = draw_class_indices(3, 10, substream(0, "t"), ReplacementPolicy.REPLACE_IF_SHORT)
        assert idx.size == 10 and idx.min() >= 0 and idx.max() < 3

    @given(pool=st.integers(1, 200), n=st.integers(1, 200), seed=st.integers(0, 2**32))
    @settings(max_examples=60, deadline=None)
    def test_distinct_when_possible(self, pool, n, seed):
        idx = draw_class_indices(pool, n, substream(seed, "t"))
        assert idx.size == n
        assert idx.min() >= 0 and idx.max() < pool
        if n <= pool:
            assert len(set(idx.tolist())) == n


def _single_row_frames():
    uci = np.arange(5 * 561, dtype=float).reshape(5, 561)
    wis = -np.arange(15, dtype=float).reshape(5, 3)
    ku = 1000 + np.arange(35, dtype=float).reshape(5, 7)
    labels = np.array([3, 0, 4, 1, 2])
    return (
        CanonicalFrame(uci, labels, SourceDataset.UCI_HAR),
        CanonicalFrame(wis, labels[::-1].copy(), SourceDataset.WISDM),
        CanonicalFrame(ku, labels, SourceDataset.KU_HAR),
    )


class TestBuild:
    def test_forced_assembly(self):
        frames = _single_row_frames()
        data = build_integrated_dataset(*frames, IntegrationConfig(per_class_n=1, seed=5))
        assert data.features.shape == (5, IHARDS_FEATURES)
        for row, cls in zip(data.features, data.labels):
            expect = np.concatenate([f.features[f.labels == cls][0] for f in frames])
            np.testing.assert_array_equal(row, expect.astype(np.float32))

    def test_balance_and_determinism(self):
        frames = generate_synthetic(50, 0.5, 1)
        cfg = IntegrationConfig(per_class_n=1000, seed=7)
        a = build_integrated_dataset(*frames, cfg)
        b = build_integrated_dataset(*frames, cfg)
        assert a.per_class_counts.tolist() == [1000] * 5
        assert a.features.shape == (5000, 571)
        assert a.features.tobytes() == b.features.tobytes()
        assert a.labels.tobytes() == b.labels.tobytes()

    def test_segments_come_from_matching_class(self):
        frames = generate_synthetic(20, 0.0, 3)
        data = build_integrated_dataset(*frames, IntegrationConfig(per_class_n=30, seed=1))
        # sigma 0: every source row of a class is that class's mean
        for row, cls in zip(data.features, data.labels):
            col = 0
            for f in frames:
                seg = row[col : col + f.col_count]
                np.testing.assert_array_equal(seg, f.features[f.labels == cls][0].astype(np.float32))
                col += f.col_count

    def test_error_policy_propagates(self):
        frames = generate_synthetic(2, 0.5, 0)
        cfg = IntegrationConfig(3, 0, ReplacementPolicy.ERROR_IF_SHORT)
        with pytest.raises(CapacityError):
            build_integrated_dataset(*frames, cfg)

    def test_missing_class(self):
        uci, wis, ku = _single_row_frames()
        keep = wis.labels != 2
        wis = CanonicalFrame(wis.features[keep], wis.labels[keep], SourceDataset.WISDM)
        with pytest.raises(StructuralError, match="WISDM has no rows for class 2"):
            build_integrated_dataset(uci, wis, ku, IntegrationConfig(1, 0))

    def test_paper_scale_shape_arithmetic(self):
        cfg = IntegrationConfig()
        assert cfg.per_class_n * 5 == 2_100_000
        assert IHARDS_FEATURES == 561 + 3 + 7 == 571

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            IntegrationConfig(per_class_n=0)


class TestStandardize:
    def test_hand_computed(self):
        stats = standardize_fit(np.array([[1.0], [2.0], [3.0]]))
        assert stats.mean[0] == 2.0
        assert stats.std[0] == pytest.approx(math.sqrt(2 / 3))
        out = standardize_apply(np.array([[1.0], [2.0], [3.0]]), stats)
        np.testing.assert_allclose(out[:, 0], [-1.2247449, 0, 1.2247449], atol=1e-6)

    def test_constant_column(self):
        x = np.array([[4.0], [4.0]])
        out = standardize_apply(x, standardize_fit(x))
        assert out.tolist() == [[0.0], [0.0]]

    def test_zscore_moments(self):
        x = np.random.default_rng(0).normal(3, 7, size=(500, 6))
        z = standardize_apply(x, standardize_fit(x))
        assert np.abs(z.mean(axis=0)).max() < 1e-6
        assert np.abs(z.std(axis=0) - 1).max() < 1e-4

    def test_round_trip(self):
        x = np.random.default_rng(1).uniform(-50, 50, size=(100, 9))
        x[:, 4] = 2.5
        stats = standardize_fit(x)
        back = standardize_invert(standardize_apply(x, stats), stats)
        np.testing.assert_allclose(back, x, rtol=1e-6, atol=1e-12)

    def test_shape_mismatch(self):
        stats = StandardizationStats(np.zeros(3), np.ones(3))
        with pytest.raises(ShapeError):
            standardize_apply(np.zeros((2, 4)), stats)


def _counting_split_oracle(counts, frac):
    # brute count: move rows to test one at a time while the test share stays <= frac
    out = []
    for n in counts:
        t = 0
        while (t + 1) <= n * frac + 1e-12:
            t += 1
        out.append((n - t, t))
    return out


class TestSplit:
    def _data(self, per_class):
        labels = np.repeat(np.arange(5), per_class)
        feats = np.arange(labels.size, dtype=np.float32)[:, None]
        return IhardsDataset(feats, labels)

    def test_ten_rows(self):
        tr, te = stratified_split(self._data(2), 0.5, substream(0, "s"))
        assert tr.per_class_counts.tolist() == [1] * 5
        assert te.per_class_counts.tolist() == [1] * 5

    def test_round_toward_train(self):
        tr, te = stratified_split(self._data(3), 0.5, substream(0, "s"))
        assert tr.per_class_counts.tolist() == [2] * 5
        assert te.per_class_counts.tolist() == [1] * 5
        assert _counting_split_oracle([3] * 5, 0.5) == [(2, 1)] * 5

    @given(
        counts=st.lists(st.integers(1, 40), min_size=5, max_size=5),
        frac=st.floats(0.05, 0.95),
        seed=st.integers(0, 1000),
    )
    @settings(max_examples=60, deadline=None)
    def test_partition_and_counts(self, counts, frac, seed):
        labels = np.concatenate([np.full(c, i) for i, c in enumerate(counts)])
        data = IhardsDataset(np.arange(labels.size, dtype=np.float32)[:, None], labels)
        tr, te = stratified_split(data, frac, substream(seed, "s"))
        ids_tr = set(tr.features[:, 0].tolist())
        ids_te = set(te.features[:, 0].tolist())
        assert not ids_tr & ids_te
        assert ids_tr | ids_te == set(range(labels.size))
        got = list(zip(tr.per_class_counts.tolist(), te.per_class_counts.tolist()))
        assert got == _counting_split_oracle(counts, frac)

    def test_paper_split_arithmetic(self):
        # 420,000 per class at 50% -> 1,050,000 / 1,050,000 overall
        assert _counting_split_oracle([420_000] * 5, 0.5) == [(210_000, 210_000)] * 5

    def test_empty_class(self):
        data = IhardsDataset(np.zeros((4, 1), dtype=np.float32), np.array([0, 1, 2, 3]))
        with pytest.raises(StructuralError):
            stratified_split(data, 0.5, substream(0, "s"))

    def test_bad_fraction(self):
        with pytest.raises(ConfigError):
            stratified_split(self._data(2), 1.0, substream(0, "s"))


def _nearest_centroid_accuracy(frame):
    means = np.stack([frame.features[frame.labels == c].mean(axis=0) for c in range(5)])
    d = ((frame.features[:, None, :] - means[None]) ** 2).sum(-1)
    return (d.argmin(1) == frame.labels).mean()


class TestSynthetic:
    def test_zero_noise(self):
        for frame in generate_synthetic(10, 0.0, 2):
            for c in range(5):
                rows = frame.features[frame.labels == c]
                assert (rows == rows[0]).all()

    def test_widths(self):
        assert [f.col_count for f in generate_synthetic(3, 0.5, 0)] == [561, 3, 7]

    def test_separable(self):
        for frame in generate_synthetic(1000, 0.5, 11):
            means = np.stack([frame.features[frame.labels == c].mean(0) for c in range(5)])
            assert _nearest_centroid_accuracy(frame) == 1.0
            d = np.linalg.norm(means[:, None] - means[None], axis=-1)
            # sample means sit within noise of the constructed means (>= 10 sigma apart)
            assert d[np.triu_indices(5, 1)].min() > 9.0 * 0.5

    def test_deterministic(self):
        a = generate_synthetic(20, 0.5, 9)
        b = generate_synthetic(20, 0.5, 9)
        for fa, fb in zip(a, b):
            assert fa.features.tobytes() == fb.features.tobytes()

    def test_validation(self):
        with pytest.raises(ConfigError):
            generate_synthetic(10, -1.0, 0)
        with pytest.raises(ConfigError):
            generate_synthetic(10, 0.5, 0, features=570)
