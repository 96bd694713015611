import numpy as np
import pytest

from ihards.errors import MappingError, ParseError, StructuralError
from ihards.ingest import (
    ActivityClass,
    LabelMap,
    SourceDataset,
    default_label_map,
    load_ku_har,
    load_uci_har,
    load_wisdm_raw,
    map_to_canonical_labels,
)

from conftest import write_uci


class TestLabelMaps:
    def test_uci_standing(self):
        assert map_to_canonical_labels("STANDING", default_label_map("UCI_HAR")) == ActivityClass.STAND == 0

    def test_uci_laying_dropped(self):
        assert map_to_canonical_labels("LAYING", default_label_map("UCI_HAR")) is None

    def test_wisdm_upstairs(self):
        assert map_to_canonical_labels("Upstairs", default_label_map("WISDM")) == 4

    def test_kuhar_codes(self):
        m = default_label_map("KU_HAR")
        assert m("0") == ActivityClass.STAND
        assert m("14") is None  # Run
        mapped = [k for k, v in m.entries.items() if v is not None]
        assert len(mapped) == 5

    def test_unknown_label(self):
        with pytest.raises(MappingError, match="Skipping"):
            map_to_canonical_labels("Skipping", default_label_map("WISDM"))

    def test_every_default_map_is_total_over_five_classes(self):
        for src in SourceDataset:
            m = default_label_map(src)
            assert {v for v in m.entries.values() if v is not None} == set(ActivityClass)

    def test_map_missing_a_class_is_rejected(self):
        with pytest.raises(StructuralError, match="Stair-up"):
            LabelMap({"a": "Stand", "b": "Sit", "c": "Walk", "d": "Stair-down"})


class TestUciHar:
    def test_mini_fixture(self, uci_dir):
        root, rows = uci_dir
        frame = load_uci_har(root)
        assert frame.labels.tolist() == [0, 2]
        assert frame.col_count == 561
        np.testing.assert_allclose(frame.features[0], rows[0][1], rtol=1e-6)
        np.testing.assert_allclose(frame.features[1], rows[2][1], rtol=1e-6)
        s = frame.stats
        assert (s.rows_in, s.rows_emitted, s.rows_label_filtered) == (3, 2, 1)
        assert s.conserved()

    def test_empty_files(self, tmp_path):
        root = write_uci(tmp_path / "u", [])
        frame = load_uci_har(root)
        assert frame.row_count == 0 and frame.col_count == 561

    def test_train_then_test_order(self, tmp_path):
        train = [(1, np.full(561, 1.0))]
        test = [(5, np.full(561, 2.0))]
        frame = load_uci_har(write_uci(tmp_path / "u", train, test))
        assert frame.labels.tolist() == [2, 0]
        assert frame.features[:, 0].tolist() == [1.0, 2.0]

    def test_short_row_reports_line(self, uci_dir):
        root, _ = uci_dir
        path = root / "train" / "X_train.txt"
        lines = path.read_text().splitlines()
        lines[1] = " ".join(lines[1].split()[:-1])
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ParseError, match=r"X_train.txt:2"):
            load_uci_har(root)

    def test_non_numeric_token(self, uci_dir):
        root, _ = uci_dir
        path = root / "train" / "X_train.txt"
        text = path.read_text().replace(path.read_text().split()[3], "abc", 1)
        path.write_text(text)
        with pytest.raises(ParseError, match=":1"):
            load_uci_har(root)

    def test_length_mismatch(self, uci_dir):
        root, _ = uci_dir
        (root / "train" / "y_train.txt").write_text("5\n6\n")
        with pytest.raises(StructuralError, match="labels"):
            load_uci_har(root)

    def test_missing_file(self, uci_dir):
        root, _ = uci_dir
        (root / "test" / "X_test.txt").unlink()
        with pytest.raises(StructuralError, match="missing"):
            load_uci_har(root)

    def test_reparse_identical(self, uci_dir):
        root, _ = uci_dir
        a, b = load_uci_har(root), load_uci_har(root)
        assert a.features.tobytes() == b.features.tobytes()
        assert a.labels.tobytes() == b.labels.tobytes()


class TestWisdm:
    def test_fixture(self, wisdm_file):
        frame = load_wisdm_raw(wisdm_file)
        assert frame.col_count == 3
        assert frame.labels.tolist() == [2, 4, 1]
        assert frame.features[0].tolist() == [5.01, 11.26, 0.95]
        s = frame.stats
        assert s.rows_label_filtered == 1  # Jogging
        assert s.rows_malformed == 1  # blank line
        assert s.rows_in == 5 and s.conserved()

    def test_multiple_records_per_line_and_trailing_comma(self, tmp_path):
        p = tmp_path / "w.txt"
        p.write_text("1,Walking,1,1.0,2.0,3.0;1,Standing,2,4.0,5.0,6.0;\n2,Sitting,3,7.0,8.0,9.0,;\n")
        frame = load_wisdm_raw(p)
        assert frame.labels.tolist() == [2, 0, 1]
        assert frame.stats.rows_malformed == 0

    def test_broken_records_are_counted(self, tmp_path):
        p = tmp_path / "w.txt"
        p.write_text("1,Walking,1,1.0,2.0,3.0;\n1,Walking,1,1.0,2.0;\n1,Walking,1,1.0,2.0,3.0;\n")
        frame = load_wisdm_raw(p)
        assert frame.row_count == 2 and frame.stats.rows_malformed == 1

    def test_mostly_garbage_is_rejected(self, tmp_path):
        p = tmp_path / "w.txt"
        p.write_text("hello\nworld\n1,Walking,1,1.0,2.0,3.0;\n")
        with pytest.raises(ParseError, match="malformed"):
            load_wisdm_raw(p)

    def test_unreadable(self, tmp_path):
        with pytest.raises(StructuralError):
            load_wisdm_raw(tmp_path / "nope.txt")


class TestKuHar:
    def test_fixture(self, kuhar_file):
        frame = load_ku_har(kuhar_file)
        assert frame.col_count == 7
        assert frame.labels.tolist() == [0, 2, 3, 4]
        assert frame.features[0].tolist() == [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]
        assert frame.stats.rows_label_filtered == 1
        assert frame.stats.conserved()

    def test_explicit_columns(self, kuhar_file):
        frame = load_ku_har(kuhar_file, feature_cols=[0, 1, 2, 3, 4, 5, 6])
        assert frame.features[0].tolist() == [7, 1, 0.1, 0.2, 0.3, 0.4, 0.5]

    def test_code_out_of_range(self, tmp_path):
        p = tmp_path / "k.csv"
        p.write_text("1,2,3,4,5,6,7,18\n")
        with pytest.raises(ParseError, match="outside 0-17"):
            load_ku_har(p)

    def test_non_numeric_feature(self, tmp_path):
        p = tmp_path / "k.csv"
        p.write_text("1,2,x,4,5,6,7,0\n")
        with pytest.raises(ParseError, match="column 2"):
            load_ku_har(p)


def test_label_invariant_over_all_fixtures(uci_dir, wisdm_file, kuhar_file):
    frames = [load_uci_har(uci_dir[0]), load_wisdm_raw(wisdm_file), load_ku_har(kuhar_file)]
    for frame, ncol in zip(frames, (561, 3, 7)):
        assert frame.col_count == ncol
        assert set(frame.labels.tolist()) <= {0, 1, 2, 3, 4}
        assert frame.stats.conserved()
