import os

import numpy as np
import pytest

from ihards.cnn import backend

UCI_NAMES = ["WALKING", "WALKING_UPSTAIRS", "WALKING_DOWNSTAIRS", "SITTING", "STANDING", "LAYING"]


def write_uci(root, train_rows, test_rows=()):
    """train_rows/test_rows: iterables of (activity_code, 561 floats)."""
    os.makedirs(root / "train", exist_ok=True)
    os.makedirs(root / "test", exist_ok=True)
    (root / "activity_labels.txt").write_text(
        "".join(f"{i} {name}\n" for i, name in enumerate(UCI_NAMES, 1))
    )
    for part, rows in (("train", train_rows), ("test", test_rows)):
        x = "".join(" ".join(f"{v:.7e}" for v in feats) + "\n" for _, feats in rows)
        y = "".join(f"{code}\n" for code, _ in rows)
        (root / part / f"X_{part}.txt").write_text(x)
        (root / part / f"y_{part}.txt").write_text(y)
    return root


@pytest.fixture
def uci_dir(tmp_path):
    rng = np.random.default_rng(1)
    rows = [(5, rng.uniform(-1, 1, 561)), (6, rng.uniform(-1, 1, 561)), (1, rng.uniform(-1, 1, 561))]
    return write_uci(tmp_path / "uci", rows), rows


WISDM_LINES = [
    "33,Jogging,49105962326000,-0.69,12.68,0.50;",
    "33,Walking,49106062271000,5.01,11.26,0.95;",
    "",
    "17,Upstairs,1234,1.0,2.0,3.0;",
    "17,Sitting,1235,0.1,0.2,0.3;",
]


@pytest.fixture
def wisdm_file(tmp_path):
    p = tmp_path / "wisdm.txt"
    p.write_text("\n".join(WISDM_LINES) + "\n")
    return p


@pytest.fixture
def kuhar_file(tmp_path):
    # 9 columns: two leading ids then 7 features; last column is the class code
    p = tmp_path / "kuhar.csv"
    rows = [
        "7,1,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0",  # Stand
        "7,2,1.1,1.2,1.3,1.4,1.5,1.6,1.7,14",  # Run -> dropped
        "8,3,2.1,2.2,2.3,2.4,2.5,2.6,2.7,11",  # Walk
        "8,4,3.1,3.2,3.3,3.4,3.5,3.6,3.7,16",  # Stair-down
        "9,5,4.1,4.2,4.3,4.4,4.5,4.6,4.7,15",  # Stair-up
    ]
    p.write_text("\n".join(rows) + "\n")
    return p


@pytest.fixture(params=backend.available())
def kernel_backend(request, monkeypatch):
    """Run a test once per available kernel backend."""
    monkeypatch.setattr(backend, "kernels", backend.get(request.param))
    monkeypatch.setattr(backend, "BACKEND", request.param)
    return request.param
