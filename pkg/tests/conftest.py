"""Shared fixtures: synthetic datasets and QASM corpora written to tmp dirs."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

FEATURES = 28
FEATURE_COLUMNS = tuple(f"V{i}" for i in range(1, FEATURES + 1))


def make_dataset_csv(
    path: Path,
    seed: int = 7,
    n_class0: int = 180,
    n_class1: int = 120,
    separation: float = 0.5,
    noise: float = 0.35,
) -> Path:
    """Two well-separated Gaussian blobs in 28 dimensions, interleaved rows."""
    rng = np.random.default_rng(seed)
    rows = []
    for cls, count in ((0, n_class0), (1, n_class1)):
        center = -separation if cls == 0 else separation
        feats = rng.normal(center, noise, size=(count, FEATURES))
        for row in feats:
            rows.append((row, cls))
    order = rng.permutation(len(rows))
    lines = [",".join([*FEATURE_COLUMNS, "Class"])]
    for i in order:
        row, cls = rows[i]
        lines.append(",".join(repr(float(v)) for v in row) + f",{cls}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


TOY_CIRCUITS = {
    "toy_a": """OPENQASM 2.0;
include "qelib1.inc";
qreg q[3];
ry(0.1) q[0];
ry(0.2) q[1];
ry(0.3) q[2];
cx q[0],q[1];
cx q[1],q[2];
""",
    "toy_b": """OPENQASM 2.0;
include "qelib1.inc";
qreg q[3];
h q[0];
h q[1];
h q[2];
rz(0.5) q[0];
rz(0.5) q[1];
rz(0.5) q[2];
cx q[0],q[2];
""",
    "toy_c": """OPENQASM 2.0;
include "qelib1.inc";
qreg q[3];
creg c[3];
u2(0,pi) q[0];
ry(0.4) q[1];
rz(0.2) q[2];
cx q[0],q[1];
barrier q[0],q[1],q[2];
measure q[0] -> c[0];
""",
}

# One file per reject reason plus one acceptable circuit (6 qubits, 9
# trainable parameters).
REJECT_CORPUS = {
    "r_execfail": """qreg q[3];
ry(0.5) q[0];
rx(1e400) q[1];
""",
    "r_notrain": """qreg q[4];
h q[0];
cx q[0],q[1];
rx(0.3) q[2];
""",
    "r_parambudget": "qreg q[3];\n" + "".join(f"ry(0.0{i % 10}) q[{i % 3}];\n" for i in range(31)),
    "r_parsefail": """qreg q[1];
zz q[0];
""",
    "r_qubits2": """qreg q[2];
ry(0.1) q[0];
""",
    "ok_sixqubit": """OPENQASM 2.0;
include "qelib1.inc";
qreg q[6];
ry(0.1) q[0];
ry(0.2) q[1];
ry(0.3) q[2];
rz(0.4) q[3];
rz(0.5) q[4];
rz(0.6) q[5];
ry(0.7) q[0];
ry(0.8) q[2];
rz(0.9) q[4];
cx q[0],q[1];
cx q[2],q[3];
cx q[4],q[5];
""",
}


def write_corpus(directory: Path, files: dict[str, str]) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (directory / f"{name}.qasm").write_text(text, encoding="utf-8")
    return directory


def write_config(
    path: Path,
    data_csv: Path,
    corpus_dir: Path,
    output_dir: Path,
    seed: int = 42,
    t_short: int = 5,
    t_full: int = 20,
    ratios=(2 / 3, 2 / 15, 1 / 5),
    target_per_class: int = 150,
    **model_overrides,
) -> Path:
    config = {
        "data_csv": str(data_csv),
        "corpus_dir": str(corpus_dir),
        "output_dir": str(output_dir),
        "seed": seed,
        "train": {"t_short": t_short, "t_full": t_full, "batch_size": 32, "lr": 0.01},
        "model": {"num_features": FEATURES, **model_overrides},
        "data": {
            "target_per_class": target_per_class,
            "smote_k": 5,
            "ratios": list(ratios),
        },
    }
    path.write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def fixture_csv(tmp_path_factory) -> Path:
    return make_dataset_csv(tmp_path_factory.mktemp("data") / "transactions.csv")


@pytest.fixture(scope="session")
def toy_corpus_dir(tmp_path_factory) -> Path:
    return write_corpus(tmp_path_factory.mktemp("corpus"), TOY_CIRCUITS)


@pytest.fixture(scope="session")
def reject_corpus_dir(tmp_path_factory) -> Path:
    return write_corpus(tmp_path_factory.mktemp("reject_corpus"), REJECT_CORPUS)
