"""Corpus screening engine.

Filters a directory of .qasm files under qubit/parameter/execution budgets,
short-trains each survivor inside the hybrid classifier, checkpoints on
validation macro-F1 improvement, selects the argmax circuit and fully
trains it for the held-out test evaluation.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import partial
from pathlib import Path

import numpy as np

from . import metrics
from .data import Dataset, IoError, SplitSet
from .errors import QcScreenError
from .hybrid import (
    HybridConfig,
    backward,
    flatten_grads,
    flatten_params,
    forward,
    init_hybrid_params,
    unflatten_params,
)
from .neural import AdamState, adam_step, bce_with_logits, sigmoid
from .qasm import (
    CircuitIR,
    DEFAULT_TRAINABLE_GATES,
    GateKind,
    QasmError,
    mark_trainable,
    parse_qasm,
    strip_nonunitary,
)
from .simulator import expect_z, run


class ExecutionFailureError(QcScreenError):
    pass


class NoCandidatesError(QcScreenError):
    pass


class UnknownCircuitIdError(QcScreenError):
    pass


@dataclass(frozen=True)
class FilterConfig:
    n_min: int = 3
    n_max: int = 10
    p_max: int = 30
    trainable_set: frozenset[GateKind] = DEFAULT_TRAINABLE_GATES

    def __post_init__(self):
        if self.n_min > self.n_max:
            raise ValueError(f"n_min {self.n_min} > n_max {self.n_max}")
        if self.p_max < 1:
            raise ValueError("p_max must be >= 1")


class RejectReason(str, Enum):
    QUBIT_BUDGET = "QubitBudget"
    NO_TRAINABLE_GATE = "NoTrainableGate"
    PARAM_BUDGET = "ParamBudget"
    EXECUTION_FAILURE = "ExecutionFailure"
    PARSE_FAILURE = "ParseFailure"


@dataclass(frozen=True)
class FilterReport:
    source_id: str
    accepted: bool
    reject_reason: RejectReason | None = None
    num_qubits: int | None = None
    trainable_params: int | None = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "source_id": self.source_id,
            "accepted": self.accepted,
            "reject_reason": None if self.reject_reason is None else self.reject_reason.value,
            "num_qubits": self.num_qubits,
            "trainable_params": self.trainable_params,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class TrainConfig:
    t_short: int = 5
    t_full: int = 20
    batch_size: int = 32
    lr: float = 0.01
    seed: int = 42

    def __post_init__(self):
        if not 0 <= self.t_short <= self.t_full:
            raise ValueError(f"need 0 <= t_short <= t_full, got {self.t_short}/{self.t_full}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class ScreeningRecord:
    source_id: str
    num_qubits: int
    trainable_params: int
    best_val_macro_f1: float
    best_epoch: int
    wall_time: float
    seed: int
    error: str | None = None

    def to_dict(self) -> dict:
        # wall_time deliberately left out: records must be byte-stable
        # across reruns, timings go to their own log
        return {
            "source_id": self.source_id,
            "num_qubits": self.num_qubits,
            "trainable_params": self.trainable_params,
            "best_val_macro_f1": self.best_val_macro_f1,
            "best_epoch": self.best_epoch,
            "seed": self.seed,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScreeningRecord":
        return cls(
            source_id=d["source_id"],
            num_qubits=d["num_qubits"],
            trainable_params=d["trainable_params"],
            best_val_macro_f1=d["best_val_macro_f1"],
            best_epoch=d["best_epoch"],
            wall_time=d.get("wall_time", 0.0),
            seed=d["seed"],
            error=d.get("error"),
        )


@dataclass
class Checkpoint:
    source_id: str
    flat_params: np.ndarray
    val_macro_f1: float
    epoch: int
    fingerprint: str
    seed: int


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from arbitrary parts; independent of process hashing."""
    digest = hashlib.sha256(":".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


# ---------------------------------------------------------------------------
# filtering


def scan_corpus(corpus_dir) -> list[Path]:
    """All .qasm files under corpus_dir, lexicographic by name."""
    root = Path(corpus_dir)
    if not root.is_dir():
        raise IoError(f"corpus directory {root} does not exist")
    return sorted(root.glob("*.qasm"), key=lambda p: p.name)


def validate_execution(circuit: CircuitIR) -> float:
    """Simulate the bare circuit with all trainable angles at zero.

    Returns <Z_0>; raises ExecutionFailureError when simulation fails or the
    readout is non-finite / outside [-1, 1].
    """
    try:
        state = run(circuit, np.zeros(circuit.trainable_param_count))
        value = expect_z(state, 0)
    except Exception as exc:
        raise ExecutionFailureError(f"{type(exc).__name__}: {exc}") from exc
    if not math.isfinite(value) or abs(value) > 1.0 + 1e-9:
        raise ExecutionFailureError(f"readout {value!r} out of bounds")
    return value


def screen_source(source_id: str, text: str, cfg: FilterConfig):
    """Apply the filter chain to one QASM source.

    Returns (marked circuit or None, FilterReport). Checks run in order:
    parse, strip, qubit budget, trainable marking, no-trainable-gate,
    parameter budget, execution validation; the first failure is recorded.
    """
    try:
        circuit = parse_qasm(text, source_id)
    except QasmError as exc:
        return None, FilterReport(source_id, False, RejectReason.PARSE_FAILURE, detail=str(exc))
    circuit = strip_nonunitary(circuit)
    n = circuit.num_qubits
    if not cfg.n_min <= n <= cfg.n_max:
        return None, FilterReport(source_id, False, RejectReason.QUBIT_BUDGET, n)
    marked = mark_trainable(circuit, cfg.trainable_set)
    p = marked.trainable_param_count
    if p == 0:
        return None, FilterReport(source_id, False, RejectReason.NO_TRAINABLE_GATE, n, p)
    if p > cfg.p_max:
        return None, FilterReport(source_id, False, RejectReason.PARAM_BUDGET, n, p)
    try:
        validate_execution(marked)
    except ExecutionFailureError as exc:
        return None, FilterReport(
            source_id, False, RejectReason.EXECUTION_FAILURE, n, p, detail=str(exc)
        )
    return marked, FilterReport(source_id, True, None, n, p)


def _screen_task(item: tuple[str, str], cfg: FilterConfig):
    return screen_source(item[0], item[1], cfg)


def _pmap(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, len(items) // (workers * 4))
        return list(pool.map(fn, items, chunksize=chunk))


def filter_circuits(corpus_dir, cfg: FilterConfig = FilterConfig(), workers: int = 1):
    """Filter every corpus circuit; never aborts on per-file failures.

    Returns (accepted circuits grouped by qubit count, reports in
    lexicographic source order).
    """
    sources = []
    for path in scan_corpus(corpus_dir):
        sources.append((path.stem, path.read_text(encoding="utf-8")))
    results = _pmap(partial(_screen_task, cfg=cfg), sources, workers)
    grouped: dict[int, list[CircuitIR]] = {}
    reports: list[FilterReport] = []
    for circuit, report in results:
        reports.append(report)
        if circuit is not None:
            grouped.setdefault(circuit.num_qubits, []).append(circuit)
    return grouped, reports


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainResult:
    final_flat: np.ndarray
    best_flat: np.ndarray
    best_val_macro_f1: float
    best_epoch: int
    curve: list[tuple]  # (epoch, split, loss, accuracy, macro_f1)


def predict_batch(params, circuit, features, config) -> np.ndarray:
    probs = np.empty(len(features))
    for i, x in enumerate(features):
        logit, _ = forward(params, circuit, x, config)
        probs[i] = sigmoid(logit)
    return probs


def _evaluate_split(params, circuit, ds: Dataset, config, threshold: float = 0.5):
    losses = np.empty(len(ds))
    probs = np.empty(len(ds))
    for i in range(len(ds)):
        logit, _ = forward(params, circuit, ds.features[i], config)
        losses[i], _ = bce_with_logits(logit, int(ds.labels[i]))
        probs[i] = sigmoid(logit)
    counts = metrics.confusion(probs, ds.labels, threshold)
    accuracy = (counts.tp + counts.tn) / counts.total
    return float(losses.mean()), accuracy, metrics.macro_f1(counts)


def run_training(
    circuit: CircuitIR,
    split: SplitSet,
    epochs: int,
    train_cfg: TrainConfig,
    model_cfg: HybridConfig,
    seed: int,
) -> TrainResult:
    """Mini-batch Adam on BCE for a fixed number of epochs.

    The validation macro-F1 is evaluated before training (epoch 0) and after
    every epoch; the best-scoring parameter snapshot is retained.
    """
    rng = np.random.default_rng(seed)
    params = init_hybrid_params(model_cfg, circuit, rng)
    flat = flatten_params(params)
    adam = AdamState.for_size(flat.size, train_cfg.lr)
    q = circuit.num_qubits
    p = circuit.trainable_param_count

    curve: list[tuple] = []
    train_stats = _evaluate_split(params, circuit, split.train, model_cfg)
    val_stats = _evaluate_split(params, circuit, split.val, model_cfg)
    curve.append((0, "train", *train_stats))
    curve.append((0, "val", *val_stats))
    best_flat = flat.copy()
    best_f1 = val_stats[2]
    best_epoch = 0

    n_train = len(split.train)
    for epoch in range(1, epochs + 1):
        order = rng.permutation(n_train)
        for start in range(0, n_train, train_cfg.batch_size):
            batch = order[start : start + train_cfg.batch_size]
            params = unflatten_params(flat, model_cfg, q, p)
            grad_sum = np.zeros(flat.size)
            for i in batch:
                _, cache = forward(params, circuit, split.train.features[i], model_cfg)
                _, grads = backward(params, circuit, cache, int(split.train.labels[i]), model_cfg)
                grad_sum += flatten_grads(grads)
            flat, adam = adam_step(flat, grad_sum / len(batch), adam)
        params = unflatten_params(flat, model_cfg, q, p)
        train_stats = _evaluate_split(params, circuit, split.train, model_cfg)
        val_stats = _evaluate_split(params, circuit, split.val, model_cfg)
        curve.append((epoch, "train", *train_stats))
        curve.append((epoch, "val", *val_stats))
        if val_stats[2] > best_f1:
            best_f1 = val_stats[2]
            best_epoch = epoch
            best_flat = flat.copy()
    return TrainResult(flat, best_flat, best_f1, best_epoch, curve)


def short_train(
    circuit: CircuitIR,
    split: SplitSet,
    train_cfg: TrainConfig,
    model_cfg: HybridConfig,
    fingerprint: str = "",
):
    """Rank one candidate: t_short epochs, deterministic per-circuit seeding.

    Returns (ScreeningRecord, Checkpoint or None, curve rows). A candidate
    whose training raises is recorded with score 0 instead of aborting.
    """
    seed = derive_seed(train_cfg.seed, circuit.source_id, "short")
    started = time.perf_counter()
    try:
        result = run_training(circuit, split, train_cfg.t_short, train_cfg, model_cfg, seed)
    except Exception as exc:
        record = ScreeningRecord(
            circuit.source_id,
            circuit.num_qubits,
            circuit.trainable_param_count,
            0.0,
            0,
            time.perf_counter() - started,
            seed,
            error=f"{type(exc).__name__}: {exc}",
        )
        return record, None, []
    wall = time.perf_counter() - started
    checkpoint = Checkpoint(
        circuit.source_id, result.best_flat, result.best_val_macro_f1,
        result.best_epoch, fingerprint, seed,
    )
    record = ScreeningRecord(
        circuit.source_id,
        circuit.num_qubits,
        circuit.trainable_param_count,
        result.best_val_macro_f1,
        result.best_epoch,
        wall,
        seed,
    )
    return record, checkpoint, result.curve


def select_best(records: list[ScreeningRecord]) -> str:
    """Argmax of best validation macro-F1; ties prefer fewer parameters,
    then lexicographic source id."""
    valid = [
        r for r in records if r.error is None and math.isfinite(r.best_val_macro_f1)
    ]
    if not valid:
        raise NoCandidatesError("no successfully screened circuits")
    winner = min(valid, key=lambda r: (-r.best_val_macro_f1, r.trainable_params, r.source_id))
    return winner.source_id


def full_train_and_test(
    circuit: CircuitIR,
    split: SplitSet,
    train_cfg: TrainConfig,
    model_cfg: HybridConfig,
    fingerprint: str = "",
    threshold: float = 0.5,
):
    """Retrain the selected circuit from scratch for t_full epochs and score
    the best-validation weights on the test split.

    Returns (EvalReport, Checkpoint, curve rows, derived seed).
    """
    seed = derive_seed(train_cfg.seed, circuit.source_id, "full")
    result = run_training(circuit, split, train_cfg.t_full, train_cfg, model_cfg, seed)
    params = unflatten_params(
        result.best_flat, model_cfg, circuit.num_qubits, circuit.trainable_param_count
    )
    probs = predict_batch(params, circuit, split.test.features, model_cfg)
    report = metrics.evaluate(probs, split.test.labels, threshold)
    checkpoint = Checkpoint(
        circuit.source_id, result.best_flat, result.best_val_macro_f1,
        result.best_epoch, fingerprint, seed,
    )
    return report, checkpoint, result.curve, seed


# ---------------------------------------------------------------------------
# artifacts


def dump_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


PARAM_LAYOUT = (
    "pre1.weights row-major, pre1.biases, pre2.weights, pre2.biases, "
    "theta, alpha, post1.weights, post1.biases, post2.weights, post2.biases"
)


def save_checkpoint(
    directory: Path,
    checkpoint: Checkpoint,
    model_cfg: HybridConfig,
    num_qubits: int,
    circuit_params: int,
    name: str | None = None,
) -> None:
    name = name or checkpoint.source_id
    manifest = {
        "source_id": checkpoint.source_id,
        "val_macro_f1": checkpoint.val_macro_f1,
        "epoch": checkpoint.epoch,
        "fingerprint": checkpoint.fingerprint,
        "seed": checkpoint.seed,
        "skip_enabled": model_cfg.skip_enabled,
        "layout": {
            "order": PARAM_LAYOUT,
            "num_features": model_cfg.num_features,
            "hidden1": model_cfg.hidden1,
            "hidden2": model_cfg.hidden2,
            "num_qubits": num_qubits,
            "circuit_params": circuit_params,
        },
    }
    dump_json(directory / f"{name}.json", manifest)
    dump_json(directory / f"{name}.params.json", [float(v) for v in checkpoint.flat_params])


def load_checkpoint(directory: Path, name: str):
    """Returns (Checkpoint, manifest dict)."""
    manifest = json.loads((directory / f"{name}.json").read_text(encoding="utf-8"))
    values = json.loads((directory / f"{name}.params.json").read_text(encoding="utf-8"))
    checkpoint = Checkpoint(
        manifest["source_id"],
        np.asarray(values, dtype=float),
        manifest["val_macro_f1"],
        manifest["epoch"],
        manifest["fingerprint"],
        manifest["seed"],
    )
    return checkpoint, manifest


def write_curve(path: Path, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["epoch,split,loss,accuracy,macro_f1"]
    for epoch, split_name, loss, accuracy, f1 in rows:
        lines.append(f"{epoch},{split_name},{loss!r},{accuracy!r},{f1!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _screen_train_task(circuit, split, train_cfg, model_cfg, fingerprint):
    return short_train(circuit, split, train_cfg, model_cfg, fingerprint)


def screen_corpus(
    grouped: dict[int, list[CircuitIR]],
    split: SplitSet,
    train_cfg: TrainConfig,
    model_cfg: HybridConfig,
    fingerprint: str,
    out_dir: Path,
    workers: int = 1,
) -> list[ScreeningRecord]:
    """Short-train every accepted circuit, qubit groups in ascending order.

    Per-circuit checkpoints and curves are written as results arrive (in
    deterministic corpus order); the running global best checkpoint is
    refreshed whenever a candidate strictly improves on it, so its score
    sequence is strictly increasing. Worker count never changes results
    because each circuit derives its own seed.
    """
    ordered = [c for n in sorted(grouped) for c in grouped[n]]
    task = partial(
        _screen_train_task,
        split=split,
        train_cfg=train_cfg,
        model_cfg=model_cfg,
        fingerprint=fingerprint,
    )
    results = _pmap(task, ordered, workers)
    checkpoints_dir = Path(out_dir) / "checkpoints"
    curves_dir = Path(out_dir) / "curves"
    best_score = -math.inf
    records: list[ScreeningRecord] = []
    timings: list[tuple[str, float]] = []
    for circuit, (record, checkpoint, curve) in zip(ordered, results):
        records.append(record)
        timings.append((record.source_id, record.wall_time))
        if curve:
            write_curve(curves_dir / f"{record.source_id}.csv", curve)
        if checkpoint is not None:
            save_checkpoint(
                checkpoints_dir, checkpoint, model_cfg,
                circuit.num_qubits, circuit.trainable_param_count,
            )
            if checkpoint.val_macro_f1 > best_score:
                best_score = checkpoint.val_macro_f1
                save_checkpoint(
                    checkpoints_dir, checkpoint, model_cfg,
                    circuit.num_qubits, circuit.trainable_param_count,
                    name="global_best",
                )
    timing_lines = ["source_id,wall_time_s"]
    timing_lines.extend(f"{sid},{wall!r}" for sid, wall in timings)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "timings.csv").write_text("\n".join(timing_lines) + "\n", encoding="utf-8")
    return records
