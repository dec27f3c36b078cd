"""Command-line driver.

Subcommands: preprocess, filter, screen, train, run-all. Every run is
described by one JSON config file; a fingerprint of the resolved config
stamps each artifact so reruns can be verified byte for byte (wall-clock
timings live in their own log and are excluded).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import traceback
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import (
    DEFAULT_LABEL_COLUMN,
    Dataset,
    SplitSet,
    apply_scale,
    load_csv,
    minmax_scale,
    smote,
    split_indices,
)
from .errors import QcScreenError
from .hybrid import HybridConfig
from .qasm import GateKind
from .screening import (
    FilterConfig,
    ScreeningRecord,
    TrainConfig,
    UnknownCircuitIdError,
    derive_seed,
    dump_json,
    filter_circuits,
    full_train_and_test,
    save_checkpoint,
    screen_corpus,
    select_best,
    write_curve,
)


class ConfigError(QcScreenError):
    pass


@dataclass
class RunConfig:
    data_csv: str
    corpus_dir: str
    output_dir: str
    seed: int = 42
    workers: int = 1
    filter: FilterConfig = FilterConfig()
    train: TrainConfig = TrainConfig()
    model: HybridConfig = HybridConfig()
    feature_columns: tuple[str, ...] | None = None
    label_column: str = DEFAULT_LABEL_COLUMN
    smote_k: int = 5
    target_per_class: int = 10000
    ratios: tuple[float, float, float] = (0.6, 0.1, 0.3)
    split_first: bool = False

    @classmethod
    def load(cls, path: Path, overrides: dict | None = None) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(raw, overrides or {})

    @classmethod
    def from_dict(cls, raw: dict, overrides: dict | None = None) -> "RunConfig":
        overrides = overrides or {}
        try:
            seed = int(overrides.get("seed", raw.get("seed", 42)))
            fraw = raw.get("filter", {})
            gate_names = fraw.get("trainable_gates", ["RY", "RZ", "U2"])
            try:
                trainable = frozenset(GateKind[name.upper()] for name in gate_names)
            except KeyError as exc:
                raise ConfigError(f"unknown gate kind in trainable_gates: {exc}") from exc
            traw = raw.get("train", {})
            mraw = raw.get("model", {})
            draw = raw.get("data", {})
            skip = bool(mraw.get("skip_enabled", True))
            if overrides.get("no_skip"):
                skip = False
            split_first = bool(draw.get("split_first", False))
            if overrides.get("split_first"):
                split_first = True
            cols = draw.get("feature_columns")
            config = cls(
                data_csv=str(raw["data_csv"]),
                corpus_dir=str(raw["corpus_dir"]),
                output_dir=str(raw["output_dir"]),
                seed=seed,
                workers=int(overrides.get("workers", raw.get("workers", 1))),
                filter=FilterConfig(
                    n_min=int(fraw.get("n_min", 3)),
                    n_max=int(fraw.get("n_max", 10)),
                    p_max=int(fraw.get("p_max", 30)),
                    trainable_set=trainable,
                ),
                train=TrainConfig(
                    t_short=int(traw.get("t_short", 5)),
                    t_full=int(traw.get("t_full", 20)),
                    batch_size=int(traw.get("batch_size", 32)),
                    lr=float(traw.get("lr", 0.01)),
                    seed=seed,
                ),
                model=HybridConfig(
                    num_features=int(mraw.get("num_features", 28)),
                    hidden1=int(mraw.get("hidden1", 64)),
                    hidden2=int(mraw.get("hidden2", 16)),
                    skip_enabled=skip,
                    alpha_init=float(mraw.get("alpha_init", 0.1)),
                    warm_start_theta=bool(mraw.get("warm_start_theta", False)),
                ),
                feature_columns=None if cols is None else tuple(cols),
                label_column=str(draw.get("label_column", DEFAULT_LABEL_COLUMN)),
                smote_k=int(draw.get("smote_k", 5)),
                target_per_class=int(draw.get("target_per_class", 10000)),
                ratios=tuple(float(r) for r in draw.get("ratios", (0.6, 0.1, 0.3))),
                split_first=split_first,
            )
        except KeyError as exc:
            raise ConfigError(f"config missing required key {exc}") from exc
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return config

    def canonical_dict(self) -> dict:
        return {
            "data_csv": self.data_csv,
            "corpus_dir": self.corpus_dir,
            "output_dir": self.output_dir,
            "seed": self.seed,
            "filter": {
                "n_min": self.filter.n_min,
                "n_max": self.filter.n_max,
                "p_max": self.filter.p_max,
                "trainable_gates": sorted(k.name for k in self.filter.trainable_set),
            },
            "train": {
                "t_short": self.train.t_short,
                "t_full": self.train.t_full,
                "batch_size": self.train.batch_size,
                "lr": self.train.lr,
            },
            "model": {
                "num_features": self.model.num_features,
                "hidden1": self.model.hidden1,
                "hidden2": self.model.hidden2,
                "skip_enabled": self.model.skip_enabled,
                "alpha_init": self.model.alpha_init,
                "warm_start_theta": self.model.warm_start_theta,
            },
            "data": {
                "feature_columns": None if self.feature_columns is None else list(self.feature_columns),
                "label_column": self.label_column,
                "smote_k": self.smote_k,
                "target_per_class": self.target_per_class,
                "ratios": list(self.ratios),
                "split_first": self.split_first,
            },
        }

    def fingerprint(self) -> str:
        # worker count intentionally excluded: it must not change results
        canonical = json.dumps(self.canonical_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    @property
    def out(self) -> Path:
        return Path(self.output_dir)


def _log(stage: str, message: str) -> None:
    print(f"[{stage}] {message}", flush=True)


# ---------------------------------------------------------------------------
# preprocess


def _write_processed_csv(path: Path, dataset: Dataset, columns, label_column: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join([*columns, label_column])]
    for row, label in zip(dataset.features, dataset.labels):
        lines.append(",".join(repr(float(v)) for v in row) + f",{int(label)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_preprocess(config: RunConfig) -> None:
    fingerprint = config.fingerprint()
    columns = config.feature_columns or tuple(f"V{i}" for i in range(1, 29))
    raw = load_csv(config.data_csv, columns, config.label_column)
    _log("preprocess", f"loaded {len(raw)} rows from {config.data_csv}")
    rng_smote = np.random.default_rng(derive_seed(config.seed, "smote"))
    rng_split = np.random.default_rng(derive_seed(config.seed, "split"))

    if config.split_first:
        # leakage-free variant: split raw rows, then balance and fit the
        # scaler on the training portion only
        raw_idx = split_indices(raw.labels, config.ratios, rng_split)
        train_raw, val_raw, test_raw = (raw.take(i) for i in raw_idx)
        train_target = round(config.target_per_class * config.ratios[0])
        balanced_train = smote(train_raw, config.smote_k, train_target, rng_smote)
        scaled_train, scaler = minmax_scale(balanced_train)
        scaled_val = apply_scale(val_raw, scaler)
        scaled_test = apply_scale(test_raw, scaler)
        features = np.vstack([scaled_train.features, scaled_val.features, scaled_test.features])
        labels = np.concatenate([scaled_train.labels, scaled_val.labels, scaled_test.labels])
        processed = Dataset(features, labels)
        a, b = len(scaled_train), len(scaled_train) + len(scaled_val)
        indices = (list(range(0, a)), list(range(a, b)), list(range(b, len(processed))))
    else:
        balanced = smote(raw, config.smote_k, config.target_per_class, rng_smote)
        processed, scaler = minmax_scale(balanced)
        idx = split_indices(processed.labels, config.ratios, rng_split)
        indices = tuple(arr.tolist() for arr in idx)

    _write_processed_csv(config.out / "processed_data.csv", processed, columns, config.label_column)
    dump_json(
        config.out / "scaler.json",
        {
            "fingerprint": fingerprint,
            "seed": config.seed,
            "mins": [float(v) for v in scaler.mins],
            "maxes": [float(v) for v in scaler.maxes],
            "target_max": scaler.target_max,
        },
    )
    dump_json(
        config.out / "split_manifest.json",
        {
            "fingerprint": fingerprint,
            "seed": config.seed,
            "split_first": config.split_first,
            "indices": {"train": indices[0], "val": indices[1], "test": indices[2]},
            "rows": {
                "train": len(indices[0]),
                "val": len(indices[1]),
                "test": len(indices[2]),
            },
        },
    )
    _log(
        "preprocess",
        f"rows train/val/test = {len(indices[0])}/{len(indices[1])}/{len(indices[2])}",
    )


def load_split(config: RunConfig) -> SplitSet:
    """Rebuild the SplitSet from the preprocess artifacts."""
    manifest_path = config.out / "split_manifest.json"
    data_path = config.out / "processed_data.csv"
    if not manifest_path.exists() or not data_path.exists():
        raise ConfigError(
            f"preprocess outputs missing under {config.out}; run `preprocess` first"
        )
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    columns = config.feature_columns or tuple(f"V{i}" for i in range(1, 29))
    processed = load_csv(data_path, columns, config.label_column)
    idx = manifest["indices"]
    return SplitSet(
        processed.take(idx["train"]), processed.take(idx["val"]), processed.take(idx["test"])
    )


# ---------------------------------------------------------------------------
# filter / screen / train


def cmd_filter(config: RunConfig) -> None:
    fingerprint = config.fingerprint()
    grouped, reports = filter_circuits(config.corpus_dir, config.filter, config.workers)
    dump_json(
        config.out / "filter_report.json",
        {
            "fingerprint": fingerprint,
            "seed": config.seed,
            "reports": [r.to_dict() for r in reports],
        },
    )
    accepted = sum(1 for r in reports if r.accepted)
    counts: dict[str, int] = {}
    for r in reports:
        if not r.accepted:
            counts[r.reject_reason.value] = counts.get(r.reject_reason.value, 0) + 1
    _log("filter", f"accepted {accepted}/{len(reports)} circuits")
    for reason in sorted(counts):
        _log("filter", f"rejected {counts[reason]} ({reason})")


def _sorted_records(records: list[ScreeningRecord]) -> list[ScreeningRecord]:
    return sorted(
        records, key=lambda r: (-r.best_val_macro_f1, r.trainable_params, r.source_id)
    )


def cmd_screen(config: RunConfig) -> None:
    fingerprint = config.fingerprint()
    split = load_split(config)
    grouped, _ = filter_circuits(config.corpus_dir, config.filter, config.workers)
    total = sum(len(v) for v in grouped.values())
    _log("screen", f"short-training {total} circuits for {config.train.t_short} epochs")
    records = screen_corpus(
        grouped, split, config.train, config.model, fingerprint, config.out, config.workers
    )
    ranked = _sorted_records(records)
    dump_json(
        config.out / "screening_records.json",
        {
            "fingerprint": fingerprint,
            "seed": config.seed,
            "records": [r.to_dict() for r in ranked],
        },
    )
    for record in ranked:
        status = record.error or f"best_val_macro_f1={record.best_val_macro_f1:.4f}"
        _log("screen", f"{record.source_id}: {status}")


def _accepted_by_id(config: RunConfig) -> dict:
    grouped, _ = filter_circuits(config.corpus_dir, config.filter, config.workers)
    return {c.source_id: c for group in grouped.values() for c in group}


def cmd_train(config: RunConfig, circuit_id: str | None = None) -> None:
    fingerprint = config.fingerprint()
    split = load_split(config)
    by_id = _accepted_by_id(config)
    if circuit_id is None:
        records_path = config.out / "screening_records.json"
        if not records_path.exists():
            raise ConfigError(
                f"{records_path} missing; run `screen` first or pass --circuit"
            )
        payload = json.loads(records_path.read_text(encoding="utf-8"))
        records = [ScreeningRecord.from_dict(d) for d in payload["records"]]
        circuit_id = select_best(records)
        _log("train", f"selected circuit {circuit_id}")
    if circuit_id not in by_id:
        raise UnknownCircuitIdError(f"circuit '{circuit_id}' is not an accepted candidate")
    circuit = by_id[circuit_id]
    report, checkpoint, curve, seed = full_train_and_test(
        circuit, split, config.train, config.model, fingerprint
    )
    write_curve(config.out / "curves" / f"{circuit_id}_full.csv", curve)
    save_checkpoint(
        config.out / "checkpoints", checkpoint, config.model,
        circuit.num_qubits, circuit.trainable_param_count,
        name=f"{circuit_id}_final",
    )
    payload = report.to_dict()
    payload.update(
        {
            "source_id": circuit_id,
            "num_qubits": circuit.num_qubits,
            "trainable_params": circuit.trainable_param_count,
            "ablated": not config.model.skip_enabled,
            "evaluated_model": "best_validation",
            "fingerprint": fingerprint,
            "seed": seed,
        }
    )
    dump_json(config.out / "final_report.json", payload)
    _log(
        "train",
        f"test accuracy={report.accuracy:.4f} macro_f1={report.macro_f1:.4f} "
        f"roc_auc={report.roc_auc:.4f}",
    )


def cmd_run_all(config: RunConfig, circuit_id: str | None = None) -> None:
    cmd_preprocess(config)
    cmd_filter(config)
    cmd_screen(config)
    cmd_train(config, circuit_id)


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcscreen",
        description="Filter a QASM corpus, rank candidates in a hybrid "
        "classifier, and fully train the winner.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("preprocess", "filter", "screen", "train", "run-all"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, type=Path, help="JSON run configuration")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--workers", type=int, help="parallel workers")
        if name in ("train", "run-all"):
            sp.add_argument("--circuit", help="train this source id instead of the argmax")
            sp.add_argument(
                "--no-skip", action="store_true", help="ablate the residual skip connection"
            )
        if name in ("preprocess", "run-all"):
            sp.add_argument(
                "--split-first",
                action="store_true",
                help="split before balancing (leakage-free variant)",
            )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides: dict = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if getattr(args, "no_skip", False):
        overrides["no_skip"] = True
    if getattr(args, "split_first", False):
        overrides["split_first"] = True
    try:
        config = RunConfig.load(args.config, overrides)
        if args.command == "preprocess":
            cmd_preprocess(config)
        elif args.command == "filter":
            cmd_filter(config)
        elif args.command == "screen":
            cmd_screen(config)
        elif args.command == "train":
            cmd_train(config, getattr(args, "circuit", None))
        else:
            cmd_run_all(config, getattr(args, "circuit", None))
        return 0
    except (QcScreenError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
