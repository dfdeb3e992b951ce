"""Command line entry points: train, eval, compile, report.

Exit codes: 0 success, 1 usage error, 2 data error, 3 scenario error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .compiler import ConfigError, compile_circuit, load_circuit_file, load_config
from .dataset import DatasetError, load_mnist_idx
from .experiments import Scenario, ScenarioError, run_experiment, save_model
from .metrics import EvalReport, render_report
from .model import VQC_QUBITS
from .training import TrainConfig, train
from .trojans import TrojanSpec

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_SCENARIO = 3

_IMAGE_NAMES = ("train-images-idx3-ubyte", "train-images.idx3-ubyte")
_LABEL_NAMES = ("train-labels-idx1-ubyte", "train-labels.idx1-ubyte")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _find_data_files(data_dir: str) -> tuple[Path, Path]:
    root = Path(data_dir)
    image = label = None
    for name in _IMAGE_NAMES:
        for candidate in (root / name, root / (name + ".gz")):
            if candidate.exists():
                image = candidate
                break
        if image:
            break
    for name in _LABEL_NAMES:
        for candidate in (root / name, root / (name + ".gz")):
            if candidate.exists():
                label = candidate
                break
        if label:
            break
    if image is None or label is None:
        raise DatasetError(f"no MNIST IDX files found under {root}")
    return image, label


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--data-dir",
        default=os.environ.get("QUPT_DATA_DIR"),
        help="directory with MNIST IDX files (default: $QUPT_DATA_DIR)",
    )
    p.add_argument("--n-train", type=int, default=2000)
    p.add_argument("--n-test", type=int, default=200)


def _load_split(args):
    if not args.data_dir:
        raise DatasetError("no data directory (use --data-dir or QUPT_DATA_DIR)")
    image_path, label_path = _find_data_files(args.data_dir)
    return load_mnist_idx(
        image_path,
        label_path,
        n_train=args.n_train,
        n_test=args.n_test,
        seed=args.seed,
    )


def _cmd_train(args) -> int:
    split = _load_split(args)
    config = TrainConfig(
        lr0=args.lr,
        step_size=args.step_size,
        gamma=args.gamma,
        batch_size=args.batch_size,
        epochs=args.epochs,
        seed=args.seed,
    )
    params, history = train(split.train_images, split.train_labels, config)
    save_model(
        args.out,
        params,
        metadata={
            "seed": args.seed,
            "epochs": args.epochs,
            "train_size": int(split.train_images.shape[0]),
            "lr0": args.lr,
        },
    )
    if args.history:
        Path(args.history).write_text(history.to_csv(), encoding="utf-8")
    last = history.accuracy[-1] if len(history) else float("nan")
    print(f"trained {args.epochs} epochs; train accuracy {last:.3f}; model -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    split = _load_split(args)
    attack = args.attack.upper() if args.attack != "none" else "none"
    trojan = None
    if attack != "none":
        trojan = TrojanSpec(
            attack,
            repetitions=args.reps,
            depth_d=args.depth,
            ancilla=None if attack == "A" else VQC_QUBITS,
            param_seed=args.param_seed,
        )
    scenario = Scenario(
        model_path=args.model,
        backend=args.backend,
        n_trajectories=args.trajectories,
        shots=args.shots,
        attack=attack,
        trojan=trojan,
        config_path=args.config,
        seed=args.seed,
    )
    report = run_experiment(scenario, split.test_images, split.test_labels)
    if args.out:
        Path(args.out).write_text(report.dumps(), encoding="utf-8")
    print(render_report([report]))
    return 0


def _cmd_compile(args) -> int:
    circuit = load_circuit_file(args.circuit)
    config = load_config(args.config)
    program = compile_circuit(circuit, config, optimize=args.optimize)
    text = program.dumps()
    if args.emit:
        Path(args.emit).write_text(text, encoding="utf-8")
        print(f"lowered {len(program.ops)} instructions -> {args.emit}")
    else:
        print(text)
    return 0


def _cmd_report(args) -> int:
    reports = []
    for path in args.inputs:
        reports.append(EvalReport.from_dict(json.loads(Path(path).read_text())))
    print(render_report(reports, fmt=args.format), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qupt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the classifier", parents=[])
    _add_data_args(p)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--step-size", type=int, default=10)
    p.add_argument("--gamma", type=float, default=0.75)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model JSON output path")
    p.add_argument("--history", help="optional training-history CSV path")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a scenario")
    _add_data_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--attack", choices=["none", "a", "b", "c"], default="none")
    p.add_argument("--backend", choices=["ideal", "noisy"], default="ideal")
    p.add_argument("--config", help="device config JSON path")
    p.add_argument("--trajectories", type=int, default=200)
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--param-seed", type=int, default=7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="report JSON output path")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("compile", help="lower a circuit against a config")
    p.add_argument("--circuit", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--optimize", action="store_true")
    p.add_argument("--emit", help="program JSON output path")
    p.set_defaults(func=_cmd_compile)

    p = sub.add_parser("report", help="render report files")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--format", choices=["table", "csv"], default="table")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except DatasetError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConfigError, ScenarioError, FileNotFoundError, ValueError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO


if __name__ == "__main__":
    sys.exit(main())
