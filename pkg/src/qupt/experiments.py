"""Scenario runner: wire the trained model, an attack, a device config and
a backend together into one evaluation report row.

A scenario evaluates every test image by compiling the (possibly
trojan-implanted) variational stage against the device config, executing
the lowered program on the ideal or trajectory backend, and scoring with
the model's sigmoid head.  The quanvolution stage always runs ideally.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .circuits import Circuit, GateKind, ry
from .compiler import DeviceConfig, LoweredProgram, compile_circuit, load_config
from .metrics import EvalReport, compute_metrics
from .model import (
    CONV_LAYERS,
    CONV_QUBITS,
    KERNEL,
    STRIDE,
    VQC_LAYERS,
    VQC_QUBITS,
    N_CONV,
    N_VQC,
    POOL_PARAMS,
    QnnParams,
    build_vqc_circuit,
    features_batch,
    sigmoid,
)
from .noise import IDEAL, NoiseSpec, TrajectoryPlan, estimate_expectation
from .simulator import apply_op_rows, apply_ry_rows, expectation_z_rows, zero_rows
from .trojans import TrojanSpec, default_insertion_point, implant
from . import trojans

MODEL_SCHEMA_VERSION = 1

_ARCH = {
    "conv_qubits": CONV_QUBITS,
    "conv_layers": CONV_LAYERS,
    "vqc_qubits": VQC_QUBITS,
    "vqc_layers": VQC_LAYERS,
    "kernel": KERNEL,
    "stride": STRIDE,
}


class ScenarioError(ValueError):
    """A scenario that cannot be executed as described."""


def save_model(path, params: QnnParams, metadata: dict | None = None) -> None:
    doc = {
        "schema_version": MODEL_SCHEMA_VERSION,
        "arch": dict(_ARCH),
        "params": {
            "conv": params.conv.tolist(),
            "pool": params.pool.tolist(),
            "vqc": params.vqc.tolist(),
        },
        "metadata": metadata or {},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_model(path) -> tuple[QnnParams, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise ValueError(f"unsupported model schema_version {doc.get('schema_version')!r}")
    if doc.get("arch") != _ARCH:
        raise ValueError(f"model architecture mismatch: {doc.get('arch')}")
    p = doc["params"]
    if (
        len(p.get("conv", ())) != N_CONV
        or len(p.get("pool", ())) != POOL_PARAMS
        or len(p.get("vqc", ())) != N_VQC
    ):
        raise ValueError("model parameter blocks have the wrong sizes")
    params = QnnParams(
        np.array(p["conv"]), np.array(p["pool"]), np.array(p["vqc"])
    )
    return params, doc.get("metadata", {})


@dataclass
class Scenario:
    model_path: str | None = None
    backend: str = "ideal"  # "ideal" | "noisy"
    noise: NoiseSpec | None = None  # noisy backend; None defers to the config
    n_trajectories: int = 200
    shots: int | None = None
    attack: str = "none"  # "none" | "A" | "B" | "C"
    trojan: TrojanSpec | None = None
    config_path: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.backend not in ("ideal", "noisy"):
            raise ScenarioError(f"unknown backend {self.backend!r}")
        if self.attack not in ("none", "A", "B", "C"):
            raise ScenarioError(f"unknown attack {self.attack!r}")
        if self.attack in ("B", "C") and self.config_path is None:
            raise ScenarioError(
                f"attack {self.attack} needs a device config to resolve its trigger"
            )


def _default_trojan(attack: str, seed: int) -> TrojanSpec:
    ancilla = None if attack == "A" else VQC_QUBITS
    return TrojanSpec(attack, ancilla=ancilla, param_seed=seed)


def build_attacked_circuit(params: QnnParams, attack: str, trojan: TrojanSpec | None, seed: int) -> Circuit:
    """Host variational circuit with the scenario's attack implanted."""
    host = build_vqc_circuit(
        np.zeros(VQC_QUBITS), params, ancilla=attack in ("B", "C")
    )
    if attack == "none":
        return host
    spec = trojan if trojan is not None else _default_trojan(attack, seed)
    if spec.trojan_class != attack:
        raise ScenarioError(
            f"trojan spec class {spec.trojan_class} does not match attack {attack}"
        )
    builder = {
        "A": trojans.build_class_a,
        "B": trojans.build_class_b,
        "C": trojans.build_class_c,
    }[attack]
    block = builder(VQC_QUBITS, spec)
    return implant(host, block, default_insertion_point(attack))


def _encoder_slots(program: LoweredProgram) -> list[tuple[int, int]]:
    """Positions and targets of the host encoder ops (first 8 host RY gates)."""
    slots = []
    for idx, op in enumerate(program.ops):
        if op.tag != "host":
            continue
        if op.kind is not GateKind.RY or op.controls:
            raise ScenarioError("host circuit does not start with an RY encoder")
        slots.append((idx, op.targets[0]))
        if len(slots) == VQC_QUBITS:
            return slots
    raise ScenarioError("host circuit has fewer encoder gates than features")


def _program_scores_ideal(program: LoweredProgram, features: np.ndarray) -> np.ndarray:
    slots = dict(_encoder_slots(program))
    n = program.num_qubits
    amps = zero_rows(n, features.shape[0])
    feature_index = 0
    for idx, op in enumerate(program.ops):
        if idx in slots:
            apply_ry_rows(amps, slots[idx], np.pi * features[:, feature_index], n)
            feature_index += 1
        else:
            apply_op_rows(amps, op, n)
    qubit = program.measured_qubit if program.measured_qubit is not None else 0
    return expectation_z_rows(amps, qubit, n)


def _program_scores_noisy(
    program: LoweredProgram,
    features: np.ndarray,
    noise: NoiseSpec,
    n_trajectories: int,
    shots: int | None,
    master_seed: int,
) -> np.ndarray:
    slots = _encoder_slots(program)
    slot_positions = {idx for idx, _ in slots}
    qubit = program.measured_qubit if program.measured_qubit is not None else 0
    values = np.empty(features.shape[0])
    for i in range(features.shape[0]):
        ops = []
        feature_index = 0
        for idx, op in enumerate(program.ops):
            if idx in slot_positions:
                target = dict(slots)[idx]
                ops.append(ry(target, np.pi * features[i, feature_index]))
                feature_index += 1
            else:
                ops.append(op)
        circuit = Circuit(program.num_qubits, tuple(ops), program.measured_qubit)
        plan = TrajectoryPlan(n_trajectories, shots, master_seed + i)
        values[i], _ = estimate_expectation(circuit, qubit, noise, plan)
    return values


def run_experiment(
    scenario: Scenario,
    test_images: np.ndarray,
    test_labels: np.ndarray,
    params: QnnParams | None = None,
) -> EvalReport:
    """Evaluate one scenario over a test set and return its report row."""
    if params is None:
        if scenario.model_path is None:
            raise ScenarioError("scenario names no model and none was supplied")
        params, _ = load_model(scenario.model_path)

    circuit = build_attacked_circuit(
        params, scenario.attack, scenario.trojan, scenario.seed
    )

    if scenario.config_path is not None:
        config = load_config(scenario.config_path)
    else:
        config = DeviceConfig(
            "ideal-device",
            circuit.num_qubits,
            scenario.noise if scenario.noise is not None else IDEAL,
        )

    program = compile_circuit(circuit, config, optimize=True)
    features = features_batch(np.asarray(test_images, dtype=np.float64), params)

    if scenario.backend == "ideal":
        m = _program_scores_ideal(program, features)
        noise_model = "Ideal"
    else:
        noise = scenario.noise if scenario.noise is not None else config.noise
        m = _program_scores_noisy(
            program,
            features,
            noise,
            scenario.n_trajectories,
            scenario.shots,
            scenario.seed,
        )
        noise_model = config.device_name if scenario.config_path else "noisy"

    scores = sigmoid(m)
    report = compute_metrics(scores, np.asarray(test_labels))
    report.scenario = {
        "noise_model": noise_model,
        "attack_class": scenario.attack,
        "backend": scenario.backend,
        "config_path": scenario.config_path,
        "model_path": scenario.model_path,
        "seed": scenario.seed,
        "n_trajectories": scenario.n_trajectories if scenario.backend == "noisy" else None,
        "shots": scenario.shots,
        "triggered": bool(scenario.config_path and not config.is_benign),
    }
    return report
