"""Config-file-driven compilation: parse device configs, lower circuits to
flat instruction programs, optimize, and prepend attacker prelude gates.

The device configuration file is the whole attack surface, so parsing is
strict: unknown fields are rejected, prelude gates are limited to
parameterless X and H, and targets are bounds-checked against the device.
Compilation prepends the prelude instructions (the trigger), then emits the
host ops, optionally after idle-qubit elimination.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .circuits import (
    Circuit,
    GateOp,
    GateKind,
    circuit_from_dict,
    h,
    op_from_dict,
    op_to_dict,
    ry,
    x,
)
from .gates import SELF_INVERSE, SYMMETRIC_2Q, N_PARAMS
from .noise import NoiseSpec
from .simulator import Statevector, apply_circuit, circuit_unitary, expectation_z

SCHEMA_VERSION = 1
_DENSE_VERIFY_MAX_QUBITS = 6
_PRELUDE_GATES = {"X": x, "H": h}


class ConfigError(ValueError):
    """Malformed or schema-violating device configuration."""


@dataclass(frozen=True)
class DeviceConfig:
    device_name: str
    num_qubits: int
    noise: NoiseSpec
    prelude: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ConfigError("device needs at least one qubit")
        for gate, target in self.prelude:
            if gate not in _PRELUDE_GATES:
                raise ConfigError(f"prelude gate {gate!r} not in {{X, H}}")
            if not 0 <= target < self.num_qubits:
                raise ConfigError(f"prelude target {target} out of device range")

    @property
    def is_benign(self) -> bool:
        return not self.prelude

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "device_name": self.device_name,
            "num_qubits": self.num_qubits,
            "noise": {"r1q": self.noise.r1q, "r2q": self.noise.r2q},
            "prelude": [{"gate": g, "target": t} for g, t in self.prelude],
        }


def _require_keys(d: dict, keys: set[str], what: str) -> None:
    extra = set(d) - keys
    if extra:
        raise ConfigError(f"unknown {what} fields: {sorted(extra)}")
    missing = keys - set(d)
    if missing:
        raise ConfigError(f"missing {what} fields: {sorted(missing)}")


def parse_config(text: str | bytes) -> DeviceConfig:
    """Parse and validate a device configuration file."""
    try:
        data = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"malformed config JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    _require_keys(
        data,
        {"schema_version", "device_name", "num_qubits", "noise", "prelude"},
        "config",
    )
    if data["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {data['schema_version']!r}")
    _require_keys(data["noise"], {"r1q", "r2q"}, "noise")
    try:
        noise = NoiseSpec(float(data["noise"]["r1q"]), float(data["noise"]["r2q"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad noise rates: {exc}") from exc
    prelude = []
    if not isinstance(data["prelude"], list):
        raise ConfigError("prelude must be a list")
    for entry in data["prelude"]:
        if not isinstance(entry, dict):
            raise ConfigError("prelude entries must be objects")
        _require_keys(entry, {"gate", "target"}, "prelude")
        prelude.append((entry["gate"], int(entry["target"])))
    return DeviceConfig(
        str(data["device_name"]), int(data["num_qubits"]), noise, tuple(prelude)
    )


def load_config(path) -> DeviceConfig:
    with open(path, "rb") as fh:
        return parse_config(fh.read())


@dataclass(frozen=True)
class LoweredProgram:
    num_qubits: int
    ops: tuple[GateOp, ...]
    measured_qubit: int | None

    @property
    def provenance(self) -> tuple[str, ...]:
        return tuple(op.tag for op in self.ops)

    def as_circuit(self) -> Circuit:
        return Circuit(self.num_qubits, self.ops, self.measured_qubit)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "num_qubits": self.num_qubits,
            "measured_qubit": self.measured_qubit,
            "ops": [op_to_dict(op, with_provenance=True) for op in self.ops],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "LoweredProgram":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {d.get('schema_version')!r}")
        return cls(
            int(d["num_qubits"]),
            tuple(op_from_dict(o) for o in d["ops"]),
            d["measured_qubit"],
        )


def eliminate_idle_qubits(circuit: Circuit) -> tuple[Circuit, dict[int, int]]:
    """Drop qubits no op touches (keeping the measured one); reindex densely.

    Returns the slimmed circuit and the old-to-new index mapping of the
    surviving qubits.
    """
    used: set[int] = set()
    for op in circuit.ops:
        used |= op.wires
    if circuit.measured_qubit is not None:
        used.add(circuit.measured_qubit)
    if not used:
        used = {0}
    kept = sorted(used)
    mapping = {old: new for new, old in enumerate(kept)}
    if len(kept) == circuit.num_qubits:
        return circuit, mapping
    ops = []
    for op in circuit.ops:
        ops.append(
            GateOp(
                op.kind,
                tuple(mapping[t] for t in op.targets),
                frozenset(mapping[c] for c in op.controls),
                op.params,
                tag=op.tag,
            )
        )
    measured = (
        mapping[circuit.measured_qubit] if circuit.measured_qubit is not None else None
    )
    return Circuit(len(kept), tuple(ops), measured), mapping


def _are_inverses(a: GateOp, b: GateOp) -> bool:
    if a.kind is not b.kind or a.controls != b.controls:
        return False
    if a.kind in SYMMETRIC_2Q:
        if set(a.targets) != set(b.targets):
            return False
    elif a.targets != b.targets:
        return False
    if a.kind in SELF_INVERSE:
        return True
    if N_PARAMS[a.kind] == 0:
        return False
    if a.kind is GateKind.Rot:
        pa, ta, oa = a.params
        pb, tb, ob = b.params
        return pb == -oa and tb == -ta and ob == -pa
    return all(pb == -pa for pa, pb in zip(a.params, b.params))


def cancel_adjacent_inverses(circuit: Circuit) -> Circuit:
    """Remove adjacent exact-inverse op pairs until no pair remains.

    Off by default in the pipeline: aggressive enough to erase an
    identity-telescoping attack circuit entirely, which the detectability
    experiment demonstrates on purpose.
    """
    stack: list[GateOp] = []
    for op in circuit.ops:
        if stack and _are_inverses(stack[-1], op):
            stack.pop()
        else:
            stack.append(op)
    return Circuit(circuit.num_qubits, tuple(stack), circuit.measured_qubit)


def compile_circuit(
    circuit: Circuit, config: DeviceConfig, optimize: bool = True
) -> LoweredProgram:
    """Lower a circuit against a device config: prelude first, then host ops.

    With ``optimize`` the host passes through idle-qubit elimination first;
    prelude targets that named an eliminated (or never-used) device qubit
    land on fresh appended wires, where they cannot couple to the program.
    """
    if circuit.num_qubits > config.num_qubits:
        raise ValueError(
            f"circuit needs {circuit.num_qubits} qubits, device has "
            f"{config.num_qubits}"
        )
    if optimize:
        host, mapping = eliminate_idle_qubits(circuit)
    else:
        host, mapping = circuit, {q: q for q in range(circuit.num_qubits)}

    width = host.num_qubits
    prelude_ops = []
    extra: dict[int, int] = {}
    for gate, target in config.prelude:
        if target in mapping:
            wire = mapping[target]
        else:
            if target not in extra:
                extra[target] = width
                width += 1
            wire = extra[target]
        prelude_ops.append(_PRELUDE_GATES[gate](wire, tag="prelude"))

    return LoweredProgram(
        width,
        tuple(prelude_ops) + host.ops,
        host.measured_qubit,
    )


def _as_circuit(obj) -> Circuit:
    return obj.as_circuit() if isinstance(obj, LoweredProgram) else obj


def verify_equivalence(
    a, b, n_probes: int = 10, atol: float = 1e-10, seed: int = 0
) -> bool:
    """Check two circuits/programs for observational equivalence.

    After aligning widths by idle elimination, small circuits are compared
    as dense unitaries; larger ones by the measured-qubit <Z> on random
    product-state probes.
    """
    ca, _ = eliminate_idle_qubits(_as_circuit(a))
    cb, _ = eliminate_idle_qubits(_as_circuit(b))
    if ca.num_qubits != cb.num_qubits:
        raise ValueError(
            f"width mismatch after alignment: {ca.num_qubits} vs {cb.num_qubits}"
        )
    if ca.num_qubits <= _DENSE_VERIFY_MAX_QUBITS:
        return bool(
            np.max(np.abs(circuit_unitary(ca) - circuit_unitary(cb))) <= atol
        )
    qubit = ca.measured_qubit if ca.measured_qubit is not None else 0
    rng = np.random.default_rng(seed)
    n = ca.num_qubits
    for _ in range(n_probes):
        prep = Circuit(n, tuple(ry(q, rng.uniform(0, np.pi)) for q in range(n)))
        probe = apply_circuit(Statevector.zero(n), prep)
        za = expectation_z(apply_circuit(probe, ca), qubit)
        zb = expectation_z(apply_circuit(probe, cb), qubit)
        if abs(za - zb) > atol:
            return False
    return True


def load_circuit_file(path) -> Circuit:
    with open(path, "rb") as fh:
        return circuit_from_dict(json.loads(fh.read()))
