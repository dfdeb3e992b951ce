"""Circuit IR: gate operations, circuits, adjoints, controls, JSON schema.

A :class:`GateOp` is a gate kind plus ordered target qubits, an unordered
set of control qubits, real angle parameters, and a provenance tag.  The
tag records which pipeline stage emitted the op (``host``, ``trojan``,
``shield``, or ``prelude``) and is carried through every transformation so
the lowered program can report an exact provenance partition.

A :class:`Circuit` is an ordered op list over a fixed number of qubits with
an optional measured qubit.  Circuits are immutable after construction and
safe to share between threads.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .gates import (
    N_PARAMS,
    N_TARGETS,
    NEEDS_CONTROL,
    SELF_INVERSE,
    GateKind,
)

PROVENANCE_TAGS = ("prelude", "host", "trojan", "shield")


@dataclass(frozen=True)
class GateOp:
    kind: GateKind
    targets: tuple[int, ...]
    controls: frozenset[int] = frozenset()
    params: tuple[float, ...] = ()
    tag: str = "host"

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "controls", frozenset(int(c) for c in self.controls))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(self.targets) != N_TARGETS[self.kind]:
            raise ValueError(
                f"{self.kind.value} takes {N_TARGETS[self.kind]} target(s), "
                f"got {self.targets}"
            )
        if len(self.params) != N_PARAMS[self.kind]:
            raise ValueError(
                f"{self.kind.value} takes {N_PARAMS[self.kind]} parameter(s), "
                f"got {len(self.params)}"
            )
        wires = list(self.targets) + list(self.controls)
        if len(set(wires)) != len(wires):
            raise ValueError(f"duplicate qubit in targets/controls: {wires}")
        if any(w < 0 for w in wires):
            raise ValueError(f"negative qubit index in {wires}")
        if self.kind in NEEDS_CONTROL and not self.controls:
            raise ValueError(f"{self.kind.value} requires at least one control")
        if self.tag not in PROVENANCE_TAGS:
            raise ValueError(f"unknown provenance tag {self.tag!r}")

    @property
    def wires(self) -> frozenset[int]:
        return frozenset(self.targets) | self.controls


# -- op factories -------------------------------------------------------

def h(q: int, tag: str = "host") -> GateOp:
    return GateOp(GateKind.H, (q,), tag=tag)


def x(q: int, tag: str = "host") -> GateOp:
    return GateOp(GateKind.X, (q,), tag=tag)


def rx(q: int, theta: float, tag: str = "host") -> GateOp:
    return GateOp(GateKind.RX, (q,), params=(theta,), tag=tag)


def ry(q: int, theta: float, tag: str = "host") -> GateOp:
    return GateOp(GateKind.RY, (q,), params=(theta,), tag=tag)


def rz(q: int, theta: float, tag: str = "host") -> GateOp:
    return GateOp(GateKind.RZ, (q,), params=(theta,), tag=tag)


def rot(q: int, phi: float, theta: float, omega: float, tag: str = "host") -> GateOp:
    return GateOp(GateKind.Rot, (q,), params=(phi, theta, omega), tag=tag)


def cnot(control: int, target: int, tag: str = "host") -> GateOp:
    return GateOp(GateKind.CNOT, (target,), frozenset({control}), tag=tag)


def crz(control: int, target: int, theta: float, tag: str = "host") -> GateOp:
    return GateOp(GateKind.CRZ, (target,), frozenset({control}), (theta,), tag=tag)


def swap(a: int, b: int, tag: str = "host") -> GateOp:
    return GateOp(GateKind.SWAP, (a, b), tag=tag)


def ising_xx(a: int, b: int, theta: float, tag: str = "host") -> GateOp:
    return GateOp(GateKind.IsingXX, (a, b), params=(theta,), tag=tag)


def ising_yy(a: int, b: int, theta: float, tag: str = "host") -> GateOp:
    return GateOp(GateKind.IsingYY, (a, b), params=(theta,), tag=tag)


def ising_zz(a: int, b: int, theta: float, tag: str = "host") -> GateOp:
    return GateOp(GateKind.IsingZZ, (a, b), params=(theta,), tag=tag)


def with_control(op: GateOp, control: int) -> GateOp:
    """Return ``op`` with one more control qubit.

    On any state where ``control`` is |0> the returned op acts as identity.
    """
    control = int(control)
    if control in op.targets or control in op.controls:
        raise ValueError(f"qubit {control} already used by {op}")
    return dataclasses.replace(op, controls=op.controls | {control})


def inverse_op(op: GateOp) -> GateOp:
    """Inverse of a single op (angles negated, Rot angles also reversed)."""
    if op.kind in SELF_INVERSE:
        return op
    if op.kind is GateKind.Rot:
        phi, theta, omega = op.params
        return dataclasses.replace(op, params=(-omega, -theta, -phi))
    return dataclasses.replace(op, params=tuple(-p for p in op.params))


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    ops: tuple[GateOp, ...] = ()
    measured_qubit: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        if self.num_qubits < 1:
            raise ValueError("circuit needs at least one qubit")
        for op in self.ops:
            if max(op.wires) >= self.num_qubits:
                raise ValueError(
                    f"op {op} references qubit >= num_qubits={self.num_qubits}"
                )
        if self.measured_qubit is not None and not (
            0 <= self.measured_qubit < self.num_qubits
        ):
            raise ValueError(f"measured_qubit {self.measured_qubit} out of range")

    def __add__(self, other: "Circuit") -> "Circuit":
        if self.num_qubits != other.num_qubits:
            raise ValueError(
                f"cannot concatenate circuits of widths "
                f"{self.num_qubits} and {other.num_qubits}"
            )
        measured = (
            self.measured_qubit
            if self.measured_qubit is not None
            else other.measured_qubit
        )
        return Circuit(self.num_qubits, self.ops + other.ops, measured)

    def __len__(self) -> int:
        return len(self.ops)

    def widened(self, num_qubits: int) -> "Circuit":
        """Same ops on a wider register (extra qubits are idle)."""
        if num_qubits < self.num_qubits:
            raise ValueError("widened() cannot shrink a circuit")
        return Circuit(num_qubits, self.ops, self.measured_qubit)


def adjoint(circuit: Circuit) -> Circuit:
    """Reverse the op order and invert every op.

    ``apply_circuit(adjoint(c))`` undoes ``apply_circuit(c)`` exactly.
    """
    return Circuit(
        circuit.num_qubits,
        tuple(inverse_op(op) for op in reversed(circuit.ops)),
        circuit.measured_qubit,
    )


# -- JSON schema (version 1) --------------------------------------------

SCHEMA_VERSION = 1

_OP_KEYS = {"kind", "targets", "controls", "params"}
_CIRCUIT_KEYS = {"schema_version", "num_qubits", "measured_qubit", "ops"}


def op_to_dict(op: GateOp, with_provenance: bool = False) -> dict:
    d = {
        "kind": op.kind.value,
        "targets": list(op.targets),
        "controls": sorted(op.controls),
        "params": list(op.params),
    }
    if with_provenance:
        d["provenance"] = op.tag
    return d


def op_from_dict(d: dict) -> GateOp:
    keys = set(d)
    extra = keys - _OP_KEYS - {"provenance"}
    if extra:
        raise ValueError(f"unknown op fields: {sorted(extra)}")
    missing = _OP_KEYS - keys
    if missing:
        raise ValueError(f"missing op fields: {sorted(missing)}")
    try:
        kind = GateKind(d["kind"])
    except ValueError:
        raise ValueError(f"unknown gate kind {d['kind']!r}") from None
    return GateOp(
        kind,
        tuple(d["targets"]),
        frozenset(d["controls"]),
        tuple(d["params"]),
        tag=d.get("provenance", "host"),
    )


def circuit_to_dict(circuit: Circuit) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "num_qubits": circuit.num_qubits,
        "measured_qubit": circuit.measured_qubit,
        "ops": [op_to_dict(op) for op in circuit.ops],
    }


def circuit_from_dict(d: dict) -> Circuit:
    extra = set(d) - _CIRCUIT_KEYS
    if extra:
        raise ValueError(f"unknown circuit fields: {sorted(extra)}")
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(
            f"unsupported schema_version {d.get('schema_version')!r}"
        )
    return Circuit(
        int(d["num_qubits"]),
        tuple(op_from_dict(o) for o in d["ops"]),
        d["measured_qubit"],
    )


def dumps_circuit(circuit: Circuit) -> str:
    return json.dumps(circuit_to_dict(circuit))


def loads_circuit(text: str | bytes) -> Circuit:
    return circuit_from_dict(json.loads(text))
