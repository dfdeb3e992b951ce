"""Builders for the three attack-circuit classes and the retention shield.

Class A is a noise injector: repeated U_i-then-U_i-inverse pairs that are
the exact identity on an ideal backend but accumulate depolarizing error on
hardware.  Class B is class A with every gate controlled on an extra
ancilla wire, so a config-file trigger decides whether the injector runs.
Class C puts a controlled Hadamard on every data qubit, scrambling the
encoded state by interference when triggered.

Classes B and C end with a shield: a cross-connected CNOT pair tying the
otherwise idle ancilla to a data qubit so idle-wire elimination cannot
delete it.  The builders anchor the shield on the last data qubit, which
commutes with the measured observable whether or not the trigger fired;
anchoring the measured qubit would X-flip it on every triggered run.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .circuits import (
    Circuit,
    GateOp,
    GateKind,
    adjoint,
    cnot,
    h,
    ising_xx,
    ising_yy,
    ising_zz,
    swap,
    with_control,
)

DEFAULT_REPETITIONS = 50
DEFAULT_DEPTH = 3


class InsertionPoint(enum.Enum):
    AFTER_ENCODER = "after_encoder"
    BEFORE_MEASUREMENT = "before_measurement"


@dataclass(frozen=True)
class TrojanSpec:
    trojan_class: str  # "A", "B" or "C"
    repetitions: int = DEFAULT_REPETITIONS
    depth_d: int = DEFAULT_DEPTH
    ancilla: int | None = None
    param_seed: int = 0

    def __post_init__(self):
        if self.trojan_class not in ("A", "B", "C"):
            raise ValueError(f"unknown trojan class {self.trojan_class!r}")
        if self.repetitions < 1 or self.depth_d < 1:
            raise ValueError("repetitions and depth_d must be >= 1")
        if self.trojan_class == "A" and self.ancilla is not None:
            raise ValueError("class A carries no ancilla")
        if self.trojan_class in ("B", "C") and self.ancilla is None:
            raise ValueError(f"class {self.trojan_class} requires an ancilla index")

    def to_dict(self) -> dict:
        return {
            "class": self.trojan_class,
            "repetitions": self.repetitions,
            "depth_d": self.depth_d,
            "ancilla": self.ancilla,
            "param_seed": self.param_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrojanSpec":
        return cls(
            d["class"],
            d.get("repetitions", DEFAULT_REPETITIONS),
            d.get("depth_d", DEFAULT_DEPTH),
            d.get("ancilla"),
            d.get("param_seed", 0),
        )


def default_insertion_point(trojan_class: str) -> InsertionPoint:
    return (
        InsertionPoint.AFTER_ENCODER
        if trojan_class == "C"
        else InsertionPoint.BEFORE_MEASUREMENT
    )


def _ring_pairs(n_qubits: int) -> list[tuple[int, int]]:
    # a ring of size 2 wraps around to both ordered pairs
    return [(q, (q + 1) % n_qubits) for q in range(n_qubits)]


def pair_angles(param_seed: int, pair_index: int, n_qubits: int) -> np.ndarray:
    """Angle set (3, n) of one U-pair: rows are the XX, YY, ZZ ring angles."""
    rng = np.random.default_rng([param_seed, pair_index])
    return rng.uniform(0.0, 2.0 * np.pi, (3, n_qubits))


def build_ui_block(n_qubits: int, angles: np.ndarray) -> Circuit:
    """One attack block: Hadamards, then CNOT / XX / YY / ZZ / SWAP rings."""
    if n_qubits < 2:
        raise ValueError("attack block needs at least 2 qubits")
    angles = np.asarray(angles, dtype=np.float64)
    if angles.shape != (3, n_qubits):
        raise ValueError(f"expected (3, {n_qubits}) angles, got {angles.shape}")
    ops: list[GateOp] = [h(q, tag="trojan") for q in range(n_qubits)]
    pairs = _ring_pairs(n_qubits)
    ops += [cnot(a, b, tag="trojan") for a, b in pairs]
    ops += [ising_xx(a, b, angles[0, a], tag="trojan") for a, b in pairs]
    ops += [ising_yy(a, b, angles[1, a], tag="trojan") for a, b in pairs]
    ops += [ising_zz(a, b, angles[2, a], tag="trojan") for a, b in pairs]
    ops += [swap(a, b, tag="trojan") for a, b in pairs]
    return Circuit(n_qubits, ops)


def build_class_a(n_qubits: int, spec: TrojanSpec) -> Circuit:
    """Noise injector: ``repetitions`` U-then-U-inverse pairs.

    Each U_i stacks ``depth_d`` blocks sharing that pair's angle set, so
    the whole circuit is the exact identity as a unitary.
    """
    if spec.trojan_class != "A":
        raise ValueError("spec is not class A")
    ops: list[GateOp] = []
    for i in range(spec.repetitions):
        block = build_ui_block(n_qubits, pair_angles(spec.param_seed, i, n_qubits))
        u_i = Circuit(n_qubits, block.ops * spec.depth_d)
        ops.extend(u_i.ops)
        ops.extend(adjoint(u_i).ops)
    return Circuit(n_qubits, ops)


def build_trojan_shield(
    ancilla: int, anchor: int, num_qubits: int | None = None
) -> Circuit:
    """Cross-connected CNOT pair tying the ancilla to an anchor qubit.

    With the ancilla in |0> the first CNOT is inactive and the second only
    uses the anchor as a control, so the anchor's measured statistics are
    untouched; either way the ancilla now appears in ops and survives
    idle-qubit elimination.
    """
    if ancilla == anchor:
        raise ValueError("ancilla and anchor must differ")
    width = max(ancilla, anchor) + 1 if num_qubits is None else num_qubits
    return Circuit(
        width,
        (
            cnot(ancilla, anchor, tag="shield"),
            cnot(anchor, ancilla, tag="shield"),
        ),
    )


def build_class_b(n_qubits: int, spec: TrojanSpec) -> Circuit:
    """Class A with every gate controlled on the ancilla, plus the shield.

    No X gate is included anywhere; the trigger arrives only as a compile
    prelude instruction flipping the ancilla.
    """
    if spec.trojan_class != "B":
        raise ValueError("spec is not class B")
    ancilla = spec.ancilla
    base = build_class_a(
        n_qubits,
        TrojanSpec("A", spec.repetitions, spec.depth_d, None, spec.param_seed),
    )
    width = max(n_qubits, ancilla + 1)
    ops = [with_control(op, ancilla) for op in base.ops]
    shield = build_trojan_shield(ancilla, n_qubits - 1, width)
    return Circuit(width, tuple(ops) + shield.ops)


def build_class_c(n_qubits: int, spec: TrojanSpec) -> Circuit:
    """Hadamard implant: an ancilla-controlled H on every data qubit.

    Triggered on the encoded state it applies the Fourier transform over
    Z_2^n, driving amplitudes to 2^{-n/2} (-1)^{x.z} interference patterns.
    """
    if spec.trojan_class != "C":
        raise ValueError("spec is not class C")
    ancilla = spec.ancilla
    width = max(n_qubits, ancilla + 1)
    ops = [with_control(h(q, tag="trojan"), ancilla) for q in range(n_qubits)]
    shield = build_trojan_shield(ancilla, n_qubits - 1, width)
    return Circuit(width, tuple(ops) + shield.ops)


def _encoder_prefix_len(host: Circuit) -> int:
    n = 0
    for op in host.ops:
        if op.kind is GateKind.RY and not op.controls:
            n += 1
        else:
            break
    return n


def _shield_suffix_len(ops: tuple[GateOp, ...]) -> int:
    n = 0
    for op in reversed(ops):
        if op.tag == "shield":
            n += 1
        else:
            break
    return n


def implant(host: Circuit, trojan: Circuit, point: InsertionPoint) -> Circuit:
    """Splice a trojan into a host circuit at the named point.

    The trojan's trailing shield ops always land at the very end of the
    result (last before measurement); the attack core goes either right
    after the host's leading encoder run or after the last host gate.
    Host ops keep their order.
    """
    if trojan.num_qubits > host.num_qubits:
        raise ValueError(
            f"trojan needs {trojan.num_qubits} wires, host has {host.num_qubits}"
        )
    shield_len = _shield_suffix_len(trojan.ops)
    core = trojan.ops[: len(trojan.ops) - shield_len]
    shield = trojan.ops[len(trojan.ops) - shield_len :]

    host_shield_len = _shield_suffix_len(host.ops)
    if point is InsertionPoint.AFTER_ENCODER:
        cut = _encoder_prefix_len(host)
    elif point is InsertionPoint.BEFORE_MEASUREMENT:
        cut = len(host.ops) - host_shield_len
    else:
        raise ValueError(f"unknown insertion point {point!r}")

    ops = host.ops[:cut] + core + host.ops[cut:] + shield
    return Circuit(host.num_qubits, ops, host.measured_qubit)
