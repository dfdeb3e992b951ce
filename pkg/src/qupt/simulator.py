"""Exact statevector simulation with bit-masked amplitude kernels.

Gates are applied by updating amplitude pairs (single-target) or quads
(two-target) selected with cached index arrays, never by building the full
2^n x 2^n unitary.  Controls restrict the index set to basis states where
every control bit is 1, so amplitudes outside that subspace are untouched
bit for bit.

All kernels operate on a 2-D array of row statevectors; the single-state
API is a one-row view of the same code path, which keeps batched and
unbatched results bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .circuits import Circuit, GateOp
from .gates import GateKind, _matrix_cached


@dataclass
class Statevector:
    amplitudes: np.ndarray
    num_qubits: int

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.num_qubits,):
            raise ValueError(
                f"expected {1 << self.num_qubits} amplitudes, "
                f"got shape {self.amplitudes.shape}"
            )

    @classmethod
    def zero(cls, num_qubits: int) -> "Statevector":
        return cls.basis(num_qubits, 0)

    @classmethod
    def basis(cls, num_qubits: int, index: int) -> "Statevector":
        if not 0 <= index < (1 << num_qubits):
            raise ValueError(f"basis index {index} out of range")
        amps = np.zeros(1 << num_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps, num_qubits)

    def copy(self) -> "Statevector":
        return Statevector(self.amplitudes.copy(), self.num_qubits)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.amplitudes.real**2 + self.amplitudes.imag**2)))


# -- cached index sets ----------------------------------------------------

def _control_mask(controls) -> int:
    mask = 0
    for c in controls:
        mask |= 1 << c
    return mask


def _insert_zero_bit(values: np.ndarray, position: int) -> np.ndarray:
    low = (1 << position) - 1
    return ((values & ~low) << 1) | (values & low)


@lru_cache(maxsize=None)
def _pair_indices(num_qubits: int, target: int, cmask: int):
    """Indices with the target bit 0 (and all control bits 1), plus partners."""
    base = _insert_zero_bit(np.arange(1 << (num_qubits - 1), dtype=np.intp), target)
    if cmask:
        base = base[(base & cmask) == cmask]
    i0 = base
    i1 = base | (1 << target)
    i0.setflags(write=False)
    i1.setflags(write=False)
    return i0, i1


@lru_cache(maxsize=None)
def _quad_indices(num_qubits: int, t0: int, t1: int, cmask: int):
    """Index quads for a two-target gate; local basis is bit(t0) + 2*bit(t1)."""
    lo, hi = sorted((t0, t1))
    base = np.arange(1 << (num_qubits - 2), dtype=np.intp)
    base = _insert_zero_bit(base, lo)
    base = _insert_zero_bit(base, hi)
    if cmask:
        base = base[(base & cmask) == cmask]
    quads = (
        base,
        base | (1 << t0),
        base | (1 << t1),
        base | (1 << t0) | (1 << t1),
    )
    for q in quads:
        q.setflags(write=False)
    return quads


@lru_cache(maxsize=None)
def _z_signs(num_qubits: int, qubit: int) -> np.ndarray:
    idx = np.arange(1 << num_qubits)
    signs = np.where((idx >> qubit) & 1, -1.0, 1.0)
    signs.setflags(write=False)
    return signs


@lru_cache(maxsize=None)
def _zero_mask(num_qubits: int, qubit: int) -> np.ndarray:
    idx = np.arange(1 << num_qubits)
    mask = np.where((idx >> qubit) & 1, 0.0, 1.0)
    mask.setflags(write=False)
    return mask


# -- row kernels -----------------------------------------------------------

def _apply_plan(views: list[np.ndarray], matrix: np.ndarray) -> None:
    """Mix basis-block views by the matrix rows, skipping identity rows."""
    dim = matrix.shape[0]
    updates = []
    for r in range(dim):
        terms = [(matrix[r, c], c) for c in range(dim) if matrix[r, c] != 0]
        if len(terms) == 1 and terms[0][1] == r and terms[0][0] == 1.0:
            continue
        new = terms[0][0] * views[terms[0][1]]
        for coef, c in terms[1:]:
            new += coef * views[c]
        updates.append((r, new))
    for r, new in updates:
        views[r][...] = new


def _lift_control(matrix: np.ndarray) -> np.ndarray:
    # single-control lift: identity on the control-0 block, the gate on
    # control-1; local basis is bit(target) + 2 * bit(control)
    lifted = np.eye(4, dtype=np.complex128)
    lifted[2:, 2:] = matrix
    return lifted


def _one_axis_views(amps: np.ndarray, target: int, num_qubits: int) -> list[np.ndarray]:
    if not amps.flags["C_CONTIGUOUS"]:
        raise ValueError("row kernels need a C-contiguous amplitude array")
    v = amps.reshape(
        amps.shape[0], 1 << (num_qubits - 1 - target), 2, 1 << target
    )
    return [v[:, :, 0, :], v[:, :, 1, :]]


def _two_axis_views(
    amps: np.ndarray, t0: int, t1: int, num_qubits: int
) -> list[np.ndarray]:
    if not amps.flags["C_CONTIGUOUS"]:
        raise ValueError("row kernels need a C-contiguous amplitude array")
    lo, hi = sorted((t0, t1))
    v = amps.reshape(
        amps.shape[0],
        1 << (num_qubits - 1 - hi),
        2,
        1 << (hi - 1 - lo),
        2,
        1 << lo,
    )
    views = []
    for local in range(4):
        b0 = local & 1  # bit of t0
        b1 = local >> 1  # bit of t1
        hi_bit = b1 if t1 == hi else b0
        lo_bit = b0 if t0 == lo else b1
        views.append(v[:, :, hi_bit, :, lo_bit, :])
    return views


def apply_matrix_rows(
    amps: np.ndarray,
    matrix: np.ndarray,
    targets: tuple[int, ...],
    controls,
    num_qubits: int,
) -> None:
    """Apply a gate matrix in place to every row of ``amps``."""
    n_controls = len(controls)
    if len(targets) == 1 and n_controls == 0:
        _apply_plan(_one_axis_views(amps, targets[0], num_qubits), matrix)
        return
    if len(targets) == 1 and n_controls == 1:
        control = next(iter(controls))
        views = _two_axis_views(amps, targets[0], control, num_qubits)
        _apply_plan(views, _lift_control(matrix))
        return
    if len(targets) == 2 and n_controls == 0:
        _apply_plan(_two_axis_views(amps, targets[0], targets[1], num_qubits), matrix)
        return
    # general path: arbitrary control sets via masked index arrays
    cmask = _control_mask(controls)
    if len(targets) == 1:
        i0, i1 = _pair_indices(num_qubits, targets[0], cmask)
        a0 = amps[:, i0]
        a1 = amps[:, i1]
        amps[:, i0] = matrix[0, 0] * a0 + matrix[0, 1] * a1
        amps[:, i1] = matrix[1, 0] * a0 + matrix[1, 1] * a1
    else:
        i00, i01, i10, i11 = _quad_indices(num_qubits, targets[0], targets[1], cmask)
        a00 = amps[:, i00]
        a01 = amps[:, i01]
        a10 = amps[:, i10]
        a11 = amps[:, i11]
        for row_idx, out in zip(range(4), (i00, i01, i10, i11)):
            amps[:, out] = (
                matrix[row_idx, 0] * a00
                + matrix[row_idx, 1] * a01
                + matrix[row_idx, 2] * a10
                + matrix[row_idx, 3] * a11
            )


def apply_op_rows(amps: np.ndarray, op: GateOp, num_qubits: int) -> None:
    apply_matrix_rows(
        amps, _matrix_cached(op.kind, op.params), op.targets, op.controls, num_qubits
    )


def apply_ops_rows(amps: np.ndarray, ops, num_qubits: int) -> None:
    for op in ops:
        apply_op_rows(amps, op, num_qubits)


def apply_ry_rows(amps: np.ndarray, qubit: int, angles: np.ndarray, num_qubits: int) -> None:
    """Apply RY with a separate angle per row (vectorised encoders)."""
    a0, a1 = _one_axis_views(amps, qubit, num_qubits)
    c = np.cos(angles / 2.0)[:, None, None]
    s = np.sin(angles / 2.0)[:, None, None]
    new0 = c * a0 - s * a1
    new1 = s * a0 + c * a1
    a0[...] = new0
    a1[...] = new1


def apply_pauli_rows(amps: np.ndarray, label: str, qubit: int, num_qubits: int) -> None:
    """Apply a Pauli X/Y/Z in place (noise-channel injections)."""
    a0, a1 = _one_axis_views(amps, qubit, num_qubits)
    if label == "X":
        old0 = a0.copy()
        a0[...] = a1
        a1[...] = old0
    elif label == "Y":
        old0 = a0.copy()
        a0[...] = -1j * a1
        a1[...] = 1j * old0
    elif label == "Z":
        a1[...] = -a1
    else:
        raise ValueError(f"unknown Pauli label {label!r}")


def expectation_z_rows(amps: np.ndarray, qubit: int, num_qubits: int) -> np.ndarray:
    probs = amps.real**2 + amps.imag**2
    return probs @ _z_signs(num_qubits, qubit)


def prob_zero_rows(amps: np.ndarray, qubit: int, num_qubits: int) -> np.ndarray:
    probs = amps.real**2 + amps.imag**2
    return probs @ _zero_mask(num_qubits, qubit)


def zero_rows(num_qubits: int, n_rows: int) -> np.ndarray:
    amps = np.zeros((n_rows, 1 << num_qubits), dtype=np.complex128)
    amps[:, 0] = 1.0
    return amps


# -- single-state API ------------------------------------------------------

def _check_op(op: GateOp, num_qubits: int) -> None:
    if max(op.wires) >= num_qubits:
        raise ValueError(f"op {op} references qubit >= {num_qubits}")


def apply_gate(state: Statevector, op: GateOp) -> Statevector:
    """Left-multiply the state by the (controlled) gate unitary."""
    _check_op(op, state.num_qubits)
    out = state.copy()
    apply_op_rows(out.amplitudes[None, :], op, out.num_qubits)
    return out


def apply_circuit(state: Statevector, circuit: Circuit) -> Statevector:
    if state.num_qubits != circuit.num_qubits:
        raise ValueError(
            f"state has {state.num_qubits} qubits, circuit {circuit.num_qubits}"
        )
    out = state.copy()
    rows = out.amplitudes[None, :]
    apply_ops_rows(rows, circuit.ops, circuit.num_qubits)
    return out


def expectation_z(state: Statevector, qubit: int) -> float:
    if not 0 <= qubit < state.num_qubits:
        raise ValueError(f"qubit {qubit} out of range")
    return float(expectation_z_rows(state.amplitudes[None, :], qubit, state.num_qubits)[0])


def sample_measurements(
    state: Statevector, qubit: int, shots: int, rng: np.random.Generator
) -> tuple[int, int]:
    """Sample Z-basis measurement counts (zeros, ones) for one qubit."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if not 0 <= qubit < state.num_qubits:
        raise ValueError(f"qubit {qubit} out of range")
    p0 = float(prob_zero_rows(state.amplitudes[None, :], qubit, state.num_qubits)[0])
    p0 = min(max(p0, 0.0), 1.0)
    n0 = int(rng.binomial(shots, p0))
    return n0, shots - n0


def circuit_unitary(circuit: Circuit, max_qubits: int = 10) -> np.ndarray:
    """Dense unitary of a circuit, built column by column from the kernels."""
    if circuit.num_qubits > max_qubits:
        raise ValueError(
            f"refusing dense unitary for {circuit.num_qubits} qubits "
            f"(limit {max_qubits})"
        )
    dim = 1 << circuit.num_qubits
    cols = np.eye(dim, dtype=np.complex128)
    apply_ops_rows(cols, circuit.ops, circuit.num_qubits)
    # rows of the batch are columns of the unitary
    return cols.T.copy()


__all__ = [
    "Statevector",
    "apply_gate",
    "apply_circuit",
    "expectation_z",
    "sample_measurements",
    "circuit_unitary",
    "apply_matrix_rows",
    "apply_op_rows",
    "apply_ops_rows",
    "apply_ry_rows",
    "apply_pauli_rows",
    "expectation_z_rows",
    "prob_zero_rows",
    "zero_rows",
]
