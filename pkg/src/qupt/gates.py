"""Gate vocabulary: kinds, static metadata, and unitary matrices.

Conventions fixed for the whole package:

* Qubit 0 is the least significant bit of a basis-state index.
* ``RZ(t) = diag(e^{-it/2}, e^{+it/2})``; ``RX``/``RY`` are likewise
  ``exp(-i t P / 2)`` for the matching Pauli ``P``.
* ``Rot(phi, theta, omega) = RZ(omega) @ RY(theta) @ RZ(phi)`` as a matrix
  product, i.e. ``phi`` is applied first.
* ``IsingPP(t) = exp(-i (t/2) P (x) P)`` for ``P`` in ``{X, Y, Z}``.
* A two-target matrix is indexed by the local basis
  ``bit(targets[0]) + 2 * bit(targets[1])``.
* ``CNOT`` and ``CRZ`` are stored as their single-qubit payload matrix
  (``X`` and ``RZ``); the control wire lives in ``GateOp.controls`` and is
  handled by the generic control machinery, exactly like controls added
  later to any other gate.
"""

from __future__ import annotations

import enum
from functools import lru_cache

import numpy as np


class GateKind(enum.Enum):
    H = "H"
    X = "X"
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    Rot = "Rot"
    CNOT = "CNOT"
    CRZ = "CRZ"
    SWAP = "SWAP"
    IsingXX = "IsingXX"
    IsingYY = "IsingYY"
    IsingZZ = "IsingZZ"


# number of target qubits
N_TARGETS = {
    GateKind.H: 1,
    GateKind.X: 1,
    GateKind.RX: 1,
    GateKind.RY: 1,
    GateKind.RZ: 1,
    GateKind.Rot: 1,
    GateKind.CNOT: 1,
    GateKind.CRZ: 1,
    GateKind.SWAP: 2,
    GateKind.IsingXX: 2,
    GateKind.IsingYY: 2,
    GateKind.IsingZZ: 2,
}

# number of real angle parameters
N_PARAMS = {
    GateKind.H: 0,
    GateKind.X: 0,
    GateKind.RX: 1,
    GateKind.RY: 1,
    GateKind.RZ: 1,
    GateKind.Rot: 3,
    GateKind.CNOT: 0,
    GateKind.CRZ: 1,
    GateKind.SWAP: 0,
    GateKind.IsingXX: 1,
    GateKind.IsingYY: 1,
    GateKind.IsingZZ: 1,
}

# kinds whose very definition includes a control wire
NEEDS_CONTROL = frozenset({GateKind.CNOT, GateKind.CRZ})

# zero-parameter kinds that are their own inverse
SELF_INVERSE = frozenset({GateKind.H, GateKind.X, GateKind.CNOT, GateKind.SWAP})

# kinds whose two targets are interchangeable (symmetric matrices)
SYMMETRIC_2Q = frozenset(
    {GateKind.SWAP, GateKind.IsingXX, GateKind.IsingYY, GateKind.IsingZZ}
)

_SQRT1_2 = 1.0 / np.sqrt(2.0)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


def _rx(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)


def _ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def _rz(theta: float) -> np.ndarray:
    e = np.exp(-0.5j * theta)
    return np.array([[e, 0], [0, np.conj(e)]], dtype=np.complex128)


def _ising(pauli: np.ndarray, theta: float) -> np.ndarray:
    # exp(-i (theta/2) P(x)P) = cos(theta/2) I - i sin(theta/2) P(x)P
    pp = np.kron(pauli, pauli)
    return np.cos(theta / 2.0) * np.eye(4, dtype=np.complex128) - 1j * np.sin(
        theta / 2.0
    ) * pp


@lru_cache(maxsize=4096)
def _matrix_cached(kind: GateKind, params: tuple[float, ...]) -> np.ndarray:
    if kind is GateKind.H:
        m = _SQRT1_2 * np.array([[1, 1], [1, -1]], dtype=np.complex128)
    elif kind is GateKind.X or kind is GateKind.CNOT:
        m = PAULI_X.copy()
    elif kind is GateKind.RX:
        m = _rx(params[0])
    elif kind is GateKind.RY:
        m = _ry(params[0])
    elif kind is GateKind.RZ or kind is GateKind.CRZ:
        m = _rz(params[0])
    elif kind is GateKind.Rot:
        phi, theta, omega = params
        m = _rz(omega) @ _ry(theta) @ _rz(phi)
    elif kind is GateKind.SWAP:
        m = np.array(
            [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]],
            dtype=np.complex128,
        )
    elif kind is GateKind.IsingXX:
        m = _ising(PAULI_X, params[0])
    elif kind is GateKind.IsingYY:
        m = _ising(PAULI_Y, params[0])
    elif kind is GateKind.IsingZZ:
        m = _ising(PAULI_Z, params[0])
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown gate kind {kind!r}")
    m.setflags(write=False)
    return m


def build_gate_matrix(kind: GateKind, params) -> np.ndarray:
    """Return the unitary matrix of ``kind`` on its target qubits.

    The matrix is 2x2 for single-target kinds and 4x4 for two-target kinds.
    Control wires (including the defining control of CNOT/CRZ) are not part
    of this matrix; they are applied by restricting the gate to the subspace
    where every control qubit is |1>.
    """
    params = tuple(float(p) for p in params)
    if len(params) != N_PARAMS[kind]:
        raise ValueError(
            f"{kind.value} takes {N_PARAMS[kind]} parameter(s), got {len(params)}"
        )
    return _matrix_cached(kind, params).copy()
