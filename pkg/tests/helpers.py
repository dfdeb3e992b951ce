"""Shared test utilities: dense kronecker oracles, random circuits,
synthetic digit images, and IDX file writers.

The dense oracle here is deliberately independent of the package kernels:
gates are embedded by explicit kron/index construction and circuits by
plain matrix products, so simulator bugs cannot hide in their own oracle.
"""

from __future__ import annotations

import gzip
import struct

import numpy as np

from qupt.circuits import (
    Circuit,
    GateOp,
    cnot,
    crz,
    h,
    ising_xx,
    ising_yy,
    ising_zz,
    rot,
    rx,
    ry,
    rz,
    swap,
    with_control,
    x,
)
from qupt.gates import GateKind, build_gate_matrix


def dense_gate_unitary(op: GateOp, num_qubits: int) -> np.ndarray:
    """Full 2^n x 2^n unitary of one op, by explicit basis bookkeeping."""
    m = build_gate_matrix(op.kind, op.params)
    dim = 1 << num_qubits
    cmask = 0
    for c in op.controls:
        cmask |= 1 << c
    u = np.zeros((dim, dim), dtype=np.complex128)
    for col in range(dim):
        if (col & cmask) != cmask:
            u[col, col] = 1.0
            continue
        local = sum(((col >> t) & 1) << i for i, t in enumerate(op.targets))
        base = col
        for t in op.targets:
            base &= ~(1 << t)
        for new_local in range(m.shape[0]):
            row = base
            for i, t in enumerate(op.targets):
                if (new_local >> i) & 1:
                    row |= 1 << t
            u[row, col] = m[new_local, local]
    return u


def dense_circuit_unitary(circuit: Circuit) -> np.ndarray:
    u = np.eye(1 << circuit.num_qubits, dtype=np.complex128)
    for op in circuit.ops:
        u = dense_gate_unitary(op, circuit.num_qubits) @ u
    return u


def dense_apply(circuit: Circuit, amplitudes: np.ndarray) -> np.ndarray:
    return dense_circuit_unitary(circuit) @ amplitudes


def random_state(rng: np.random.Generator, num_qubits: int) -> np.ndarray:
    amps = rng.normal(size=1 << num_qubits) + 1j * rng.normal(size=1 << num_qubits)
    return amps / np.linalg.norm(amps)


def random_op(rng: np.random.Generator, num_qubits: int, allow_controls: bool = True) -> GateOp:
    """One random op over the full gate vocabulary, controls included."""
    builders = [
        lambda q: h(int(q[0])),
        lambda q: x(int(q[0])),
        lambda q: rx(int(q[0]), rng.uniform(0, 2 * np.pi)),
        lambda q: ry(int(q[0]), rng.uniform(0, 2 * np.pi)),
        lambda q: rz(int(q[0]), rng.uniform(0, 2 * np.pi)),
        lambda q: rot(int(q[0]), *rng.uniform(0, 2 * np.pi, 3)),
    ]
    if num_qubits >= 2:
        builders += [
            lambda q: cnot(int(q[0]), int(q[1])),
            lambda q: crz(int(q[0]), int(q[1]), rng.uniform(0, 2 * np.pi)),
            lambda q: swap(int(q[0]), int(q[1])),
            lambda q: ising_xx(int(q[0]), int(q[1]), rng.uniform(0, 2 * np.pi)),
            lambda q: ising_yy(int(q[0]), int(q[1]), rng.uniform(0, 2 * np.pi)),
            lambda q: ising_zz(int(q[0]), int(q[1]), rng.uniform(0, 2 * np.pi)),
        ]
    build = builders[rng.integers(len(builders))]
    wires = rng.permutation(num_qubits)
    op = build(wires)
    if allow_controls:
        free = [int(w) for w in wires if w not in op.wires]
        n_extra = rng.integers(0, min(2, len(free)) + 1)
        for c in free[:n_extra]:
            op = with_control(op, c)
    return op


def random_circuit(
    rng: np.random.Generator, num_qubits: int, n_ops: int, allow_controls: bool = True
) -> Circuit:
    return Circuit(
        num_qubits,
        tuple(random_op(rng, num_qubits, allow_controls) for _ in range(n_ops)),
    )


# -- synthetic two-class digit data ---------------------------------------

def draw_zero(rng: np.random.Generator) -> np.ndarray:
    """A noisy ring, loosely shaped like a handwritten 0."""
    img = np.zeros((28, 28))
    cy = 14 + rng.uniform(-1.5, 1.5)
    cx = 14 + rng.uniform(-1.5, 1.5)
    ry_ax = rng.uniform(6.5, 9.5)
    rx_ax = rng.uniform(4.5, 7.5)
    yy, xx = np.mgrid[0:28, 0:28]
    r = np.sqrt(((yy - cy) / ry_ax) ** 2 + ((xx - cx) / rx_ax) ** 2)
    band = np.exp(-(((r - 1.0) / 0.22) ** 2))
    img += band * rng.uniform(0.8, 1.0)
    img += rng.normal(0, 0.02, (28, 28))
    return np.clip(img, 0.0, 1.0)


def draw_one(rng: np.random.Generator) -> np.ndarray:
    """A noisy near-vertical stroke, loosely shaped like a handwritten 1."""
    img = np.zeros((28, 28))
    x0 = 14 + rng.uniform(-3, 3)
    slope = rng.uniform(-0.25, 0.25)
    width = rng.uniform(1.2, 2.2)
    yy, xx = np.mgrid[0:28, 0:28]
    centre = x0 + slope * (yy - 14)
    stroke = np.exp(-(((xx - centre) / width) ** 2))
    mask = (yy >= 4) & (yy <= 24)
    img += stroke * mask * rng.uniform(0.8, 1.0)
    img += rng.normal(0, 0.02, (28, 28))
    return np.clip(img, 0.0, 1.0)


def synthetic_digits(n_per_class: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Balanced, shuffled (images, labels) with label 1 for strokes."""
    rng = np.random.default_rng(seed)
    images = [draw_zero(rng) for _ in range(n_per_class)]
    images += [draw_one(rng) for _ in range(n_per_class)]
    labels = np.array([0] * n_per_class + [1] * n_per_class)
    order = rng.permutation(2 * n_per_class)
    return np.stack(images)[order], labels[order]


def write_idx_files(
    tmp_path, images: np.ndarray, labels: np.ndarray, gzipped: bool = False
) -> tuple[str, str]:
    """Write uint8 IDX image/label files (optionally gzipped)."""
    pixels = np.clip(np.round(images * 255.0), 0, 255).astype(np.uint8)
    n, rows, cols = pixels.shape
    image_bytes = struct.pack(">IIII", 0x00000803, n, rows, cols) + pixels.tobytes()
    label_bytes = struct.pack(">II", 0x00000801, n) + labels.astype(np.uint8).tobytes()
    suffix = ".gz" if gzipped else ""
    image_path = tmp_path / f"train-images-idx3-ubyte{suffix}"
    label_path = tmp_path / f"train-labels-idx1-ubyte{suffix}"
    if gzipped:
        image_bytes = gzip.compress(image_bytes)
        label_bytes = gzip.compress(label_bytes)
    image_path.write_bytes(image_bytes)
    label_path.write_bytes(label_bytes)
    return str(image_path), str(label_path)
