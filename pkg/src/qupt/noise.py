"""Depolarizing-noise execution: Monte Carlo Pauli trajectories plus a
dense density-matrix oracle for small registers.

The noise model is one depolarizing event sampled after every gate, acting
on the gate's support (targets plus controls, capped at two qubits).  A
support of one qubit draws with probability ``r1q`` a Pauli uniformly from
{X, Y, Z}; a support of two or more draws with probability ``r2q`` one of
the 15 non-identity two-qubit Pauli pairs, applied to the first two support
qubits.  A controlled single-qubit gate therefore errs at the two-qubit
rate.

Trajectory i of a plan draws exclusively from a generator seeded by
``(master_seed, i)``, so results are reproducible and independent of batch
or chunk boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

from .circuits import Circuit, GateOp
from .gates import PAULI_X, PAULI_Y, PAULI_Z, _matrix_cached
from .simulator import (
    Statevector,
    apply_op_rows,
    apply_pauli_rows,
    expectation_z_rows,
    prob_zero_rows,
)

_PAULI_1Q = ("X", "Y", "Z")
# the 15 non-identity pairs, indexed 0..14 as (k+1) -> (high, low) base-4 digits
_PAULI_2Q = tuple(
    ("IXYZ"[(k + 1) // 4], "IXYZ"[(k + 1) % 4]) for k in range(15)
)

_TRAJECTORY_CHUNK = 2048
DENSITY_ORACLE_MAX_QUBITS = 6


@dataclass(frozen=True)
class NoiseSpec:
    r1q: float
    r2q: float

    def __post_init__(self):
        for name, rate in (("r1q", self.r1q), ("r2q", self.r2q)):
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name}={rate} outside [0, 1]")

    @property
    def is_zero(self) -> bool:
        return self.r1q == 0.0 and self.r2q == 0.0


IDEAL = NoiseSpec(0.0, 0.0)


@dataclass(frozen=True)
class TrajectoryPlan:
    n_trajectories: int
    shots_per_trajectory: int | None = None  # None means exact expectations
    master_seed: int = 0

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be >= 1")
        if self.shots_per_trajectory is not None and self.shots_per_trajectory < 1:
            raise ValueError("shots_per_trajectory must be >= 1 or None")


def _error_support(op: GateOp) -> tuple[int, ...]:
    support = list(op.targets) + sorted(op.controls)
    return tuple(support[:2])


def _error_rate(op: GateOp, noise: NoiseSpec) -> float:
    return noise.r1q if len(op.targets) + len(op.controls) == 1 else noise.r2q


def _event_paulis(k: int, support: tuple[int, ...]) -> list[tuple[str, int]]:
    """Decode draw index k into (label, qubit) applications."""
    if len(support) == 1:
        return [(_PAULI_1Q[k], support[0])]
    pa, pb = _PAULI_2Q[k]
    out = []
    if pa != "I":
        out.append((pa, support[0]))
    if pb != "I":
        out.append((pb, support[1]))
    return out


def sample_pauli_error(
    rate: float, arity: int, rng: np.random.Generator
) -> list[str] | None:
    """Draw one depolarizing event: None, or Pauli labels for each support qubit.

    With probability ``1 - rate`` returns None.  Otherwise the labels are a
    uniform draw over {X, Y, Z} (arity 1) or over the 15 non-identity Pauli
    pairs (arity 2), where an 'I' entry marks the untouched qubit of a pair.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"rate={rate} outside [0, 1]")
    if arity not in (1, 2):
        raise ValueError(f"arity must be 1 or 2, got {arity}")
    if rng.random() >= rate:
        return None
    if arity == 1:
        return [_PAULI_1Q[int(rng.random() * 3) % 3]]
    pa, pb = _PAULI_2Q[int(rng.random() * 15) % 15]
    return [pa, pb]


def run_noisy_trajectory(
    circuit: Circuit,
    noise: NoiseSpec,
    rng: np.random.Generator,
    initial: int | Statevector = 0,
) -> Statevector:
    """One pure-state sample of the noisy channel.

    Each gate is applied ideally and followed by a sampled Pauli error on
    its support.  ``initial`` selects the input state (basis index or a
    prepared statevector).
    """
    if isinstance(initial, Statevector):
        state = initial.copy()
        if state.num_qubits != circuit.num_qubits:
            raise ValueError("initial state width does not match circuit")
    else:
        state = Statevector.basis(circuit.num_qubits, initial)
    rows = state.amplitudes[None, :]
    n = circuit.num_qubits
    for op in circuit.ops:
        apply_op_rows(rows, op, n)
        support = _error_support(op)
        event = sample_pauli_error(_error_rate(op, noise), len(support), rng)
        if event is not None:
            for label, qubit in zip(event, support):
                if label != "I":
                    apply_pauli_rows(rows, label, qubit, n)
    return state


def _prepare_rows(circuit: Circuit, initial, n_rows: int) -> np.ndarray:
    if isinstance(initial, Statevector):
        if initial.num_qubits != circuit.num_qubits:
            raise ValueError("initial state width does not match circuit")
        return np.tile(initial.amplitudes, (n_rows, 1))
    amps = np.zeros((n_rows, 1 << circuit.num_qubits), dtype=np.complex128)
    amps[:, int(initial)] = 1.0
    return amps


def _trajectory_values_chunk(
    circuit: Circuit,
    qubit: int,
    noise: NoiseSpec,
    plan: TrajectoryPlan,
    initial,
    first: int,
    count: int,
) -> np.ndarray:
    """Per-trajectory expectation estimates for trajectories [first, first+count)."""
    n = circuit.num_qubits
    ops = circuit.ops
    n_ops = len(ops)
    rates = np.array([_error_rate(op, noise) for op in ops])
    n_choices = np.array(
        [3 if len(op.targets) + len(op.controls) == 1 else 15 for op in ops]
    )
    supports = [_error_support(op) for op in ops]

    rngs = [np.random.default_rng([plan.master_seed, first + i]) for i in range(count)]
    # events[j] collects (row, choice) pairs for the error after op j;
    # per trajectory, draws are a block of uniforms for the error positions
    # followed by one uniform per event, all in op order
    events: dict[int, list[tuple[int, int]]] = {}
    for i, rng in enumerate(rngs):
        us = rng.random(n_ops)
        cols = np.nonzero(us < rates)[0]
        if cols.size:
            vs = rng.random(cols.size)
            ks = np.minimum((vs * n_choices[cols]).astype(int), n_choices[cols] - 1)
            for col, k in zip(cols, ks):
                events.setdefault(int(col), []).append((i, int(k)))

    amps = _prepare_rows(circuit, initial, count)
    for j, op in enumerate(ops):
        apply_op_rows(amps, op, n)
        for row, k in events.get(j, ()):
            for label, q in _event_paulis(k, supports[j]):
                apply_pauli_rows(amps[row : row + 1], label, q, n)

    if plan.shots_per_trajectory is None:
        return expectation_z_rows(amps, qubit, n)
    p0 = np.clip(prob_zero_rows(amps, qubit, n), 0.0, 1.0)
    shots = plan.shots_per_trajectory
    counts = np.array([rngs[i].binomial(shots, p0[i]) for i in range(count)])
    return 2.0 * counts / shots - 1.0


def trajectory_expectations(
    circuit: Circuit,
    qubit: int,
    noise: NoiseSpec,
    plan: TrajectoryPlan,
    initial: int | Statevector = 0,
) -> np.ndarray:
    """All per-trajectory expectation estimates of the plan, in order."""
    values = np.empty(plan.n_trajectories)
    done = 0
    while done < plan.n_trajectories:
        count = min(_TRAJECTORY_CHUNK, plan.n_trajectories - done)
        values[done : done + count] = _trajectory_values_chunk(
            circuit, qubit, noise, plan, initial, done, count
        )
        done += count
    return values


def estimate_expectation(
    circuit: Circuit,
    qubit: int,
    noise: NoiseSpec,
    plan: TrajectoryPlan,
    initial: int | Statevector = 0,
) -> tuple[float, float]:
    """Trajectory-averaged <Z_qubit> and its standard error.

    With zero noise and exact expectations every trajectory is the ideal
    evolution, so the ideal value is returned directly (bit-identical to
    the ideal path, standard error exactly 0).
    """
    if not 0 <= qubit < circuit.num_qubits:
        raise ValueError(f"qubit {qubit} out of range")
    if noise.is_zero and plan.shots_per_trajectory is None:
        amps = _prepare_rows(circuit, initial, 1)
        for op in circuit.ops:
            apply_op_rows(amps, op, circuit.num_qubits)
        return float(expectation_z_rows(amps, qubit, circuit.num_qubits)[0]), 0.0
    values = trajectory_expectations(circuit, qubit, noise, plan, initial)
    mean = float(np.mean(values))
    if values.size == 1:
        return mean, 0.0
    std_error = float(np.std(values, ddof=1) / np.sqrt(values.size))
    return mean, std_error


# -- density-matrix oracle -------------------------------------------------

@dataclass
class DensityMatrix:
    entries: np.ndarray
    num_qubits: int

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.complex128)
        dim = 1 << self.num_qubits
        if self.entries.shape != (dim, dim):
            raise ValueError(f"expected {dim}x{dim} matrix")

    @classmethod
    def basis(cls, num_qubits: int, index: int = 0) -> "DensityMatrix":
        dim = 1 << num_qubits
        rho = np.zeros((dim, dim), dtype=np.complex128)
        rho[index, index] = 1.0
        return cls(rho, num_qubits)

    @classmethod
    def from_statevector(cls, state: Statevector) -> "DensityMatrix":
        amps = state.amplitudes
        return cls(np.outer(amps, amps.conj()), state.num_qubits)

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def purity(self) -> float:
        return float(np.trace(self.entries @ self.entries).real)

    def max_hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.min(np.linalg.eigvalsh(self.entries)))


_PAULI_MATS = {"X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}


def _kron_chain(factors: list[np.ndarray]) -> np.ndarray:
    """Kronecker product with factors[q] acting on qubit q (q0 = low bits)."""
    return reduce(lambda acc, m: np.kron(m, acc), factors)


@lru_cache(maxsize=None)
def _embedded_pauli(num_qubits: int, qubit: int, label: str) -> np.ndarray:
    eye = np.eye(2, dtype=np.complex128)
    factors = [
        _PAULI_MATS[label] if q == qubit else eye for q in range(num_qubits)
    ]
    full = _kron_chain(factors)
    full.setflags(write=False)
    return full


def op_unitary_dense(op: GateOp, num_qubits: int) -> np.ndarray:
    """Full-register unitary of one (controlled) op, built by basis columns."""
    m = _matrix_cached(op.kind, op.params)
    dim = 1 << num_qubits
    cmask = 0
    for c in op.controls:
        cmask |= 1 << c
    u = np.zeros((dim, dim), dtype=np.complex128)
    tbits = op.targets
    for col in range(dim):
        if (col & cmask) != cmask:
            u[col, col] = 1.0
            continue
        local = sum(((col >> t) & 1) << i for i, t in enumerate(tbits))
        stripped = col
        for t in tbits:
            stripped &= ~(1 << t)
        for new_local in range(m.shape[0]):
            row = stripped
            for i, t in enumerate(tbits):
                if (new_local >> i) & 1:
                    row |= 1 << t
            u[row, col] = m[new_local, local]
    return u


def _twirl(rho: np.ndarray, num_qubits: int, support: tuple[int, ...], rate: float) -> np.ndarray:
    """Depolarizing channel matching sample_pauli_error exactly."""
    if rate == 0.0:
        return rho
    if len(support) == 1:
        paulis = [_embedded_pauli(num_qubits, support[0], l) for l in _PAULI_1Q]
        mix = sum(p @ rho @ p for p in paulis)
        return (1.0 - rate) * rho + (rate / 3.0) * mix
    mix = np.zeros_like(rho)
    for pa, pb in _PAULI_2Q:
        u = np.eye(rho.shape[0], dtype=np.complex128)
        if pa != "I":
            u = _embedded_pauli(num_qubits, support[0], pa) @ u
        if pb != "I":
            u = _embedded_pauli(num_qubits, support[1], pb) @ u
        mix += u @ rho @ u.conj().T
    return (1.0 - rate) * rho + (rate / 15.0) * mix


def evolve_density(
    circuit: Circuit,
    noise: NoiseSpec,
    initial: int | DensityMatrix = 0,
) -> DensityMatrix:
    """Exact noisy channel: each gate as U rho U^dag then a depolarizing twirl.

    Dense oracle, restricted to small registers.
    """
    if circuit.num_qubits > DENSITY_ORACLE_MAX_QUBITS:
        raise ValueError(
            f"density oracle limited to {DENSITY_ORACLE_MAX_QUBITS} qubits, "
            f"got {circuit.num_qubits}"
        )
    if isinstance(initial, DensityMatrix):
        if initial.num_qubits != circuit.num_qubits:
            raise ValueError("initial density width does not match circuit")
        rho = initial.entries.copy()
    else:
        rho = DensityMatrix.basis(circuit.num_qubits, int(initial)).entries
    n = circuit.num_qubits
    for op in circuit.ops:
        u = op_unitary_dense(op, n)
        rho = u @ rho @ u.conj().T
        rho = _twirl(rho, n, _error_support(op), _error_rate(op, noise))
    return DensityMatrix(rho, n)


def expectation_from_density(rho: DensityMatrix, qubit: int) -> float:
    """Tr(rho Z_qubit)."""
    if not 0 <= qubit < rho.num_qubits:
        raise ValueError(f"qubit {qubit} out of range")
    diag = np.diag(rho.entries).real
    idx = np.arange(diag.size)
    signs = np.where((idx >> qubit) & 1, -1.0, 1.0)
    return float(diag @ signs)
