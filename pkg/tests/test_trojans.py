"""Attack-circuit builders: identity telescoping, dormancy, interference."""

import numpy as np
import pytest

from helpers import dense_circuit_unitary, random_state
from qupt.circuits import Circuit, GateKind, adjoint, ry
from qupt.model import QnnParams, build_vqc_circuit
from qupt.noise import NoiseSpec, evolve_density, expectation_from_density
from qupt.simulator import Statevector, apply_circuit, expectation_z
from qupt.trojans import (
    InsertionPoint,
    TrojanSpec,
    build_class_a,
    build_class_b,
    build_class_c,
    build_trojan_shield,
    build_ui_block,
    default_insertion_point,
    implant,
    pair_angles,
)

ARIA1 = NoiseSpec(5e-4, 13.3e-3)


class TestTrojanSpec:
    def test_class_constraints(self):
        with pytest.raises(ValueError):
            TrojanSpec("A", ancilla=8)
        with pytest.raises(ValueError):
            TrojanSpec("B")
        with pytest.raises(ValueError):
            TrojanSpec("D", ancilla=8)
        with pytest.raises(ValueError):
            TrojanSpec("A", repetitions=0)

    def test_serialization_round_trip(self):
        spec = TrojanSpec("C", repetitions=50, depth_d=3, ancilla=8, param_seed=7)
        assert TrojanSpec.from_dict(spec.to_dict()) == spec

    def test_default_insertion_points(self):
        assert default_insertion_point("C") is InsertionPoint.AFTER_ENCODER
        assert default_insertion_point("A") is InsertionPoint.BEFORE_MEASUREMENT
        assert default_insertion_point("B") is InsertionPoint.BEFORE_MEASUREMENT


class TestUiBlock:
    def test_op_count_n2(self):
        # a ring of size 2 carries both ordered pairs, one ring per family
        block = build_ui_block(2, np.zeros((3, 2)))
        assert len(block.ops) == 12

    def test_op_count_general(self):
        for n in (3, 4, 8):
            block = build_ui_block(n, np.zeros((3, n)))
            assert len(block.ops) == 6 * n

    def test_zero_angles_make_ising_identity(self):
        block = build_ui_block(3, np.zeros((3, 3)))
        from qupt.gates import build_gate_matrix

        for op in block.ops:
            if op.kind in (GateKind.IsingXX, GateKind.IsingYY, GateKind.IsingZZ):
                np.testing.assert_allclose(
                    build_gate_matrix(op.kind, op.params), np.eye(4), atol=1e-15
                )

    def test_block_adjoint_round_trip(self):
        rng = np.random.default_rng(0)
        block = build_ui_block(3, rng.uniform(0, 2 * np.pi, (3, 3)))
        amps = random_state(rng, 3)
        state = Statevector(amps.copy(), 3)
        back = apply_circuit(apply_circuit(state, block), adjoint(block))
        np.testing.assert_allclose(back.amplitudes, amps, atol=1e-10)

    def test_width_guard(self):
        with pytest.raises(ValueError):
            build_ui_block(1, np.zeros((3, 1)))

    def test_pair_angles_reproducible(self):
        np.testing.assert_array_equal(pair_angles(7, 3, 8), pair_angles(7, 3, 8))
        assert not np.array_equal(pair_angles(7, 3, 8), pair_angles(7, 4, 8))


class TestClassA:
    def test_gate_count_full_scale(self):
        spec = TrojanSpec("A", repetitions=50, depth_d=3, param_seed=7)
        assert len(build_class_a(8, spec).ops) == 50 * 2 * 3 * (8 * 6)

    def test_ideal_identity_full_scale(self):
        """50 U-pairs at depth 3 on 8 qubits return any input to 1e-9."""
        spec = TrojanSpec("A", repetitions=50, depth_d=3, param_seed=7)
        circuit = build_class_a(8, spec)
        rng = np.random.default_rng(1)
        amps = random_state(rng, 8)
        out = apply_circuit(Statevector(amps.copy(), 8), circuit)
        assert np.max(np.abs(out.amplitudes - amps)) <= 1e-9

    def test_exact_unitary_identity_small(self):
        """Dense product is the identity matrix at n <= 3."""
        for n in (2, 3):
            spec = TrojanSpec("A", repetitions=4, depth_d=2, param_seed=3)
            u = dense_circuit_unitary(build_class_a(n, spec))
            np.testing.assert_allclose(u, np.eye(1 << n), atol=1e-10)

    def test_noise_monotone_in_repetitions(self):
        """Density-oracle |<Z0>| never grows as repetitions increase."""
        values = []
        for reps in (1, 5, 10, 25, 50):
            spec = TrojanSpec("A", repetitions=reps, depth_d=3, param_seed=7)
            rho = evolve_density(build_class_a(4, spec), ARIA1)
            values.append(abs(expectation_from_density(rho, 0)))
        assert all(b <= a + 1e-9 for a, b in zip(values, values[1:]))

    def test_depolarizing_contracts_bloch_z(self):
        """Noisy |<Z0>| stays within the ideal |<Z0>| for product inputs."""
        spec = TrojanSpec("A", repetitions=5, depth_d=3, param_seed=2)
        circuit = build_class_a(4, spec)
        rng = np.random.default_rng(3)
        for _ in range(3):
            prep = Circuit(4, tuple(ry(q, rng.uniform(0.3, 2.8)) for q in range(4)))
            state = apply_circuit(Statevector.zero(4), prep)
            ideal = expectation_z(state, 0)
            from qupt.noise import DensityMatrix

            rho0 = DensityMatrix.from_statevector(state)
            rho = evolve_density(circuit, ARIA1, initial=rho0)
            assert abs(expectation_from_density(rho, 0)) <= abs(ideal) + 1e-6


class TestClassB:
    def test_dormant_with_ancilla_zero(self):
        """Every gate is ancilla-controlled: nothing moves while it is |0>."""
        spec = TrojanSpec("B", repetitions=3, depth_d=2, ancilla=4, param_seed=5)
        circuit = build_class_b(4, spec)
        rng = np.random.default_rng(4)
        amps4 = random_state(rng, 4)
        full = np.zeros(32, dtype=complex)
        full[:16] = amps4  # ancilla |0>
        out = apply_circuit(Statevector(full.copy(), 5), circuit)
        # trojan block exactly inert; shield only entangles via the anchor
        np.testing.assert_allclose(
            np.abs(out.amplitudes[:16]) ** 2 + np.abs(out.amplitudes[16:]) ** 2,
            np.abs(full[:16]) ** 2,
            atol=1e-12,
        )

    def test_triggered_ideal_is_identity_on_data(self):
        """Ancilla |1>: the controlled injector still telescopes to identity
        and the shield touches only the last data qubit, so <Z0> is intact."""
        spec = TrojanSpec("B", repetitions=3, depth_d=2, ancilla=4, param_seed=5)
        circuit = build_class_b(4, spec)
        rng = np.random.default_rng(5)
        amps4 = random_state(rng, 4)
        full = np.zeros(32, dtype=complex)
        full[16:] = amps4  # ancilla |1>
        state = Statevector(full.copy(), 5)
        z_before = expectation_z(state, 0)
        out = apply_circuit(state, circuit)
        assert abs(expectation_z(out, 0) - z_before) <= 1e-9

    def test_wire_count_and_controls(self):
        spec = TrojanSpec("B", repetitions=2, depth_d=1, ancilla=4, param_seed=0)
        circuit = build_class_b(4, spec)
        assert circuit.num_qubits == 5
        trojan_ops = [op for op in circuit.ops if op.tag == "trojan"]
        assert all(4 in op.controls for op in trojan_ops)
        assert [op.tag for op in circuit.ops[-2:]] == ["shield", "shield"]


class TestClassC:
    def test_uniform_superposition_from_ground(self):
        spec = TrojanSpec("C", ancilla=3, param_seed=0)
        circuit = build_class_c(3, spec)
        core = Circuit(4, tuple(op for op in circuit.ops if op.tag == "trojan"))
        state = Statevector.basis(4, 0b1000)  # ancilla |1>, data |000>
        out = apply_circuit(state, core)
        np.testing.assert_allclose(
            out.amplitudes[8:], np.full(8, 2.0**-1.5), atol=1e-12
        )

    def test_walsh_hadamard_phase_law(self):
        """Triggered amplitudes are 2^{-n/2} (-1)^{x.z} for all basis inputs,
        checked against an explicit H-tensor kronecker oracle (n <= 4)."""
        for n in (2, 3, 4):
            spec = TrojanSpec("C", ancilla=n, param_seed=0)
            circuit = build_class_c(n, spec)
            core = Circuit(n + 1, tuple(op for op in circuit.ops if op.tag == "trojan"))
            hmat = np.array([[1, 1], [1, -1]]) / np.sqrt(2.0)
            kron = np.array([[1.0]])
            for _ in range(n):
                kron = np.kron(hmat, kron)
            for x in range(1 << n):
                state = Statevector.basis(n + 1, x | (1 << n))
                out = apply_circuit(state, core)
                data_amps = out.amplitudes[(1 << n) :]
                np.testing.assert_allclose(data_amps, kron[:, x], atol=1e-12)
                for z in range(1 << n):
                    expected = 2.0 ** (-n / 2.0) * (-1.0) ** bin(x & z).count("1")
                    np.testing.assert_allclose(data_amps[z], expected, atol=1e-12)

    def test_dormant_with_ancilla_zero(self):
        spec = TrojanSpec("C", ancilla=3, param_seed=0)
        circuit = build_class_c(3, spec)
        rng = np.random.default_rng(6)
        amps3 = random_state(rng, 3)
        full = np.zeros(16, dtype=complex)
        full[:8] = amps3
        out = apply_circuit(Statevector(full.copy(), 4), circuit)
        # data-register distribution on qubit 0 identical to benign
        probs_out = np.abs(out.amplitudes[:8]) ** 2 + np.abs(out.amplitudes[8:]) ** 2
        np.testing.assert_allclose(probs_out, np.abs(amps3) ** 2, atol=1e-12)


class TestShield:
    def test_requires_distinct_wires(self):
        with pytest.raises(ValueError):
            build_trojan_shield(3, 3)

    def test_benign_vqc_unchanged(self):
        """Appending the shield to a benign 9-qubit stage leaves <Z0> alone."""
        params = QnnParams.init_random(8)
        feats = np.random.default_rng(9).random(8)
        host = build_vqc_circuit(feats, params, ancilla=True)
        shielded = host + build_trojan_shield(8, 0, num_qubits=9)
        z_plain = expectation_z(apply_circuit(Statevector.zero(9), host), 0)
        z_shield = expectation_z(apply_circuit(Statevector.zero(9), shielded), 0)
        assert abs(z_plain - z_shield) <= 1e-12

    def test_ancilla_becomes_referenced(self):
        shield = build_trojan_shield(8, 0, num_qubits=9)
        wires = set()
        for op in shield.ops:
            wires |= op.wires
        assert 8 in wires

    def test_plus_anchor_entangles_but_preserves_z(self):
        """|+> anchor: anchor purity drops below 1 while <Z_anchor> holds."""
        from qupt.circuits import h
        from qupt.noise import evolve_density

        prep_plus_shield = Circuit(2, (h(0),) + build_trojan_shield(1, 0, 2).ops)
        rho = evolve_density(prep_plus_shield, NoiseSpec(0, 0))
        # reduced state of the anchor (qubit 0)
        r = rho.entries
        anchor = np.array(
            [
                [r[0, 0] + r[2, 2], r[0, 1] + r[2, 3]],
                [r[1, 0] + r[3, 2], r[1, 1] + r[3, 3]],
            ]
        )
        purity = float(np.trace(anchor @ anchor).real)
        assert purity < 0.75
        np.testing.assert_allclose((anchor[0, 0] - anchor[1, 1]).real, 0.0, atol=1e-12)


class TestImplant:
    def host(self) -> Circuit:
        params = QnnParams.init_random(10)
        feats = np.random.default_rng(11).random(8)
        return build_vqc_circuit(feats, params, ancilla=True)

    def test_empty_trojan_is_noop(self):
        host = self.host()
        out = implant(host, Circuit(9), InsertionPoint.BEFORE_MEASUREMENT)
        assert out == host

    def test_class_c_structural_order(self):
        """Encoder, controlled-H block, variational layers, shield."""
        host = self.host()
        spec = TrojanSpec("C", ancilla=8, param_seed=1)
        out = implant(host, build_class_c(8, spec), InsertionPoint.AFTER_ENCODER)
        tags = [op.tag for op in out.ops]
        kinds = [op.kind for op in out.ops]
        assert kinds[:8] == [GateKind.RY] * 8
        assert tags[8:16] == ["trojan"] * 8
        assert kinds[8:16] == [GateKind.H] * 8
        assert tags[16:-2] == ["host"] * (len(host.ops) - 8)
        assert tags[-2:] == ["shield", "shield"]

    def test_width_guard(self):
        with pytest.raises(ValueError):
            implant(Circuit(4), Circuit(5), InsertionPoint.AFTER_ENCODER)

    def test_implant_commutes_with_appending(self):
        """Implanting then appending equals appending then implanting."""
        host = self.host()
        suffix = Circuit(9, (ry(3, 0.4), ry(5, 1.0)))
        spec = TrojanSpec("C", ancilla=8, param_seed=2)
        trojan = build_class_c(8, spec)
        core = Circuit(9, tuple(op for op in trojan.ops if op.tag == "trojan"))
        a = implant(host, core, InsertionPoint.AFTER_ENCODER) + suffix
        b = implant(host + suffix, core, InsertionPoint.AFTER_ENCODER)
        assert a.ops == b.ops
