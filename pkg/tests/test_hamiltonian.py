import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from qcuniverse.hamiltonian import (
    DenseUnitary,
    UnitarityError,
    build_h,
    evolve,
    fractional_root,
    materialize_unitary,
    operator_support,
    root_residual,
)
from qcuniverse.qstate import apply_program, fidelity, make_state
from qcuniverse.revmachine import ReversibleProgram, TimeStep, parse_circuit, random_program

from oracles import program_matrix

CHAIN = parse_circuit("WIDTH 3\nCNOT 0 1\nSTEP\nCNOT 1 2")


def fro(a):
    return np.linalg.norm(a, "fro")


class TestMaterialize:
    def test_not(self):
        u = materialize_unitary(parse_circuit("WIDTH 1\nNOT 0"))
        assert np.array_equal(u.matrix, [[0, 1], [1, 0]])

    def test_identity_step(self):
        assert np.array_equal(materialize_unitary(TimeStep(()), 3).matrix, np.eye(8))

    def test_toffoli_swaps_110_and_111(self):
        m = materialize_unitary(parse_circuit("WIDTH 3\nTOF 0 1 2")).matrix
        expected = np.eye(8)
        expected[[6, 7]] = expected[[7, 6]]
        assert np.array_equal(m, expected)

    def test_matches_dense_oracle(self):
        prog = random_program(4, 3, np.random.default_rng(5), max_gates=4)
        assert np.array_equal(materialize_unitary(prog).matrix, program_matrix(prog))

    def test_dense_cap(self):
        with pytest.raises(ValueError, match="cap"):
            materialize_unitary(ReversibleProgram(11, (TimeStep(()),)))


class TestBuildH:
    def test_not(self):
        model = build_h(materialize_unitary(parse_circuit("WIDTH 1\nNOT 0")))
        assert np.array_equal(model.h, [[0, 2], [2, 0]])

    def test_identity(self):
        model = build_h(materialize_unitary(TimeStep(()), 2))
        assert np.array_equal(model.h, 2 * np.eye(4))

    def test_toffoli_spectrum(self):
        model = build_h(materialize_unitary(parse_circuit("WIDTH 3\nTOF 0 1 2")))
        theta = np.angle(np.linalg.eigvals(model.u.matrix))
        assert np.allclose(np.sort(np.linalg.eigvalsh(model.h)), np.sort(2 * np.cos(theta)), atol=1e-9)
        assert model.spectrum_error() <= 1e-9

    def test_rejects_non_unitary(self):
        with pytest.raises(UnitarityError):
            build_h(DenseUnitary(1, [[1, 1], [0, 1]]))


class TestEvolve:
    def test_closed_form_for_not(self):
        model = build_h(materialize_unitary(parse_circuit("WIDTH 1\nNOT 0")))
        psi = make_state(1, "basis:0")
        for t in np.linspace(-2, 3, 11):
            out = evolve(model, psi, t).amps
            assert np.allclose(out, [np.cos(2 * t), -1j * np.sin(2 * t)], atol=1e-12)
            assert np.allclose(out, scipy.linalg.expm(-1j * model.h * t) @ psi.amps, atol=1e-12)

    def test_t_zero_is_identity(self):
        model = build_h(materialize_unitary(CHAIN))
        psi = make_state(3, "random:1")
        assert np.allclose(evolve(model, psi, 0.0).amps, psi.amps, atol=1e-12)

    def test_semigroup(self):
        model = build_h(materialize_unitary(CHAIN))
        psi = make_state(3, "random:2")
        two = evolve(model, evolve(model, psi, 0.3), 1.1)
        assert np.allclose(two.amps, evolve(model, psi, 1.4).amps, atol=1e-10)

    def test_matches_expm_on_random_program(self):
        prog = random_program(4, 2, np.random.default_rng(8), max_gates=3)
        model = build_h(materialize_unitary(prog))
        psi = make_state(4, "random:8")
        assert np.allclose(evolve(model, psi, 0.77).amps, scipy.linalg.expm(-0.77j * model.h) @ psi.amps, atol=1e-10)


class TestFractionalRoot:
    def test_identity(self):
        u = materialize_unitary(TimeStep(()), 2)
        assert np.allclose(fractional_root(u).matrix, np.eye(4), atol=1e-12)

    def test_not(self):
        u = materialize_unitary(parse_circuit("WIDTH 1\nNOT 0"))
        v = fractional_root(u).matrix
        assert fro(v @ v - u.matrix) <= 1e-10
        # eigenphases 0 and pi -> 0 and pi/2
        assert np.allclose(v, [[(1 + 1j) / 2, (1 - 1j) / 2], [(1 - 1j) / 2, (1 + 1j) / 2]], atol=1e-12)
        assert not np.allclose(np.abs(v), np.round(np.abs(v)))

    def test_cnot_chain(self):
        assert root_residual(materialize_unitary(CHAIN)) <= 1e-10

    def test_principal_branch_at_minus_one(self):
        u = DenseUnitary(1, -np.eye(2))
        assert np.allclose(fractional_root(u).matrix, 1j * np.eye(2), atol=1e-12)


class TestSupport:
    def test_identity(self):
        assert operator_support(materialize_unitary(TimeStep(()), 3)) == set()

    def test_single_not(self):
        assert operator_support(materialize_unitary(parse_circuit("WIDTH 3\nNOT 1"))) == {1}

    def test_root_of_cnot_chain_spreads(self):
        for step in CHAIN.steps:
            assert len(operator_support(materialize_unitary(step, 3))) == 2
        assert operator_support(fractional_root(materialize_unitary(CHAIN))) == {0, 1, 2}

    def test_commutator_oracle(self):
        # explicit Kronecker test operators on each site
        x, z, i2 = np.array([[0, 1], [1, 0]]), np.diag([1, -1]), np.eye(2)
        v = fractional_root(materialize_unitary(CHAIN)).matrix
        for site in range(3):
            errs = []
            for p in (x, z):
                op = np.kron(np.kron(p if site == 0 else i2, p if site == 1 else i2), p if site == 2 else i2)
                errs.append(fro(v @ op - op @ v))
            assert max(errs) > 1e-8


random_progs = st.builds(
    lambda w, n, seed: random_program(w, n, np.random.default_rng(seed), max_gates=4),
    st.integers(1, 4),
    st.integers(1, 3),
    st.integers(0, 2**32 - 1),
)


@settings(max_examples=40, deadline=None)
@given(random_progs)
def test_hamiltonian_invariants(prog):
    u = materialize_unitary(prog)
    model = build_h(u)
    assert model.hermiticity_error() <= 1e-12
    assert model.commutator_error() <= 1e-12
    assert model.spectrum_error() <= 1e-9
    assert np.all(np.abs(model.spectrum[0]) <= 2 + 1e-12)
    assert root_residual(u) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(random_progs)
def test_step_support_within_footprint(prog):
    for step in prog.steps:
        assert operator_support(materialize_unitary(step, prog.width)) <= step.footprint


@settings(max_examples=25, deadline=None)
@given(random_progs, st.floats(-5, 5))
def test_evolution_commutes_with_u(prog, t):
    model = build_h(materialize_unitary(prog))
    psi = make_state(prog.width, "random:1")
    a = apply_program(prog, evolve(model, psi, t))
    b = evolve(model, apply_program(prog, psi), t)
    assert abs(evolve(model, psi, t).norm - 1) <= 1e-12
    assert abs(fidelity(a, b) - 1) <= 1e-10
