import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcuniverse.qstate import (
    StateVector,
    apply_program,
    apply_step_unitary,
    fidelity,
    make_state,
)
from qcuniverse.revmachine import (
    QuantumGate,
    TimeStep,
    WidthMismatch,
    parse_circuit,
    random_program,
)

from oracles import program_matrix, step_matrix

TOL = 1e-12


def test_make_state_examples():
    assert np.array_equal(make_state(1, "basis:0").amps, [1, 0])
    assert np.allclose(make_state(2, "uniform").amps, [0.5] * 4, atol=TOL)
    a = make_state(3, "random:42")
    assert abs(a.norm - 1) <= TOL
    assert np.array_equal(a.amps, make_state(3, "random:42").amps)
    assert not np.array_equal(a.amps, make_state(3, "random:43").amps)
    assert make_state(3, "basis:110").amps[6] == 1


@pytest.mark.parametrize("spec", ["basis:01", "basis:", "basis:0a0", "random:x", "uniform:2", "zero", ""])
def test_make_state_rejects(spec):
    with pytest.raises(ValueError):
        make_state(3, spec)


def test_state_is_immutable():
    psi = make_state(2, "uniform")
    with pytest.raises(ValueError):
        psi.amps[0] = 0


def test_apply_examples():
    not0 = parse_circuit("WIDTH 1\nNOT 0").steps[0]
    assert np.array_equal(apply_step_unitary(not0, make_state(1, "basis:0")).amps, [0, 1])
    alpha, beta = 0.6, 0.8j
    out = apply_step_unitary(not0, StateVector(1, [alpha, beta]))
    assert np.allclose(out.amps, [beta, alpha], atol=TOL)
    h = apply_step_unitary(QuantumGate("HADAMARD", 0), make_state(1, "basis:0"))
    assert np.allclose(h.amps, [2 ** -0.5, 2 ** -0.5], atol=TOL)


def test_width_mismatch():
    with pytest.raises(WidthMismatch):
        apply_step_unitary(parse_circuit("WIDTH 3\nNOT 2").steps[0], make_state(2, "uniform"))
    with pytest.raises(WidthMismatch):
        fidelity(make_state(1, "uniform"), make_state(2, "uniform"))


def test_fidelity_examples():
    psi = make_state(3, "random:5")
    assert abs(fidelity(psi, psi) - 1) <= TOL
    assert fidelity(make_state(1, "basis:0"), make_state(1, "basis:1")) == 0
    assert abs(fidelity(make_state(1, "basis:0"), make_state(1, "uniform")) - 0.5) <= TOL


def _mixed_step(rng, width):
    gates = []
    prog = random_program(width, 1, rng, max_gates=3)
    gates.extend(prog.steps[0].gates)
    for _ in range(2):
        site = int(rng.integers(width))
        if rng.random() < 0.5:
            gates.append(QuantumGate("HADAMARD", site))
        else:
            gates.append(QuantumGate("PHASE", site, float(rng.uniform(-np.pi, np.pi))))
    rng.shuffle(gates)
    return TimeStep(tuple(gates))


@pytest.mark.parametrize("seed", range(10))
def test_step_matches_dense_matrix(seed):
    rng = np.random.default_rng(seed)
    width = int(rng.integers(1, 5))
    step = _mixed_step(rng, width)
    psi = make_state(width, f"random:{seed}")
    out = apply_step_unitary(step, psi)
    assert np.allclose(out.amps, step_matrix(step, width) @ psi.amps, atol=TOL)


def test_program_matches_dense_matrix():
    prog = random_program(4, 3, np.random.default_rng(7), max_gates=4)
    psi = make_state(4, "random:7")
    assert np.allclose(apply_program(prog, psi).amps, program_matrix(prog) @ psi.amps, atol=TOL)


def _inverse(step):
    return [g.inverse() if not g.classical else g for g in reversed(step.gates)]


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 6))
def test_step_then_inverse_is_identity(seed, width):
    rng = np.random.default_rng(seed)
    step = _mixed_step(rng, width)
    psi = make_state(width, f"random:{seed}")
    back = apply_step_unitary(_inverse(step), apply_step_unitary(step, psi))
    assert np.max(np.abs(back.amps - psi.amps)) <= TOL


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 8))
def test_reversible_step_permutes_basis_states(seed, width):
    rng = np.random.default_rng(seed)
    step = random_program(width, 1, rng, max_gates=4).steps[0]
    b = int(rng.integers(1 << width))
    out = apply_step_unitary(step, make_state(width, "basis:" + format(b, f"0{width}b")))
    nz = np.flatnonzero(out.amps)
    assert len(nz) == 1 and abs(abs(out.amps[nz[0]]) - 1) <= TOL
    assert nz[0] == step.permutation(width)[b]


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 5))
def test_linearity(seed, width):
    rng = np.random.default_rng(seed)
    step = _mixed_step(rng, width)
    u = make_state(width, f"random:{seed}").amps
    v = make_state(width, f"random:{seed + 1}").amps
    a, b = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
    combo = a * u + b * v
    norm = np.linalg.norm(combo)
    lhs = apply_step_unitary(step, StateVector(width, combo / norm)).amps * norm
    rhs = a * apply_step_unitary(step, StateVector(width, u)).amps + b * apply_step_unitary(step, StateVector(width, v)).amps
    assert np.max(np.abs(lhs - rhs)) <= TOL * max(1.0, norm)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 6), st.integers(1, 12))
def test_norm_preserved(seed, width, n_steps):
    rng = np.random.default_rng(seed)
    psi = make_state(width, f"random:{seed}")
    for _ in range(n_steps):
        psi = apply_step_unitary(_mixed_step(rng, width), psi)
    assert abs(np.sum(np.abs(psi.amps) ** 2) - 1) <= TOL
