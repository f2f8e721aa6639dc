"""Dense state vectors over n qubits and the unitaries induced by time steps."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .revmachine import MAX_WIDTH, QuantumGate, ReversibleProgram, TimeStep, WidthMismatch

NORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class StateVector:
    """Amplitudes ``amps[b]`` over the basis states of a width-``n`` register."""

    width: int
    amps: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex)
        if amps.shape != (1 << self.width,):
            raise ValueError(f"expected {1 << self.width} amplitudes, got shape {amps.shape}")
        amps.flags.writeable = False
        object.__setattr__(self, "amps", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def __repr__(self) -> str:
        return f"StateVector(width={self.width}, amps={np.array2string(self.amps, precision=4)})"


def make_state(width: int, spec: str) -> StateVector:
    """Build a state from a spec string.

    ``basis:<bits>`` is a computational basis state, ``uniform`` the equal
    superposition, and ``random:<seed>`` a seeded Gaussian complex vector
    normalised to unit length.
    """
    if not 1 <= width <= MAX_WIDTH:
        raise ValueError(f"width must be in 1..{MAX_WIDTH}, got {width}")
    kind, _, arg = spec.partition(":")
    dim = 1 << width
    if kind == "basis":
        if len(arg) != width or not arg or set(arg) - {"0", "1"}:
            raise ValueError(f"basis spec {spec!r} needs exactly {width} bits")
        amps = np.zeros(dim, dtype=complex)
        amps[int(arg, 2)] = 1.0
    elif kind == "uniform" and not arg:
        amps = np.full(dim, 2.0 ** (-width / 2), dtype=complex)
    elif kind == "random":
        try:
            seed = int(arg)
        except ValueError:
            raise ValueError(f"random spec {spec!r} needs an integer seed") from None
        rng = np.random.default_rng(seed)
        amps = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        amps /= np.linalg.norm(amps)
    else:
        raise ValueError(f"malformed state spec {spec!r}; expected basis:<bits>, uniform or random:<seed>")
    return StateVector(width, amps)


def apply_gates(gates: Iterable, arr: np.ndarray, width: int) -> np.ndarray:
    """Apply gates along axis 0 of ``arr`` (shape ``(2**width, ...)``).

    Classical gates act as index permutations; quantum gates are contracted
    on their qubit axis. Returns a new array.
    """
    out = np.array(arr, dtype=complex)
    trailing = out.shape[1:]
    for g in gates:
        if g.classical:
            perm = g.apply_indices(np.arange(1 << width, dtype=np.int64), width)
            moved = np.empty_like(out)
            moved[perm] = out
            out = moved
        else:
            t = out.reshape((2,) * width + trailing)
            t = np.moveaxis(np.tensordot(g.matrix(), t, axes=([1], [g.site])), 0, g.site)
            out = t.reshape(out.shape)
    return out


def _gates_of(step) -> tuple:
    if isinstance(step, TimeStep):
        return step.gates
    if isinstance(step, QuantumGate):
        return (step,)
    return tuple(step)


def apply_step_unitary(step, psi: StateVector) -> StateVector:
    """Apply one time step (or a list of gates) to ``psi``.

    For a classical step the amplitude of ``|U(b)>`` in the output is the
    amplitude of ``|b>`` in the input.
    """
    gates = _gates_of(step)
    for g in gates:
        if any(s >= psi.width for s in g.sites):
            raise WidthMismatch(f"gate {g} exceeds state width {psi.width}")
    return StateVector(psi.width, apply_gates(gates, psi.amps, psi.width))


def apply_program(prog: ReversibleProgram, psi: StateVector) -> StateVector:
    if prog.width != psi.width:
        raise WidthMismatch(f"program width {prog.width} != state width {psi.width}")
    for step in prog.steps:
        psi = apply_step_unitary(step, psi)
    return psi


def fidelity(a: StateVector, b: StateVector) -> float:
    """``|<a|b>|**2``."""
    if a.width != b.width:
        raise WidthMismatch(f"widths differ: {a.width} vs {b.width}")
    return float(abs(np.vdot(a.amps, b.amps)) ** 2)
