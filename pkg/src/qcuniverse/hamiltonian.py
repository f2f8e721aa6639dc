"""Dense unitaries, the Hamiltonian H = U + U^+, and fractional-time roots."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .qstate import StateVector, apply_gates
from .revmachine import ReversibleProgram, TimeStep, WidthMismatch, bit_mask

DENSE_CAP = 10
UNITARY_TOL = 1e-10
SUPPORT_TOL = 1e-8
# eigenphases this close to -pi are put on the +pi side of the principal branch
_BRANCH_TOL = 1e-9


class UnitarityError(ValueError):
    pass


def _fro(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, "fro"))


@dataclass(frozen=True, eq=False)
class DenseUnitary:
    width: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (1 << self.width,) * 2:
            raise ValueError(f"matrix shape {m.shape} does not match width {self.width}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return 1 << self.width

    def unitarity_error(self) -> float:
        return _fro(self.matrix.conj().T @ self.matrix - np.eye(self.dim))

    @cached_property
    def eig(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenphases in (-pi, pi] and an orthonormal eigenbasis (columns).

        Uses the complex Schur form, which is diagonal for a normal matrix and
        so always returns a unitary eigenbasis, even on degenerate eigenspaces.
        """
        t, z = scipy.linalg.schur(self.matrix, output="complex")
        theta = np.angle(np.diag(t))
        theta = np.where(theta <= -np.pi + _BRANCH_TOL, np.pi, theta)
        return theta, z

    def __matmul__(self, other: "DenseUnitary") -> "DenseUnitary":
        return DenseUnitary(self.width, self.matrix @ other.matrix)


def materialize_unitary(obj, width: int | None = None) -> DenseUnitary:
    """Dense matrix of a time step or a whole program.

    Column ``b`` is the image of basis state ``|b>``. A program's unitary is
    the ordered product of its step unitaries, last step leftmost.
    """
    if isinstance(obj, ReversibleProgram):
        if width is not None and width != obj.width:
            raise WidthMismatch(f"program width {obj.width} != {width}")
        width, gates = obj.width, [g for s in obj.steps for g in s.gates]
    elif isinstance(obj, TimeStep):
        if width is None:
            raise ValueError("width is required for a single step")
        gates = list(obj.gates)
    else:
        raise TypeError(f"cannot materialise {type(obj).__name__}")
    if width > DENSE_CAP:
        raise ValueError(f"width {width} exceeds the dense-matrix cap of {DENSE_CAP}")
    if any(s >= width for g in gates for s in g.sites):
        raise WidthMismatch("gate site beyond register width")
    return DenseUnitary(width, apply_gates(gates, np.eye(1 << width, dtype=complex), width))


@dataclass(frozen=True, eq=False)
class HamiltonianModel:
    u: DenseUnitary
    h: np.ndarray

    @property
    def width(self) -> int:
        return self.u.width

    @cached_property
    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linalg.eigh(self.h)

    def hermiticity_error(self) -> float:
        return _fro(self.h - self.h.conj().T)

    def commutator_error(self) -> float:
        return _fro(self.h @ self.u.matrix - self.u.matrix @ self.h)

    def spectrum_error(self) -> float:
        """Gap between eig(H) and 2 cos(theta_k) from an independent decomposition of U."""
        theta, _ = self.u.eig
        expected = np.sort(2 * np.cos(theta))
        return float(np.max(np.abs(np.sort(self.spectrum[0]) - expected)))


def build_h(u: DenseUnitary, tol: float = UNITARY_TOL) -> HamiltonianModel:
    err = u.unitarity_error()
    if err > tol:
        raise UnitarityError(f"input is not unitary: ||U^+U - I|| = {err:.3g}")
    return HamiltonianModel(u, u.matrix + u.matrix.conj().T)


def evolve(model: HamiltonianModel, psi: StateVector, t: float) -> StateVector:
    """``exp(-iHt) |psi>`` through the eigendecomposition of H."""
    if psi.width != model.width:
        raise WidthMismatch(f"state width {psi.width} != Hamiltonian width {model.width}")
    w, v = model.spectrum
    return StateVector(psi.width, v @ (np.exp(-1j * w * t) * (v.conj().T @ psi.amps)))


def fractional_root(u: DenseUnitary) -> DenseUnitary:
    """Principal square root: eigenphases in (-pi, pi] are halved."""
    theta, z = u.eig
    return DenseUnitary(u.width, (z * np.exp(0.5j * theta)) @ z.conj().T)


def root_residual(u: DenseUnitary) -> float:
    v = fractional_root(u).matrix
    return _fro(v @ v - u.matrix)


def operator_support(v: DenseUnitary, tol: float = SUPPORT_TOL) -> set[int]:
    """Sites on which ``v`` acts non-trivially.

    Site ``i`` is in the support iff ``v`` fails to commute with the bit flip
    or the phase flip on ``i``. Commuting with both means commuting with every
    single-site operator on ``i``, i.e. acting as the identity there.
    """
    if v.width > DENSE_CAP:
        raise ValueError(f"width {v.width} exceeds the dense-matrix cap of {DENSE_CAP}")
    m = v.matrix
    idx = np.arange(v.dim)
    support = set()
    for i in range(v.width):
        mask = bit_mask(i, v.width)
        flip = idx ^ mask
        # X m X permutes rows and columns; Z m Z flips signs of mixed entries
        xmx = m[np.ix_(flip, flip)]
        sign = np.where(idx & mask, -1.0, 1.0)
        zmz = sign[:, None] * m * sign[None, :]
        if _fro(m - xmx) > tol or _fro(m - zmz) > tol:
            support.add(i)
    return support


def hamiltonian_report(prog: ReversibleProgram) -> dict:
    """Numerical checks of H = U + U^+ for a program, as a JSON-ready dict."""
    u = materialize_unitary(prog)
    model = build_h(u)
    root = fractional_root(u)
    return {
        "width": prog.width,
        "unitarity_err": u.unitarity_error(),
        "hermiticity_err": model.hermiticity_error(),
        "commutator_err": model.commutator_error(),
        "spectrum_err": model.spectrum_error(),
        "root_residual": root_residual(u),
        "support": sorted(operator_support(root)),
        "step_supports": [
            sorted(operator_support(materialize_unitary(s, prog.width))) for s in prog.steps
        ],
    }
