"""
A Hamiltonian for a circuit
===========================

Turn one period of a reversible circuit into a unitary U, build
H = U + U^+ and check what it does. The square root of U is also
worked out, and it turns out to act on more bits than any single layer.
"""

# %%
import numpy as np

from qcuniverse import make_state, parse_circuit
from qcuniverse.hamiltonian import (
    build_h,
    evolve,
    fractional_root,
    materialize_unitary,
    operator_support,
    root_residual,
)

chain = parse_circuit("WIDTH 3\nCNOT 0 1\nSTEP\nCNOT 1 2")
u = materialize_unitary(chain)
model = build_h(u)
print("hermiticity error:", model.hermiticity_error())
print("||[H, U]||:", model.commutator_error())
print("spectrum of H:", np.round(model.spectrum[0], 6))

# %%
# Time evolution under H conserves the norm and commutes with U.
psi = make_state(3, "basis:100")
for t in (0.0, 0.4, 0.8, 1.2):
    phi = evolve(model, psi, t)
    print(f"t={t:.1f}", np.round(phi.probabilities(), 4))

# %%
root = fractional_root(u)
print("||V^2 - U||:", root_residual(u))
print("support of each layer:", [sorted(operator_support(materialize_unitary(s, 3))) for s in chain.steps])
print("support of the root:", sorted(operator_support(root)))
