"""
Histories of a reversible circuit
=================================

Run a small reversible circuit on a superposition and look at its
decoherence functional, first with every bit recorded at every epoch
and then with each epoch only watching the bits its step touches.
"""

# %%
import numpy as np

from qcuniverse import (
    BitString,
    Grain,
    build_D,
    footprint_grain,
    make_state,
    parse_circuit,
    refinement_consistency,
    run_trajectory,
)
from qcuniverse.revmachine import random_program

prog = parse_circuit("""
WIDTH 3
TOF 0 1 2
STEP
CNOT 2 0
STEP
SWAP 1 2
""")
psi = make_state(3, "random:7")
print("footprints:", [sorted(f) for f in prog.footprints])

# %%
# Every bit at every epoch. Off-diagonal entries vanish exactly, and each
# diagonal entry sits on the trajectory of one input pattern.
full = build_D(prog, psi, Grain.full())
print("histories with weight:", len(full.diag), "of", full.n_histories)
print("largest |off-diagonal|:", full.max_abs_offdiag)
for s in ["000", "110", "111"]:
    traj = tuple(str(b) for b in run_trajectory(prog, BitString.from_str(s)))
    print(" -> ".join(traj), f"p={full.entry(traj, traj).real:.4f}",
          f"|psi_b|^2={abs(psi.amps[int(s, 2)]) ** 2:.4f}")

# %%
# Coarser histories: each epoch only constrains the bits of its step.
local = build_D(prog, psi, footprint_grain(prog))
print("local grain sites:", local.sites)
print("largest |off-diagonal|:", local.max_abs_offdiag)
print("coarse-graining deviation:", refinement_consistency(full, local))

# %%
# A wider program is out of reach of exhaustive evaluation, so sample pairs.
rng = np.random.default_rng(3)
big = random_program(6, 3, rng)
report = build_D(big, make_state(6, "uniform"), Grain.full(), mode="sampled", pairs=20_000, seed=1)
print(f"{report.n_histories} history tuples, {report.n_pairs} sampled pairs,",
      f"max |off-diagonal| = {report.max_abs_offdiag}, sum of diagonal = {report.sum_diag.real:.15f}")
