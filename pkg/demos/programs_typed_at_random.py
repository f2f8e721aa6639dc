"""
Programs typed at random
========================

Feed fair coin flips to a small self-delimiting machine and see which
outputs come out. Structured outputs such as long runs of zeros show up
far more often than coin flipping them directly would suggest.
"""

# %%
from qcuniverse.algoprob import (
    advantage_ratio,
    decode_and_run,
    disassemble,
    enumerate_programs,
    khat,
    load_witnesses,
    sample_programs,
    zeros_witness,
)

ensemble = enumerate_programs(18)
print(f"halting programs up to 18 bits: {len(ensemble.programs)}, Kraft sum {ensemble.kraft}")
for s, mass in ensemble.top(8):
    print(f"{s!r:>8}  P={mass:.6f}  shortest={disassemble(ensemble.shortest[s])}")

# %%
# The same numbers from a million random runs.
sampled = sample_programs(1_000_000, seed=0, l_max=18)
for s, mass in ensemble.top(5):
    print(f"{s!r:>8}  enumerated={mass:.5f}  sampled={sampled.frequency(s):.5f}")

# %%
# Sixty-four zeros from a 38-bit program, and 128 zeros from 41 bits.
for n in (64, 128):
    w = zeros_witness(n)
    print(n, len(w), disassemble(w), decode_and_run(w).output == "0" * n)

# %%
for n in (64, 128):
    est = khat("0" * n, witnesses=load_witnesses(), report=ensemble)
    adv = advantage_ratio("0" * n, est)
    print(f"0^{n}: K <= {est.khat}, random programs beat coin flips by at least 2^{adv.log2_ratio:.0f}")
