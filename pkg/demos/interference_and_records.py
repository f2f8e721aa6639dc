"""
Interference and records
========================

Two Hadamards in a row on one qubit interfere: the two paths through the
middle epoch carry a real cross term, so they cannot be given classical
probabilities. Copying the middle value into a second bit with a CNOT
removes the cross term.
"""

# %%
from qcuniverse.histories import RECORD_DEMOS, record_demo, weak_decoherence_report

for name in RECORD_DEMOS:
    report = record_demo(name)
    check = weak_decoherence_report(report)
    print(f"{name:>9}: max |Re D(h,h')| = {check.max_re_offdiag:.3f}  decoherent={check.decoherent}")
    for (h, hp), d in sorted(report.offdiag.items()):
        print("          ", "/".join(h), "vs", "/".join(hp), f"{d.real:+.3f}{d.imag:+.3f}j")

# %%
# Diagonal weights of the recorded version sum to one and can be read as
# probabilities of the middle outcome.
from qcuniverse.histories import history_probabilities

for h, p in history_probabilities(record_demo("record")).items():
    print("/".join(h), round(p, 6))
