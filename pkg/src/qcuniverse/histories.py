"""Projector-chain histories and the decoherence functional.

A history assigns a bit pattern to a set of sites at every epoch: epoch 0 is
the initial state and epoch ``k`` the state after ``k`` applications of U.
For histories ``h`` and ``h'`` sharing their final assignment::

    D(h, h') = tr[P(h_n) U ... U P(h_0) |psi><psi| P(h'_0) U^+ ... U^+]
             = <C_h' psi | C_h psi>

where ``C_h = P(h_n) U P(h_{n-1}) ... U P(h_0)`` is the class operator.
Entries whose final assignments differ are zero by convention. Projectors
are applied by zeroing amplitudes, never as matrices.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .qstate import StateVector, apply_gates
from .revmachine import (
    QuantumGate,
    ReversibleGate,
    ReversibleProgram,
    TimeStep,
    WidthMismatch,
    bit_mask,
)

EXHAUSTIVE_CAP = 4096
DEFAULT_PAIRS = 100_000
DECOHERENCE_TOL = 1e-10
CLAMP_TOL = 1e-12
# rows x amplitudes held at once while growing the branch tree
_TREE_ELEMENT_CAP = 1 << 26

History = tuple  # tuple[str, ...], one bit pattern per epoch


class HistoryError(ValueError):
    pass


class NotDecoherent(ValueError):
    """Raised when probabilities are requested for interfering histories."""


@dataclass(frozen=True)
class Grain:
    """Which sites each epoch's projector constrains.

    ``FULL`` constrains every site at every epoch. ``LOCAL`` carries an
    explicit sorted site tuple per epoch.
    """

    kind: str
    sites: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        if self.kind not in ("FULL", "LOCAL"):
            raise HistoryError(f"grain kind must be FULL or LOCAL, got {self.kind!r}")
        if self.kind == "LOCAL":
            if self.sites is None:
                raise HistoryError("LOCAL grain needs per-epoch site sets")
            object.__setattr__(self, "sites", tuple(tuple(sorted(set(s))) for s in self.sites))
        elif self.sites is not None:
            raise HistoryError("FULL grain takes no site sets")

    @classmethod
    def full(cls) -> "Grain":
        return cls("FULL")

    @classmethod
    def local(cls, sites: Iterable[Iterable[int]]) -> "Grain":
        return cls("LOCAL", tuple(tuple(s) for s in sites))

    def epoch_sites(self, prog: ReversibleProgram) -> list[tuple[int, ...]]:
        n_epochs = len(prog.steps) + 1
        if self.kind == "FULL":
            return [tuple(range(prog.width))] * n_epochs
        if len(self.sites) != n_epochs:
            raise HistoryError(f"grain has {len(self.sites)} epochs, program needs {n_epochs}")
        for k, s in enumerate(self.sites):
            if any(i < 0 or i >= prog.width for i in s):
                raise HistoryError(f"epoch {k}: sites {s} outside register of width {prog.width}")
        return list(self.sites)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.lower(),
            "sites": None if self.sites is None else [list(s) for s in self.sites],
        }


def footprint_grain(prog: ReversibleProgram) -> Grain:
    """LOCAL grain built from step footprints.

    Epoch ``k >= 1`` is constrained on the footprint of the step that produced
    it; epoch 0 on the footprint of the first step.
    """
    fps = [tuple(sorted(f)) for f in prog.footprints]
    if not fps:
        return Grain.local([()])
    return Grain.local([fps[0], *fps])


def _keys(sites: Sequence[int], width: int) -> np.ndarray:
    """``keys[b]`` = the pattern of basis index ``b`` read on ``sites``."""
    idx = np.arange(1 << width, dtype=np.int64)
    key = np.zeros_like(idx)
    for s in sites:
        key = (key << 1) | ((idx & bit_mask(s, width)) != 0)
    return key


class _Chain:
    """Precomputed per-epoch data for one (program, grain) pair."""

    def __init__(self, prog: ReversibleProgram, grain: Grain):
        self.prog = prog
        self.width = prog.width
        self.sites = grain.epoch_sites(prog)
        self.keys = [_keys(s, self.width) for s in self.sites]
        self.cards = [1 << len(s) for s in self.sites]

    @property
    def n_epochs(self) -> int:
        return len(self.sites)

    def n_histories(self) -> int:
        return reduce(lambda a, b: a * b, self.cards, 1)

    def encode(self, h: Sequence[str]) -> list[int]:
        if len(h) != self.n_epochs:
            raise HistoryError(f"history has {len(h)} epochs, expected {self.n_epochs}")
        out = []
        for k, (pat, s) in enumerate(zip(h, self.sites)):
            if len(pat) != len(s) or set(pat) - {"0", "1"}:
                raise HistoryError(f"epoch {k}: pattern {pat!r} does not cover sites {s}")
            out.append(int(pat, 2) if pat else 0)
        return out

    def decode(self, codes: Sequence[int]) -> History:
        return tuple(
            format(int(c), f"0{len(s)}b") if s else "" for c, s in zip(codes, self.sites)
        )

    def step_gates(self, k: int) -> tuple:
        return self.prog.steps[k].gates

    def branches(self, psi: StateVector, codes: np.ndarray) -> np.ndarray:
        """Class-operator images ``C_h psi`` for a batch of encoded histories."""
        codes = np.atleast_2d(np.asarray(codes, dtype=np.int64))
        v = np.broadcast_to(psi.amps, (len(codes), psi.amps.size)).copy()
        for k in range(self.n_epochs):
            if k:
                v = apply_gates(self.step_gates(k - 1), v.T, self.width).T
            v[self.keys[k][None, :] != codes[:, k][:, None]] = 0
        return v

    def tree(self, psi: StateVector) -> tuple[np.ndarray, np.ndarray]:
        """All histories with a non-zero branch, grown epoch by epoch.

        A branch that is exactly zero stays zero under later projectors and
        unitaries, so pruning it loses nothing.
        """
        codes = np.zeros((1, 0), dtype=np.int64)
        v = psi.amps[None, :].copy()
        for k in range(self.n_epochs):
            if k:
                v = apply_gates(self.step_gates(k - 1), v.T, self.width).T
            rows, cols = np.nonzero(v)
            pairs = np.unique(np.stack([rows, self.keys[k][cols]], axis=1), axis=0)
            if pairs.shape[0] * v.shape[1] > _TREE_ELEMENT_CAP:
                raise HistoryError("too many non-zero branches to enumerate; reduce width")
            v = np.where(self.keys[k][None, :] == pairs[:, 1][:, None], v[pairs[:, 0]], 0)
            codes = np.concatenate([codes[pairs[:, 0]], pairs[:, 1:2]], axis=1)
        return codes, v


def _check_inputs(prog: ReversibleProgram, psi: StateVector) -> None:
    if prog.width != psi.width:
        raise WidthMismatch(f"program width {prog.width} != state width {psi.width}")


def evaluate_D(
    prog: ReversibleProgram,
    psi: StateVector,
    h: Sequence[str],
    h_prime: Sequence[str],
    grain: Grain,
) -> complex:
    """One entry of the decoherence functional, by direct chain evaluation."""
    _check_inputs(prog, psi)
    chain = _Chain(prog, grain)
    a, b = chain.encode(h), chain.encode(h_prime)
    if a[-1] != b[-1]:
        return 0j
    va, vb = chain.branches(psi, np.array([a, b]))
    return complex(np.vdot(vb, va))


@dataclass
class DecoherenceReport:
    """Evaluated decoherence functional.

    ``diag`` holds every history with a non-zero diagonal entry (all other
    diagonal entries are exactly zero). ``offdiag`` holds the non-zero
    off-diagonal entries that were evaluated; in exhaustive mode every pair
    not listed is exactly zero.
    """

    grain: Grain
    mode: str
    width: int
    n_epochs: int
    n_histories: int
    diag: dict
    offdiag: dict
    n_pairs: int
    max_abs_offdiag: float
    max_re_offdiag: float
    seed: int | None = None
    sites: list = field(default_factory=list)

    @property
    def sum_diag(self) -> complex:
        return complex(sum(self.diag.values(), 0j))

    def entry(self, h: Sequence[str], h_prime: Sequence[str]) -> complex:
        h, h_prime = tuple(h), tuple(h_prime)
        if h == h_prime:
            return self.diag.get(h, 0j)
        return self.offdiag.get((h, h_prime), 0j)

    def to_dict(self) -> dict:
        diag = [
            {"history": list(h), "p": _clamp(d.real)}
            for h, d in sorted(self.diag.items())
        ]
        return {
            "grain": self.grain.to_dict(),
            "mode": self.mode,
            "width": self.width,
            "epochs": self.n_epochs,
            "n_histories": self.n_histories,
            "n_offdiag_pairs": self.n_pairs,
            "seed": self.seed,
            "diag": diag,
            "max_abs_offdiag": self.max_abs_offdiag,
            "max_re_offdiag": self.max_re_offdiag,
            "sum_diag": self.sum_diag.real,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _clamp(x: float) -> float:
    return 0.0 if -CLAMP_TOL <= x < 0 else float(x)


def _gram_by_final(codes: np.ndarray, vecs: np.ndarray, chain: _Chain):
    """Diagonal and off-diagonal entries among branches sharing a final assignment."""
    diag, offdiag = {}, {}
    max_abs = max_re = 0.0
    finals = codes[:, -1]
    for f in np.unique(finals):
        sel = np.flatnonzero(finals == f)
        g = vecs[sel].conj() @ vecs[sel].T  # g[i, j] = <v_i|v_j> = D(h_j, h_i)
        g = 0.5 * (g + g.conj().T)  # bitwise Hermitian
        hs = [chain.decode(codes[i]) for i in sel]
        for i, hi in enumerate(hs):
            diag[hi] = complex(g[i, i])
            for j, hj in enumerate(hs):
                if i != j and g[i, j] != 0:
                    offdiag[(hj, hi)] = complex(g[i, j])
        off = g[~np.eye(len(sel), dtype=bool)]
        if off.size:
            max_abs = max(max_abs, float(np.abs(off).max()))
            max_re = max(max_re, float(np.abs(off.real).max()))
    return diag, offdiag, max_abs, max_re


def build_D(
    prog: ReversibleProgram,
    psi: StateVector,
    grain: Grain,
    mode: str = "exhaustive",
    pairs: int = DEFAULT_PAIRS,
    seed: int = 0,
    batch: int = 8192,
) -> DecoherenceReport:
    """Evaluate the decoherence functional over a history family.

    ``exhaustive`` covers every history tuple (at most ``EXHAUSTIVE_CAP``) and
    every pair sharing a final assignment. ``sampled`` evaluates ``pairs``
    seeded random off-diagonal pairs: the first history is drawn from those
    with non-zero weight, the second shares its final assignment and is drawn
    either from the same final group or uniformly over all tuples. The
    diagonal is computed exactly in both modes.
    """
    _check_inputs(prog, psi)
    chain = _Chain(prog, grain)
    n_hist = chain.n_histories()
    codes, vecs = chain.tree(psi)
    if mode == "exhaustive":
        if n_hist > EXHAUSTIVE_CAP:
            raise HistoryError(
                f"{n_hist} history tuples exceed the exhaustive cap of {EXHAUSTIVE_CAP}; use sampled mode"
            )
        diag, offdiag, max_abs, max_re = _gram_by_final(codes, vecs, chain)
        n_pairs = sum(c * (c - 1) for c in np.unique(codes[:, -1], return_counts=True)[1])
        return DecoherenceReport(
            grain, mode, prog.width, chain.n_epochs, n_hist, diag, offdiag,
            int(n_pairs), max_abs, max_re, None, chain.sites,
        )
    if mode != "sampled":
        raise HistoryError(f"unknown mode {mode!r}")

    diag = {chain.decode(c): complex(np.vdot(v, v)) for c, v in zip(codes, vecs)}
    rng = np.random.default_rng(seed)
    order = np.argsort(codes[:, -1], kind="stable")
    codes, vecs = codes[order], vecs[order]
    _, start, size = np.unique(codes[:, -1], return_index=True, return_counts=True)
    group = np.repeat(np.arange(len(start)), size)
    first = rng.integers(0, len(codes), size=pairs)
    g = group[first]
    from_group = (rng.random(pairs) < 0.5) & (size[g] > 1)
    # another member of the same final group, never the history itself
    offset = (rng.random(pairs) * np.maximum(size[g] - 1, 1)).astype(np.int64)
    within = first - start[g]
    other = start[g] + np.where(offset >= within, offset + 1, offset)
    uniform = np.stack([rng.integers(0, c, size=pairs) for c in chain.cards], axis=1)
    a = codes[first]
    b = np.where(from_group[:, None], codes[np.minimum(other, len(codes) - 1)], uniform)
    b[:, -1] = a[:, -1]
    # redraw uniform partners that landed on the history itself
    if np.prod(chain.cards[:-1], dtype=np.float64) > 1:
        same = np.flatnonzero(np.all(a == b, axis=1))
        while same.size:
            b[same, :-1] = np.stack([rng.integers(0, c, size=same.size) for c in chain.cards[:-1]], axis=1)
            same = same[np.all(a[same] == b[same], axis=1)]
    keep = np.any(a != b, axis=1)
    a, b = a[keep], b[keep]

    offdiag = {}
    max_abs = max_re = 0.0
    for lo in range(0, len(a), batch):
        va = chain.branches(psi, a[lo:lo + batch])
        vb = chain.branches(psi, b[lo:lo + batch])
        vals = np.einsum("ij,ij->i", vb.conj(), va)
        if vals.size:
            max_abs = max(max_abs, float(np.abs(vals).max()))
            max_re = max(max_re, float(np.abs(vals.real).max()))
        for i in np.flatnonzero(vals):
            offdiag[(chain.decode(a[lo + i]), chain.decode(b[lo + i]))] = complex(vals[i])
    return DecoherenceReport(
        grain, mode, prog.width, chain.n_epochs, n_hist, diag, offdiag,
        int(len(a)), max_abs, max_re, seed, chain.sites,
    )


@dataclass(frozen=True)
class WeakDecoherence:
    max_abs_offdiag: float
    max_re_offdiag: float
    decoherent: bool
    tol: float


def weak_decoherence_report(report: DecoherenceReport, tol: float = DECOHERENCE_TOL) -> WeakDecoherence:
    """Check that every evaluated off-diagonal entry is purely imaginary."""
    return WeakDecoherence(
        report.max_abs_offdiag,
        report.max_re_offdiag,
        report.max_re_offdiag <= tol,
        tol,
    )


def history_probabilities(report: DecoherenceReport, tol: float = DECOHERENCE_TOL) -> dict:
    """Probabilities of the histories with non-zero weight.

    Refuses when the weak decoherence condition fails, since the diagonal
    would then violate the classical sum rules.
    """
    check = weak_decoherence_report(report, tol)
    if not check.decoherent:
        raise NotDecoherent(
            f"max |Re D(h,h')| = {check.max_re_offdiag:.3g} exceeds {tol:g}; histories interfere"
        )
    out = {}
    for h, d in report.diag.items():
        if d.real < -CLAMP_TOL:
            raise NotDecoherent(f"negative diagonal entry {d.real:.3g} for history {h}")
        out[h] = max(d.real, 0.0)
    return out


def _restrict(h: History, fine: list, coarse: list) -> History:
    out = []
    for pat, f, c in zip(h, fine, coarse):
        pos = {s: i for i, s in enumerate(f)}
        out.append("".join(pat[pos[s]] for s in c))
    return tuple(out)


def refinement_consistency(full_report: DecoherenceReport, local_report: DecoherenceReport) -> float:
    """Largest gap between a coarse diagonal entry and the summed fine entries refining it."""
    fine, coarse = full_report.sites, local_report.sites
    if full_report.width != local_report.width or len(fine) != len(coarse):
        raise HistoryError("reports describe different programs")
    for k, (f, c) in enumerate(zip(fine, coarse)):
        if not set(c) <= set(f):
            raise HistoryError(f"epoch {k}: coarse sites {c} not a subset of fine sites {f}")
    summed: dict = {}
    for h, d in full_report.diag.items():
        g = _restrict(h, fine, coarse)
        summed[g] = summed.get(g, 0j) + d
    keys = set(summed) | set(local_report.diag)
    return max(
        (abs(local_report.diag.get(g, 0j) - summed.get(g, 0j)) for g in keys),
        default=0.0,
    )


# Fixed circuits showing interference and its removal by a record bit.
RECORD_DEMOS = {
    "no-record": (
        ReversibleProgram(1, (TimeStep((QuantumGate("HADAMARD", 0),)), TimeStep((QuantumGate("HADAMARD", 0),)))),
        "basis:0",
        Grain.full(),
    ),
    "record": (
        ReversibleProgram(2, (TimeStep((QuantumGate("HADAMARD", 0),)), TimeStep((ReversibleGate("CNOT", (0, 1)),)))),
        "basis:00",
        Grain.local([(0,), (0,), (0, 1)]),
    ),
}


def record_demo(name: str) -> DecoherenceReport:
    from .qstate import make_state

    prog, spec, grain = RECORD_DEMOS[name]
    return build_D(prog, make_state(prog.width, spec), grain)
