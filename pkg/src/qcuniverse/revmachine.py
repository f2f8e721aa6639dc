"""Reversible classical machines: bit strings, gates, time steps and programs.

Bit ``i`` of a register of width ``n`` is the ``i``-th character of its
pattern string, and the most significant bit of the integer encoding, so the
pattern ``"110"`` is the integer 6.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MAX_WIDTH = 16
DEFAULT_CHECK_WIDTH = 8

REVERSIBLE_KINDS = {"NOT": 1, "CNOT": 2, "SWAP": 2, "TOFFOLI": 3, "FREDKIN": 3}
QUANTUM_KINDS = {"HADAMARD": 1, "PHASE": 1}

# circuit-file mnemonics -> gate kinds
_MNEMONICS = {
    "NOT": "NOT",
    "CNOT": "CNOT",
    "SWAP": "SWAP",
    "TOF": "TOFFOLI",
    "FRED": "FREDKIN",
    "H": "HADAMARD",
    "PHASE": "PHASE",
}
_KIND_TO_MNEMONIC = {v: k for k, v in _MNEMONICS.items()}


class CircuitError(ValueError):
    """Malformed circuit text or gate definition."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class WidthMismatch(ValueError):
    pass


def bit_mask(site: int, width: int) -> int:
    return 1 << (width - 1 - site)


@dataclass(frozen=True)
class BitString:
    """A classical register value of fixed width."""

    width: int
    value: int

    def __post_init__(self):
        if not 1 <= self.width <= MAX_WIDTH:
            raise ValueError(f"width must be in 1..{MAX_WIDTH}, got {self.width}")
        if not 0 <= self.value < (1 << self.width):
            raise ValueError(f"value {self.value} out of range for width {self.width}")

    @classmethod
    def from_str(cls, bits: str) -> "BitString":
        if not bits or set(bits) - {"0", "1"}:
            raise ValueError(f"not a bit pattern: {bits!r}")
        return cls(len(bits), int(bits, 2))

    @classmethod
    def from_bits(cls, bits: Sequence[bool | int]) -> "BitString":
        return cls.from_str("".join("1" if b else "0" for b in bits))

    @property
    def bits(self) -> tuple[bool, ...]:
        return tuple(bool(self.value & bit_mask(i, self.width)) for i in range(self.width))

    def __getitem__(self, site: int) -> bool:
        return bool(self.value & bit_mask(site, self.width))

    def __int__(self) -> int:
        return self.value

    def __str__(self) -> str:
        return format(self.value, f"0{self.width}b")


def _check_sites(sites: Sequence[int], arity: int, kind: str) -> tuple[int, ...]:
    sites = tuple(int(s) for s in sites)
    if len(sites) != arity:
        raise CircuitError(f"{kind} takes {arity} site(s), got {len(sites)}")
    if any(s < 0 for s in sites):
        raise CircuitError(f"{kind}: negative site index in {sites}")
    if len(set(sites)) != len(sites):
        raise CircuitError(f"{kind}: duplicate sites {sites}")
    return sites


@dataclass(frozen=True)
class ReversibleGate:
    """One of NOT, CNOT, SWAP, TOFFOLI, FREDKIN on distinct sites.

    Controls come first: ``CNOT c t``, ``TOFFOLI c1 c2 t``, ``FREDKIN c a b``.
    All five kinds are self-inverse.
    """

    kind: str
    sites: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in REVERSIBLE_KINDS:
            raise CircuitError(f"unknown reversible gate kind {self.kind!r}")
        object.__setattr__(self, "sites", _check_sites(self.sites, REVERSIBLE_KINDS[self.kind], self.kind))

    classical = True

    def apply_indices(self, idx: np.ndarray, width: int) -> np.ndarray:
        """Image of every basis index in ``idx`` (vectorised truth table)."""
        m = [bit_mask(s, width) for s in self.sites]
        idx = np.asarray(idx, dtype=np.int64)
        if self.kind == "NOT":
            return idx ^ m[0]
        if self.kind == "CNOT":
            return np.where((idx & m[0]) != 0, idx ^ m[1], idx)
        if self.kind == "TOFFOLI":
            return np.where(((idx & m[0]) != 0) & ((idx & m[1]) != 0), idx ^ m[2], idx)
        if self.kind == "SWAP":
            a, b = m
        else:  # FREDKIN: controlled swap of sites 1, 2
            a, b = m[1], m[2]
        differ = ((idx & a) != 0) != ((idx & b) != 0)
        if self.kind == "FREDKIN":
            differ &= (idx & m[0]) != 0
        return np.where(differ, idx ^ (a | b), idx)

    def __str__(self) -> str:
        return " ".join([_KIND_TO_MNEMONIC[self.kind], *map(str, self.sites)])


@dataclass(frozen=True)
class QuantumGate:
    """HADAMARD or PHASE(angle) on a single site."""

    kind: str
    site: int
    angle: float = 0.0

    classical = False

    def __post_init__(self):
        if self.kind not in QUANTUM_KINDS:
            raise CircuitError(f"unknown quantum gate kind {self.kind!r}")
        if self.site < 0:
            raise CircuitError(f"{self.kind}: negative site index {self.site}")
        if self.kind == "HADAMARD" and self.angle:
            raise CircuitError("HADAMARD takes no angle")

    @property
    def sites(self) -> tuple[int, ...]:
        return (self.site,)

    def matrix(self) -> np.ndarray:
        if self.kind == "HADAMARD":
            return np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
        return np.diag([1.0, np.exp(1j * self.angle)])

    def inverse(self) -> "QuantumGate":
        if self.kind == "PHASE":
            return QuantumGate("PHASE", self.site, -self.angle)
        return self

    def __str__(self) -> str:
        if self.kind == "PHASE":
            return f"PHASE {self.site} {self.angle!r}"
        return f"H {self.site}"


@dataclass(frozen=True)
class TimeStep:
    """Gates applied left to right during one application of U."""

    gates: tuple = ()
    footprint: frozenset = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "footprint", frozenset(s for g in self.gates for s in g.sites))

    @property
    def classical(self) -> bool:
        return all(g.classical for g in self.gates)

    def permutation(self, width: int) -> np.ndarray:
        """Array ``perm`` with ``perm[b]`` the image of basis index ``b``."""
        if not self.classical:
            raise TypeError("step contains quantum gates; it has no classical image")
        idx = np.arange(1 << width, dtype=np.int64)
        for g in self.gates:
            idx = g.apply_indices(idx, width)
        return idx


@dataclass(frozen=True)
class ReversibleProgram:
    """A register width and the ordered time steps of the update rule."""

    width: int
    steps: tuple[TimeStep, ...]

    def __post_init__(self):
        if not 1 <= self.width <= MAX_WIDTH:
            raise CircuitError(f"width must be in 1..{MAX_WIDTH}, got {self.width}")
        steps = tuple(s if isinstance(s, TimeStep) else TimeStep(tuple(s)) for s in self.steps)
        for k, step in enumerate(steps):
            bad = [s for s in step.footprint if s >= self.width]
            if bad:
                raise CircuitError(f"step {k}: site(s) {sorted(bad)} out of range for width {self.width}")
        object.__setattr__(self, "steps", steps)

    @property
    def classical(self) -> bool:
        return all(s.classical for s in self.steps)

    @property
    def footprints(self) -> list[frozenset]:
        return [s.footprint for s in self.steps]

    def cycled(self, n_steps: int) -> "ReversibleProgram":
        """The same rule repeated cyclically until it has ``n_steps`` steps."""
        if not self.steps:
            return ReversibleProgram(self.width, (TimeStep(),) * n_steps)
        return ReversibleProgram(self.width, tuple(self.steps[k % len(self.steps)] for k in range(n_steps)))

    def to_text(self) -> str:
        lines = [f"WIDTH {self.width}"]
        for k, step in enumerate(self.steps):
            if k:
                lines.append("STEP")
            lines.extend(str(g) for g in step.gates)
        return "\n".join(lines) + "\n"


def parse_circuit(text: str) -> ReversibleProgram:
    """Parse circuit-file text into a program.

    The first non-blank, non-comment line must be ``WIDTH n``. Gate lines use
    the mnemonics NOT, CNOT, SWAP, TOF, FRED (plus H and PHASE for quantum
    steps); a ``STEP`` line starts a new time step and ``#`` starts a comment.
    """
    width = None
    steps: list[list] = [[]]
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *args = line.split()
        head = head.upper()
        if width is None:
            if head != "WIDTH" or len(args) != 1:
                raise CircuitError("expected 'WIDTH n' as first line", lineno)
            try:
                width = int(args[0])
            except ValueError:
                raise CircuitError(f"bad width {args[0]!r}", lineno) from None
            if not 1 <= width <= MAX_WIDTH:
                raise CircuitError(f"width must be in 1..{MAX_WIDTH}, got {width}", lineno)
            continue
        if head == "WIDTH":
            raise CircuitError("duplicate WIDTH line", lineno)
        if head == "STEP":
            if args:
                raise CircuitError("STEP takes no arguments", lineno)
            steps.append([])
            continue
        if head not in _MNEMONICS:
            raise CircuitError(f"unknown gate {head!r}", lineno)
        kind = _MNEMONICS[head]
        try:
            if kind == "PHASE":
                if len(args) != 2:
                    raise CircuitError("PHASE takes a site and an angle")
                gate = QuantumGate(kind, int(args[0]), float(args[1]))
            elif kind == "HADAMARD":
                if len(args) != 1:
                    raise CircuitError("H takes one site")
                gate = QuantumGate(kind, int(args[0]))
            else:
                gate = ReversibleGate(kind, tuple(int(a) for a in args))
        except CircuitError as exc:
            raise CircuitError(str(exc), lineno) from None
        except ValueError:
            raise CircuitError(f"non-integer site index in {line!r}", lineno) from None
        bad = [s for s in gate.sites if s >= width]
        if bad:
            raise CircuitError(f"site index {bad[0]} out of range for width {width}", lineno)
        steps[-1].append(gate)
    if width is None:
        raise CircuitError("empty circuit: missing WIDTH line")
    return ReversibleProgram(width, tuple(TimeStep(tuple(g)) for g in steps))


def load_circuit(path) -> ReversibleProgram:
    with open(path) as fh:
        return parse_circuit(fh.read())


def _check_width(b: BitString, width: int) -> None:
    if b.width != width:
        raise WidthMismatch(f"bit string width {b.width} != program width {width}")


def apply_step(step: TimeStep, b: BitString) -> BitString:
    """Image of ``b`` under the gates of ``step`` applied in order."""
    bad = [s for s in step.footprint if s >= b.width]
    if bad:
        raise WidthMismatch(f"step touches site {bad[0]} beyond width {b.width}")
    if not step.classical:
        raise TypeError("step contains quantum gates")
    idx = np.array([b.value], dtype=np.int64)
    for g in step.gates:
        idx = g.apply_indices(idx, b.width)
    return BitString(b.width, int(idx[0]))


def run_trajectory(prog: ReversibleProgram, b1: BitString) -> list[BitString]:
    """The classical trajectory ``(b1, U(b1), U^2(b1), ...)``, one entry per epoch."""
    _check_width(b1, prog.width)
    out = [b1]
    for step in prog.steps:
        out.append(apply_step(step, out[-1]))
    return out


def check_reversible(prog: ReversibleProgram, max_width: int = DEFAULT_CHECK_WIDTH) -> list[bool]:
    """Exhaustively test each step for bijectivity on all ``2**width`` inputs."""
    if prog.width > min(max_width, MAX_WIDTH):
        raise ValueError(f"width {prog.width} too large for exhaustive check (cap {max_width})")
    n = 1 << prog.width
    return [np.unique(step.permutation(prog.width)).size == n for step in prog.steps]


def random_program(
    width: int,
    n_steps: int,
    rng: np.random.Generator,
    max_gates: int = 3,
    kinds: Iterable[str] = tuple(REVERSIBLE_KINDS),
) -> ReversibleProgram:
    """A random program of reversible gates; steps may be empty."""
    kinds = [k for k in kinds if REVERSIBLE_KINDS[k] <= width]
    steps = []
    for _ in range(n_steps):
        gates = []
        for _ in range(int(rng.integers(0, max_gates + 1))):
            kind = kinds[int(rng.integers(len(kinds)))]
            sites = rng.choice(width, size=REVERSIBLE_KINDS[kind], replace=False)
            gates.append(ReversibleGate(kind, tuple(int(s) for s in sites)))
        steps.append(TimeStep(tuple(gates)))
    return ReversibleProgram(width, tuple(steps))
