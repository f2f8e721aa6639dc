"""A self-delimiting toy machine and the random-program measure over it.

Programs are read three bits at a time, on demand, as execution reaches
undecoded code::

    000 HALT   001 OUT0   010 OUT1   011 INC
    100 DEC    101 DBL    110 RIGHT  111 LOOP k   (k: 5-bit operand)

The tape is a ring of 64 eight-bit cells, initially zero. ``LOOP k`` jumps
back ``k`` decoded instructions, counting itself, when the current cell is
non-zero (``LOOP 1`` repeats itself, ``LOOP 2`` resumes at the previous
instruction; targets before the first instruction clamp to it, and ``k = 0``
is a no-op). Because bits are consumed only until HALT, halting programs
form a prefix-free set and each carries weight ``2**-len``.
"""
from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

OPCODES = ["HALT", "OUT0", "OUT1", "INC", "DEC", "DBL", "RIGHT", "LOOP"]
OPCODE_BITS = 3
OPERAND_BITS = 5
TAPE_CELLS = 64
DEFAULT_BUDGET = 4096
DEFAULT_L_MAX = 18
MAX_L_MAX = 24

HALTED, BUDGET_EXCEEDED, BITS_EXHAUSTED = 0, 1, 2
STATUS_NAMES = ("halted", "budget_exceeded", "bits_exhausted")


@njit(cache=True)
def _run(bits, start, end, budget, ops, args, tape, out):
    """Execute from ``bits[start:end]``.

    Returns ``(status, consumed, out_len, steps)``; the output bits are left
    in ``out[:out_len]``. ``ops``/``args`` need ``budget + 1`` slots.
    """
    tape[:] = 0
    head = 0
    ip = 0
    n_decoded = 0
    pos = start
    steps = 0
    out_len = 0
    while True:
        if steps == budget:
            return BUDGET_EXCEEDED, pos - start, out_len, steps
        if ip == n_decoded:
            if pos + OPCODE_BITS > end:
                return BITS_EXHAUSTED, pos - start, out_len, steps
            op = (bits[pos] << 2) | (bits[pos + 1] << 1) | bits[pos + 2]
            pos += OPCODE_BITS
            k = 0
            if op == 7:
                if pos + OPERAND_BITS > end:
                    return BITS_EXHAUSTED, pos - start, out_len, steps
                for j in range(OPERAND_BITS):
                    k = (k << 1) | bits[pos + j]
                pos += OPERAND_BITS
            ops[n_decoded] = op
            args[n_decoded] = k
            n_decoded += 1
        op = ops[ip]
        steps += 1
        if op == 0:
            return HALTED, pos - start, out_len, steps
        elif op == 1:
            out[out_len] = 0
            out_len += 1
        elif op == 2:
            out[out_len] = 1
            out_len += 1
        elif op == 3:
            tape[head] = (tape[head] + 1) & 255
        elif op == 4:
            tape[head] = (tape[head] + 255) & 255
        elif op == 5:
            tape[head] = (tape[head] << 1) & 255
        elif op == 6:
            head = (head + 1) % TAPE_CELLS
        else:
            k = args[ip]
            if k > 0 and tape[head] != 0:
                ip = max(ip - (k - 1), 0)
                continue
        ip += 1


class _Scratch:
    """Reusable buffers for ``_run`` at a given budget."""

    def __init__(self, budget: int):
        if budget < 1:
            raise ValueError("budget must be >= 1")
        self.budget = budget
        self.ops = np.zeros(budget + 1, dtype=np.int64)
        self.args = np.zeros(budget + 1, dtype=np.int64)
        self.tape = np.zeros(TAPE_CELLS, dtype=np.int64)
        self.out = np.zeros(budget + 1, dtype=np.uint8)

    def run(self, bits: np.ndarray, start: int, end: int):
        status, consumed, n_out, steps = _run(
            bits, start, end, self.budget, self.ops, self.args, self.tape, self.out
        )
        return int(status), int(consumed), self.out[:n_out], int(steps)


def _as_bits(bits) -> np.ndarray:
    if isinstance(bits, str):
        bits = bits.replace(" ", "")
        if set(bits) - {"0", "1"}:
            raise ValueError(f"not a bit string: {bits!r}")
        return np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")
    return np.asarray(bits, dtype=np.uint8)


def _bits_str(arr: np.ndarray) -> str:
    return (np.asarray(arr, dtype=np.uint8) + ord("0")).tobytes().decode()


@dataclass(frozen=True)
class RunResult:
    output: str
    consumed: int
    status: str
    steps: int

    @property
    def halted(self) -> bool:
        return self.status == "halted"


def decode_and_run(bits, budget: int = DEFAULT_BUDGET) -> RunResult:
    """Run the machine on a finite bit string (``"001 000"`` or a 0/1 sequence)."""
    arr = _as_bits(bits)
    status, consumed, out, steps = _Scratch(budget).run(arr, 0, len(arr))
    return RunResult(_bits_str(out), consumed, STATUS_NAMES[status], steps)


@dataclass(frozen=True)
class ToyProgram:
    bits: str

    @property
    def length(self) -> int:
        return len(self.bits)

    @property
    def instructions(self) -> list[str]:
        return disassemble(self.bits)


def assemble(source: str | Iterable[str]) -> str:
    """Assemble mnemonics such as ``"INC DBL LOOP 3 HALT"`` into program bits."""
    tokens = source.split() if isinstance(source, str) else [t for s in source for t in s.split()]
    out = []
    it = iter(tokens)
    for tok in it:
        name = tok.upper()
        if name not in OPCODES:
            raise ValueError(f"unknown instruction {tok!r}")
        out.append(format(OPCODES.index(name), "03b"))
        if name == "LOOP":
            try:
                k = int(next(it))
            except (StopIteration, ValueError):
                raise ValueError("LOOP needs an integer operand") from None
            if not 0 <= k < 1 << OPERAND_BITS:
                raise ValueError(f"LOOP operand {k} out of range")
            out.append(format(k, "05b"))
    return "".join(out)


def disassemble(bits: str) -> list[str]:
    """Decode bits into instructions; an incomplete trailing fragment is shown as ``?bits``."""
    bits = bits.replace(" ", "")
    out, pos = [], 0
    while pos + OPCODE_BITS <= len(bits):
        op = int(bits[pos:pos + 3], 2)
        pos += OPCODE_BITS
        if op == 7:
            if pos + OPERAND_BITS > len(bits):
                break
            out.append(f"LOOP {int(bits[pos:pos + 5], 2)}")
            pos += OPERAND_BITS
        else:
            out.append(OPCODES[op])
    if pos < len(bits):
        out.append("?" + bits[pos:])
    return out


@dataclass
class EnsembleReport:
    """Exact random-program measure over all programs of at most ``l_max`` bits."""

    l_max: int
    budget: int
    mass: dict            # output -> sum of 2**-len over halting producers
    shortest: dict        # output -> bits of its shortest producer (first in lexicographic order)
    programs: dict        # halting program bits -> output
    counts: dict          # status -> number of distinct prefixes
    status_mass: dict     # status -> measure of prefixes with that status

    @property
    def kraft(self) -> float:
        return self.status_mass["halted"]

    def probability(self, s: str) -> float:
        return self.mass.get(s, 0.0)

    def top(self, k: int) -> list[tuple[str, float]]:
        return sorted(self.mass.items(), key=lambda kv: (-kv[1], len(kv[0]), kv[0]))[:k]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["output_hex", "output_len", "mass", "shortest_program_bits"])
        for s, m in self.top(len(self.mass)):
            w.writerow([bits_to_hex(s), len(s), repr(m), self.shortest[s]])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "l_max": self.l_max,
            "budget": self.budget,
            "kraft_sum": self.kraft,
            "n_outputs": len(self.mass),
            "counts": dict(self.counts),
            "status_mass": dict(self.status_mass),
        }


def bits_to_hex(s: str) -> str:
    """Hex digits of a bit string, padded with zero bits on the right."""
    if not s:
        return ""
    pad = s + "0" * (-len(s) % 4)
    return "".join(format(int(pad[i:i + 4], 2), "x") for i in range(0, len(pad), 4))


def enumerate_programs(l_max: int = DEFAULT_L_MAX, budget: int = DEFAULT_BUDGET) -> EnsembleReport:
    """Walk every ``l_max``-bit string, counting each program once by its consumed prefix.

    After a run that consumed ``c`` bits, every string sharing those ``c``
    bits behaves identically, so the walk skips ahead by ``2**(l_max - c)``.
    Strings needing more than ``l_max`` bits are reported as
    ``bits_exhausted`` and strings running out of steps as
    ``budget_exceeded``; neither contributes to any output's mass.
    """
    if not 1 <= l_max <= MAX_L_MAX:
        raise ValueError(f"l_max must be in 1..{MAX_L_MAX}, got {l_max}")
    scratch = _Scratch(budget)
    mass: dict = {}
    shortest: dict = {}
    programs: dict = {}
    counts = Counter({name: 0 for name in STATUS_NAMES})
    status_mass = {name: 0.0 for name in STATUS_NAMES}
    shifts = np.arange(l_max - 1, -1, -1, dtype=np.int64)
    total = 1 << l_max
    idx = 0
    while idx < total:
        bits = ((idx >> shifts) & 1).astype(np.uint8)
        status, consumed, out, _ = scratch.run(bits, 0, l_max)
        name = STATUS_NAMES[status]
        weight = 2.0 ** -consumed
        counts[name] += 1
        status_mass[name] += weight
        if status == HALTED:
            s = _bits_str(out)
            prog = _bits_str(bits[:consumed])
            programs[prog] = s
            mass[s] = mass.get(s, 0.0) + weight
            if s not in shortest or consumed < len(shortest[s]):
                shortest[s] = prog
        idx += 1 << (l_max - consumed)
    return EnsembleReport(l_max, budget, mass, shortest, programs, dict(counts), status_mass)


@dataclass
class SampleReport:
    """Outcome counts of randomly programmed runs."""

    n: int
    seed: int
    budget: int
    l_max: int | None
    counts: Counter                 # halting output -> count
    status_counts: Counter
    program_counts: Counter | None = None   # consumed bits -> count, when kept

    def frequency(self, s: str) -> float:
        return self.counts.get(s, 0) / self.n

    def top(self, k: int) -> list[tuple[str, int]]:
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], len(kv[0]), kv[0]))[:k]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["output_hex", "output_len", "count", "freq"])
        for s, c in self.top(len(self.counts)):
            w.writerow([bits_to_hex(s), len(s), c, repr(c / self.n)])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "n": self.n,
            "seed": self.seed,
            "budget": self.budget,
            "l_max": self.l_max,
            "n_outputs": len(self.counts),
            "status_counts": {k: int(self.status_counts.get(k, 0)) for k in STATUS_NAMES},
        }


def sample_programs(
    n: int,
    seed: int = 0,
    budget: int = DEFAULT_BUDGET,
    l_max: int | None = None,
    keep_programs: bool = False,
    chunk: int = 1 << 20,
) -> SampleReport:
    """Feed fair random bits to the machine on demand, ``n`` times.

    All trials read from one seeded bit stream; each trial starts where the
    previous one stopped reading, so every trial sees fresh independent bits
    and a program of length ``l`` is run with probability ``2**-l``. With
    ``l_max`` set, a trial that would read past ``l_max`` bits is stopped as
    ``bits_exhausted``, which matches the truncation of
    :func:`enumerate_programs`.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    scratch = _Scratch(budget)
    pool = rng.integers(0, 2, size=chunk, dtype=np.uint8)
    pos = 0
    counts: Counter = Counter()
    status_counts: Counter = Counter({name: 0 for name in STATUS_NAMES})
    programs: Counter | None = Counter() if keep_programs else None
    done = 0
    while done < n:
        end = len(pool) if l_max is None else min(len(pool), pos + l_max)
        status, consumed, out, _ = scratch.run(pool, pos, end)
        if status == BITS_EXHAUSTED and end == len(pool) and (l_max is None or pos + l_max > len(pool)):
            # ran off the pool, not off the length cap: extend and retry this trial
            pool = np.concatenate([pool[pos:], rng.integers(0, 2, size=chunk, dtype=np.uint8)])
            pos = 0
            continue
        status_counts[STATUS_NAMES[status]] += 1
        if status == HALTED:
            counts[out.tobytes()] += 1
            if programs is not None:
                programs[_bits_str(pool[pos:pos + consumed])] += 1
        pos += consumed
        done += 1
    counts = Counter({_bits_str(np.frombuffer(k, dtype=np.uint8)): v for k, v in counts.items()})
    return SampleReport(n, seed, budget, l_max, counts, status_counts, programs)


@dataclass(frozen=True)
class ComplexityEstimate:
    """Upper bound on the program-length complexity of ``target``.

    ``khat`` is ``None`` when no producer was found; then the complexity is
    only known to exceed ``l_max``.
    """

    target: str
    khat: int | None
    source: str | None           # "enumerated" | "witness" | None
    program: str | None
    l_max: int
    rejected: tuple = field(default=())

    @property
    def known(self) -> bool:
        return self.khat is not None


def khat(
    s: str,
    l_max: int = DEFAULT_L_MAX,
    witnesses: Sequence[str] = (),
    budget: int = DEFAULT_BUDGET,
    report: EnsembleReport | None = None,
) -> ComplexityEstimate:
    """Shortest known program printing exactly ``s``.

    Candidates are the enumerated halting programs (from ``report``, or a
    fresh enumeration at ``l_max``) and the supplied witnesses, each of which
    is run and rejected with a diagnostic unless it halts with output ``s``.
    """
    if report is None:
        report = enumerate_programs(l_max, budget)
    best, source = None, None
    if s in report.shortest:
        best, source = report.shortest[s], "enumerated"
    rejected = []
    for w in witnesses:
        w = w.replace(" ", "")
        res = decode_and_run(w, budget)
        if not res.halted:
            rejected.append((w, f"status {res.status}"))
        elif res.consumed != len(w):
            rejected.append((w, f"halts after {res.consumed} of {len(w)} bits"))
        elif res.output != s:
            rejected.append((w, f"outputs {len(res.output)} bits that differ from the target"))
        elif best is None or len(w) < len(best):
            best, source = w, "witness"
    return ComplexityEstimate(
        s, None if best is None else len(best), source, best, report.l_max, tuple(rejected)
    )


@dataclass(frozen=True)
class Advantage:
    """How much likelier a random program is than coin flips to produce ``target``.

    With ``bound`` set, ``ratio`` is a lower bound (from a witness) rather
    than a measured value.
    """

    target: str
    ratio: float
    log2_ratio: float
    produced: bool
    bound: bool


def advantage_ratio(s: str, source) -> Advantage:
    """``P(s) / 2**-len(s)`` from an ensemble, a sample, or a complexity bound."""
    if isinstance(source, ComplexityEstimate):
        if source.target != s:
            raise ValueError("complexity estimate is for a different target")
        if source.khat is None:
            return Advantage(s, 0.0, float("-inf"), False, True)
        log2 = float(len(s) - source.khat)
        return Advantage(s, 2.0 ** log2, log2, True, True)
    if isinstance(source, EnsembleReport):
        p = source.probability(s)
    elif isinstance(source, SampleReport):
        p = source.frequency(s)
    else:
        raise TypeError(f"unsupported source {type(source).__name__}")
    if p <= 0:
        return Advantage(s, 0.0, float("-inf"), False, False)
    log2 = float(np.log2(p)) + len(s)
    return Advantage(s, 2.0 ** log2, log2, True, False)


def zeros_witness(n: int) -> str:
    """Program printing ``n`` zeros (1 <= n <= 255): build ``n`` in a cell, then count it down."""
    return _counted(n, ["OUT0"])


def alternating_witness(k: int) -> str:
    """Program printing ``01`` ``k`` times (1 <= k <= 255)."""
    return _counted(k, ["OUT0", "OUT1"])


def _counted(n: int, body: list[str]) -> str:
    if not 1 <= n <= 255:
        raise ValueError("repeat count must be in 1..255")
    setup = []
    for bit in format(n, "b"):
        if setup:
            setup.append("DBL")
        if bit == "1":
            setup.append("INC")
    return assemble(setup + body + ["DEC", f"LOOP {len(body) + 2}", "HALT"])


def parse_witnesses(text: str) -> list[str]:
    """Programs from witness-file text: one 0/1 line each, ``#`` comments, spaces ignored."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].replace(" ", "").replace("\t", "")
        if not line:
            continue
        if set(line) - {"0", "1"}:
            raise ValueError(f"line {lineno}: witness must be 0/1 text, got {raw.strip()!r}")
        out.append(line)
    return out


def load_witnesses(path=None) -> list[str]:
    """Witnesses from ``path``, or the shipped library when ``path`` is None."""
    if path is None:
        text = resources.files("qcuniverse").joinpath("data/witnesses.txt").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    return parse_witnesses(text)


def parse_target(text: str) -> str:
    """Target bits: literal 0/1 text, ``0^64`` / ``(01)^32`` repeats, or ``empty``."""
    text = text.strip()
    if text in ("", "empty", '""'):
        return ""
    if "^" in text:
        unit, _, times = text.rpartition("^")
        unit = unit.strip("()")
        if not unit or set(unit) - {"0", "1"} or not times.isdigit():
            raise ValueError(f"bad target {text!r}")
        return unit * int(times)
    if set(text) - {"0", "1"}:
        raise ValueError(f"bad target {text!r}")
    return text
