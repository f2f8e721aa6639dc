"""Command-line entry point: ``qcuniverse <subcommand> [flags]``.

Exit status is 0 on success, 1 on invalid input (bad flags, unreadable or
malformed files) and 2 on internal errors. Every subcommand prints a one-line
summary; ``--out`` writes the full report. A ``--config`` file holds flat
``key = value`` lines using the long flag names; explicit flags win.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import algoprob, hamiltonian, histories
from .qstate import make_state
from .revmachine import load_circuit

SUBCOMMANDS = ("decohere", "record-demo", "hamiltonian", "enumerate", "sample", "khat", "advantage")


@dataclass
class RunConfig:
    circuit: str | None = None
    state: str = "uniform"
    steps: int | None = None
    grain: str = "full"
    mode: str = "exhaustive"
    pairs: int = histories.DEFAULT_PAIRS
    tol: float = histories.DECOHERENCE_TOL
    l_max: int = algoprob.DEFAULT_L_MAX
    sample_l_max: int | None = None
    budget: int = algoprob.DEFAULT_BUDGET
    n: int = 100_000
    seed: int = 0
    target: str = "0^64"
    witnesses: str | None = None
    out: str | None = None
    format: str | None = None


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add(p, flag, help, **kw):
    dest = flag.lstrip("-").replace("-", "_")
    default = getattr(RunConfig(), dest)
    p.add_argument(flag, dest=dest, default=default, help=f"{help} (default: {default})", **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qcuniverse", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    sub.required = True

    def common(p, fmts=("json",)):
        p.add_argument("--config", default=None, help="flat key=value file of flag defaults (default: None)")
        _add(p, "--out", "output path for the report")
        _add(p, "--format", f"output format, one of {'/'.join(fmts)}; defaults to {fmts[0]}", choices=fmts)

    p = sub.add_parser("decohere", help="decoherence functional of a circuit")
    common(p)
    _add(p, "--circuit", "circuit file")
    _add(p, "--state", "initial state: basis:<bits>, uniform or random:<seed>")
    _add(p, "--steps", "cycle the circuit's steps to this many steps", type=int)
    _add(p, "--grain", "history grain; local uses step footprints", choices=("full", "local"))
    _add(p, "--mode", "evaluate all history pairs or sample them", choices=("exhaustive", "sampled"))
    _add(p, "--pairs", "off-diagonal pairs in sampled mode", type=int)
    _add(p, "--seed", "seed for sampled mode", type=int)
    _add(p, "--tol", "weak-decoherence tolerance on |Re D(h,h')|", type=float)

    p = sub.add_parser("record-demo", help="interference with and without a record bit")
    common(p)
    _add(p, "--tol", "weak-decoherence tolerance on |Re D(h,h')|", type=float)

    p = sub.add_parser("hamiltonian", help="checks of H = U + U^+ and the fractional root of U")
    common(p)
    _add(p, "--circuit", "circuit file")
    _add(p, "--steps", "cycle the circuit's steps to this many steps", type=int)

    p = sub.add_parser("enumerate", help="exact random-program measure up to l_max bits")
    common(p, ("csv", "json"))
    _add(p, "--l-max", "program length cap in bits", type=int)
    _add(p, "--budget", "step budget per program", type=int)

    p = sub.add_parser("sample", help="run randomly programmed machines")
    common(p, ("csv", "json"))
    _add(p, "--n", "number of runs", type=int)
    _add(p, "--seed", "seed of the random bit stream", type=int)
    _add(p, "--budget", "step budget per program", type=int)
    _add(p, "--sample-l-max", "stop runs reading more than this many bits", type=int)

    for name, help in (("khat", "upper bound on program-length complexity"),
                       ("advantage", "random-program vs coin-flip production odds")):
        p = sub.add_parser(name, help=help)
        common(p)
        _add(p, "--target", "target bits: 0/1 text, 0^N, (01)^K or empty")
        _add(p, "--l-max", "enumeration length cap in bits", type=int)
        _add(p, "--budget", "step budget per program", type=int)
        _add(p, "--witnesses", "witness file; the shipped library when omitted")
    return parser


def _read_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key = value, got {raw.strip()!r}")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
        defaults = {}
        for key, value in _read_config(args.config).items():
            if key not in actions:
                raise UsageError(f"config key {key!r} is not a flag of {args.command}")
            action = actions[key]
            try:
                defaults[key] = action.type(value) if action.type else value
            except ValueError:
                raise UsageError(f"config: bad value {value!r} for {key}") from None
            if action.choices and defaults[key] not in action.choices:
                raise UsageError(f"config: {key} must be one of {', '.join(action.choices)}")
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def _program(args):
    if not args.circuit:
        raise UsageError("--circuit is required")
    prog = load_circuit(args.circuit)
    if args.steps is not None:
        if args.steps < 0:
            raise UsageError("--steps must be >= 0")
        prog = prog.cycled(args.steps)
    return prog


def _fmt(x: float) -> str:
    return f"{x:.3e}"


def cmd_decohere(args):
    prog = _program(args)
    psi = make_state(prog.width, args.state)
    grain = histories.Grain.full() if args.grain == "full" else histories.footprint_grain(prog)
    report = histories.build_D(prog, psi, grain, args.mode, pairs=args.pairs, seed=args.seed)
    check = histories.weak_decoherence_report(report, args.tol)
    data = report.to_dict()
    data.update(state=args.state, decoherent=check.decoherent, tol=args.tol)
    summary = (
        f"max_re_offdiag={_fmt(check.max_re_offdiag)} max_abs_offdiag={_fmt(check.max_abs_offdiag)} "
        f"sum_diag={report.sum_diag.real:.12f} decoherent={check.decoherent}"
    )
    return data, summary


def cmd_record_demo(args):
    data, parts = {}, []
    for name in histories.RECORD_DEMOS:
        report = histories.record_demo(name)
        check = histories.weak_decoherence_report(report, args.tol)
        entry = report.to_dict()
        entry["decoherent"] = check.decoherent
        data[name] = entry
        parts.append(f"{name}: max_re_offdiag={_fmt(check.max_re_offdiag)} decoherent={check.decoherent}")
    return data, "; ".join(parts)


def cmd_hamiltonian(args):
    data = hamiltonian.hamiltonian_report(_program(args))
    summary = (
        f"hermiticity_err={_fmt(data['hermiticity_err'])} commutator_err={_fmt(data['commutator_err'])} "
        f"spectrum_err={_fmt(data['spectrum_err'])} root_residual={_fmt(data['root_residual'])} "
        f"support={data['support']}"
    )
    return data, summary


def cmd_enumerate(args):
    report = algoprob.enumerate_programs(args.l_max, args.budget)
    data = report.summary()
    data["outputs"] = [
        {"output": s, "output_len": len(s), "mass": m, "shortest_program_bits": report.shortest[s]}
        for s, m in report.top(len(report.mass))
    ]
    summary = (
        f"kraft_sum={report.kraft!r} halting={report.counts['halted']} "
        f"budget_exceeded={report.counts['budget_exceeded']} outputs={len(report.mass)}"
    )
    return (data, report.to_csv()), summary


def cmd_sample(args):
    report = algoprob.sample_programs(args.n, args.seed, args.budget, args.sample_l_max)
    data = report.summary()
    data["outputs"] = [
        {"output": s, "output_len": len(s), "count": c, "freq": c / report.n}
        for s, c in report.top(len(report.counts))
    ]
    halted = report.status_counts["halted"]
    summary = f"halted={halted}/{report.n} outputs={len(report.counts)} seed={report.seed}"
    return (data, report.to_csv()), summary


def _estimate(args):
    target = algoprob.parse_target(args.target)
    witnesses = algoprob.load_witnesses(args.witnesses)
    ensemble = algoprob.enumerate_programs(args.l_max, args.budget)
    est = algoprob.khat(target, witnesses=witnesses, budget=args.budget, report=ensemble)
    return target, ensemble, est


def _estimate_dict(est) -> dict:
    return {
        "target_len": len(est.target),
        "khat": est.khat,
        "source": est.source,
        "program": est.program,
        "l_max": est.l_max,
        "rejected": [{"program": p, "reason": r} for p, r in est.rejected],
    }


def cmd_khat(args):
    _, _, est = _estimate(args)
    data = _estimate_dict(est)
    if est.khat is None:
        summary = f"khat unknown above l_max={est.l_max}"
    else:
        summary = f"khat={est.khat} source={est.source}"
    return data, summary


def _adv_dict(a) -> dict:
    return {
        "ratio": a.ratio,
        "log2_ratio": None if a.log2_ratio == float("-inf") else a.log2_ratio,
        "produced": a.produced,
        "bound": a.bound,
    }


def cmd_advantage(args):
    target, ensemble, est = _estimate(args)
    measured = algoprob.advantage_ratio(target, ensemble)
    bound = algoprob.advantage_ratio(target, est)
    data = {
        "target_len": len(target),
        "mass": ensemble.probability(target),
        "enumerated": _adv_dict(measured),
        "witness_bound": _adv_dict(bound),
        "khat": _estimate_dict(est),
    }
    best = measured if measured.produced else bound
    if not best.produced:
        summary = f"not produced at this cap (l_max={args.l_max})"
    else:
        kind = ">=" if best.bound else "="
        summary = f"advantage {kind} 2^{best.log2_ratio:.3f} (target_len={len(target)})"
    return data, summary


COMMANDS = {
    "decohere": cmd_decohere,
    "record-demo": cmd_record_demo,
    "hamiltonian": cmd_hamiltonian,
    "enumerate": cmd_enumerate,
    "sample": cmd_sample,
    "khat": cmd_khat,
    "advantage": cmd_advantage,
}


def _write(payload, args) -> None:
    if isinstance(payload, tuple):
        data, csv_text = payload
        fmt = args.format or "csv"
        text = csv_text if fmt == "csv" else json.dumps(data, indent=2, sort_keys=True) + "\n"
    else:
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    Path(args.out).write_text(text)


def run(argv=None) -> int:
    try:
        args = parse_args(argv)
        payload, summary = COMMANDS[args.command](args)
        if args.out:
            _write(payload, args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"qcuniverse: {exc.filename or ''}: {exc.strerror}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"qcuniverse: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"qcuniverse: internal error: {exc!r}", file=sys.stderr)
        return 2
    print(summary)
    return 0


def main() -> None:
    sys.exit(run())
