"""Command-line surface: one binary, subcommand style, machine-readable
reports with content hashes of the normalized inputs.

Exit codes: 0 success, 1 usage, 2 parse error, 3 validation/semantic error,
4 UNKNOWN verdict under --strict.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field

from . import cuntz, ktheory, logic, presentations, states_pairing
from .presentations import ParseError, UnboundVariableError, ValidationError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_STRICT_UNKNOWN = 4


@dataclass
class RunReport:
    command: str
    inputs: dict
    config: dict
    result: dict
    verdict: str
    wall_time: float


def emit_machine(report: RunReport) -> str:
    """Stable key=value lines; values are JSON fragments."""
    rows = {
        "command": report.command,
        "verdict": report.verdict,
        "wall_time": report.wall_time,
    }
    for name, value in report.inputs.items():
        rows[f"input.{name}"] = value
    for key, value in report.config.items():
        rows[f"config.{key}"] = value
    for key, value in report.result.items():
        rows[f"result.{key}"] = value
    return "\n".join(f"{k}={json.dumps(rows[k], sort_keys=True)}" for k in sorted(rows)) + "\n"


def parse_machine(text: str) -> RunReport:
    fields = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        key, _, raw = line.partition("=")
        fields[key] = json.loads(raw)
    inputs = {k[len("input."):]: v for k, v in fields.items() if k.startswith("input.")}
    config = {k[len("config."):]: v for k, v in fields.items() if k.startswith("config.")}
    result = {k[len("result."):]: v for k, v in fields.items() if k.startswith("result.")}
    return RunReport(
        command=fields["command"],
        inputs=inputs,
        config=config,
        result=result,
        verdict=fields["verdict"],
        wall_time=fields["wall_time"],
    )


def emit_human(report: RunReport) -> str:
    lines = [f"{report.command}: {report.verdict}  ({report.wall_time:.3f}s)"]
    for name, value in sorted(report.inputs.items()):
        lines.append(f"  {name} sha256 {value[:16]}...")
    for key, value in sorted(report.result.items()):
        lines.append(f"  {key} = {value}")
    return "\n".join(lines) + "\n"


def _hash_text(normalized: str) -> str:
    return hashlib.sha256(normalized.encode("utf-8")).hexdigest()


def _read(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise _Usage(f"cannot read {path}: {exc.strerror}") from exc


class _Usage(Exception):
    pass


def _load_algebra(path):
    text = _read(path)
    algebra = presentations.parse_fd_algebra(text)
    return algebra, _hash_text(presentations.emit_fd_algebra(algebra))


def _load_cu(path):
    text = _read(path)
    pres = cuntz.parse_cu(text)
    return pres, _hash_text(cuntz.emit_cu(pres))


def _load_group(path):
    text = _read(path)
    group = ktheory.parse_ordered_group(" ".join(text.split()))
    return group, _hash_text(ktheory.emit_ordered_group(group))


def _load_formula(path):
    text = _read(path)
    formula = logic.parse_formula(text)
    return formula, _hash_text(" ".join(text.split()))


def _config_echo(args):
    return {
        "seed": args.seed,
        "budget": args.budget,
        "depth": args.depth,
        "max_n": args.max_n,
        "tol": args.tol,
        "strict": args.strict,
    }


def _frac(x):
    return str(x)


def cmd_invariants(args) -> tuple:
    algebra, digest = _load_algebra(args.path)
    t0 = time.perf_counter()
    g0 = ktheory.ordered_k0(algebra)
    ell = states_pairing.elliott_invariant(algebra)
    cu = cuntz.cu_of_fd_algebra(algebra)
    rc = cuntz.radius_of_comparison(cu, max_n=args.max_n)
    cfg = logic.EvalConfig(seed=args.seed, tol=args.tol)
    sr = logic.stable_rank_leq(algebra, 1, cfg)
    rr = logic.real_rank_leq(algebra, 0, cfg)
    result = {
        "k0": ktheory.emit_ordered_group(g0),
        "k1": "0",
        "traces": ";".join("(" + ",".join(map(_frac, v)) + ")" for v in ell.traces.vertices),
        "pairing": ";".join(
            "(" + ",".join(_frac(row[j]) for row in ell.pairing_matrix) + ")"
            for j in range(len(ell.traces.vertices))
        ),
        "cu": cuntz.emit_cu(cu).strip().replace("\n", " "),
        "rc": "inf" if rc.is_infinite_bound else _frac(rc.value),
        "rc_bracket": f"{_frac(rc.bracket[0])}..{'inf' if rc.bracket[1] is None else _frac(rc.bracket[1])}",
        "rc_exact_in_range": rc.exact_in_range,
        "stable_rank_leq_1": sr.label,
        "real_rank_leq_0": rr.label,
    }
    report = RunReport(
        command="invariants",
        inputs={"algebra": digest},
        config=_config_echo(args),
        result=result,
        verdict="ok",
        wall_time=time.perf_counter() - t0,
    )
    return report, EXIT_OK


def cmd_iso(args) -> tuple:
    t0 = time.perf_counter()
    if args.kind == "ell":
        a, ha = _load_algebra(args.a)
        b, hb = _load_algebra(args.b)
        verdict = states_pairing.elliott_isomorphic(
            states_pairing.elliott_invariant(a), states_pairing.elliott_invariant(b)
        )
        kind = verdict.kind
        detail = {"witness": repr(verdict.witness) if verdict.witness else "",
                  "reason": verdict.reason}
    elif args.kind == "cu":
        a, ha = _load_cu(args.a)
        b, hb = _load_cu(args.b)
        verdict = cuntz.cu_equivalent(a, b, budget=args.budget, sample=args.depth)
        kind = verdict.kind
        detail = {
            "witness": "; ".join(c.label for c in verdict.codes) if verdict.codes else "",
            "invariant": verdict.invariant,
        }
    elif args.kind == "group":
        a, ha = _load_group(args.a)
        b, hb = _load_group(args.b)
        verdict = ktheory.ordered_group_isomorphic(a, b, budget=args.budget if args.budget <= 3 else 2)
        kind = verdict.kind
        detail = {"witness": repr(verdict.witness) if verdict.witness else "",
                  "reason": verdict.reason}
    else:
        raise _Usage(f"unknown isomorphism kind {args.kind!r}")
    result = {"kind": kind}
    result.update({k: v for k, v in detail.items() if v})
    report = RunReport(
        command=f"iso {args.kind}",
        inputs={"a": ha, "b": hb},
        config=_config_echo(args),
        result=result,
        verdict=kind,
        wall_time=time.perf_counter() - t0,
    )
    code = EXIT_OK
    if args.strict and kind == "UNKNOWN":
        code = EXIT_STRICT_UNKNOWN
    return report, code


def cmd_eval(args) -> tuple:
    formula, hf = _load_formula(args.formula)
    algebra, ha = _load_algebra(args.on)
    if not formula.is_sentence:
        raise ValidationError(
            f"open formula (free variables {sorted(formula.free_vars())}) needs an assignment"
        )
    t0 = time.perf_counter()
    cfg = logic.EvalConfig(seed=args.seed, tol=args.tol)
    res = logic.evaluate(formula, algebra, None, cfg)
    report = RunReport(
        command="eval",
        inputs={"formula": hf, "algebra": ha},
        config=_config_echo(args),
        result={"value": res.value, "certificate": res.certificate},
        verdict=res.certificate,
        wall_time=time.perf_counter() - t0,
    )
    return report, EXIT_OK


def _build_parser():
    parser = argparse.ArgumentParser(prog="starinv", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand")

    def common(p):
        p.add_argument("--emit", choices=("human", "machine"), default="human")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--budget", type=int, default=10000)
        p.add_argument("--depth", type=int, default=8)
        p.add_argument("--max-n", dest="max_n", type=int, default=64)
        p.add_argument("--strict", action="store_true")
        p.add_argument("--tol", type=float, default=1e-6)

    p_inv = sub.add_parser("invariants", help="all invariants of a .fda algebra")
    p_inv.add_argument("path")
    common(p_inv)

    p_iso = sub.add_parser("iso", help="isomorphism verdicts")
    p_iso.add_argument("kind", choices=("ell", "cu", "group"))
    p_iso.add_argument("a")
    p_iso.add_argument("b")
    common(p_iso)

    p_eval = sub.add_parser("eval", help="evaluate a .clf sentence")
    p_eval.add_argument("formula")
    p_eval.add_argument("--on", required=True, help="algebra file (.fda)")
    common(p_eval)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.subcommand is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        if args.subcommand == "invariants":
            report, code = cmd_invariants(args)
        elif args.subcommand == "iso":
            report, code = cmd_iso(args)
        else:
            report, code = cmd_eval(args)
    except _Usage as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValidationError, UnboundVariableError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out = emit_machine(report) if args.emit == "machine" else emit_human(report)
    sys.stdout.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
