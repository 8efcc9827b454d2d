"""Command-line front end.

Exit codes: 0 success, 1 verification failures, 2 bad input, 3 engine cap
exceeded or index stream exhausted, 4 unknown suite.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from typing import Optional

from tslab.construction import (
    ConstructionTooLarge,
    IndexStream,
    InsufficientStream,
    LayeredFamily,
    buildable,
    modified_lower_bound,
    repeated_average,
    th21_bound,
)
from tslab.core import SparseVector, finset, format_rational, parse_rational
from tslab.norms import CapExceeded, UNBOUNDED, iterated_norm, norm
from tslab.report import to_plain
from tslab.schreier import Mode, schreier_level, schreier_member, schreier_seminorm
from tslab.suites import SUITES, SuiteConfig, run_suite
from tslab.theta import (
    NotFound,
    ParamSet,
    ThetaSpec,
    check_regular,
    default_fform,
    find_parameters,
    minimal_k,
    theta_ratio_table,
)
from tslab.trees import (
    NormingTree,
    evaluate_tree,
    flatten_to_s1,
    lift_s1_to_sN,
    retarget_to_sN,
    validate_tree,
)

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_CAP, EXIT_SUITE = 0, 1, 2, 3, 4


class InputError(ValueError):
    pass


def _theta(text) -> ThetaSpec:
    if isinstance(text, ThetaSpec):
        return text
    if isinstance(text, dict):
        return ThetaSpec.from_json(text)
    return ThetaSpec.parse(text)


def _vec(text) -> SparseVector:
    if text is None:
        raise InputError("--vec is required")
    return SparseVector.from_json(text)


def _ints(text: Optional[str]) -> Optional[tuple]:
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    return tuple(int(v) for v in text.replace(" ", "").split(",") if v)


def _emit(args, payload: dict, text: str, csv_rows: Optional[list] = None) -> None:
    """Write the result in the requested format to --out or stdout."""
    fmt = args.format
    if fmt == "json":
        out = json.dumps(to_plain(payload), sort_keys=True, indent=1) + "\n"
    elif fmt == "csv":
        rows = csv_rows or [[k, json.dumps(to_plain(v)) if isinstance(v, (dict, list)) else to_plain(v)]
                            for k, v in sorted(payload.items())]
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(rows)
        out = buf.getvalue()
    else:
        out = text if text.endswith("\n") else text + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


# commands

def cmd_norm(args, mode_default: str = "admissible") -> int:
    spec = _theta(args.theta)
    x = _vec(args.vec)
    mode = Mode.parse(args.mode or mode_default)
    if args.depth != UNBOUNDED:
        value = iterated_norm(x, args.depth, mode, spec, args.exact_cap)
        payload = {"value": value, "exact": True, "mode": mode.value, "depth": args.depth}
        _emit(args, payload, f"{format_rational(value)} exact")
        return EXIT_OK
    res = norm(x, spec, mode, args.exact_cap)
    if not res.exact and args.require_exact:
        raise CapExceeded(f"support {len(x.support)} is above the exact cap")
    payload = {"value": res.value, "exact": res.exact, "lower": res.lower,
               "upper": res.upper, "mode": mode.value}
    if args.tree:
        payload["witness"] = res.witness.to_json()
    if res.exact:
        text = f"{format_rational(res.value)} exact"
    else:
        text = f"bounds [{format_rational(res.lower)}, {format_rational(res.upper)}]"
    if args.tree:
        text += "\n" + json.dumps(res.witness.to_json())
    _emit(args, payload, text)
    return EXIT_OK


def cmd_schreier(args) -> int:
    if args.set is not None:
        f = finset(json.loads(args.set))
        if args.level is None:
            level = schreier_level(f)
            payload = {"set": list(f), "level": level}
            _emit(args, payload, "in no S_n" if level is None else f"least level {level}")
        else:
            ok = schreier_member(f, args.level)
            _emit(args, {"set": list(f), "level": args.level, "member": ok},
                  f"{'in' if ok else 'not in'} S_{args.level}")
        return EXIT_OK
    x = _vec(args.vec)
    if args.level is None:
        raise InputError("--level is required with --vec")
    value, witness = schreier_seminorm(x, args.level)
    _emit(args, {"value": value, "witness": list(witness), "level": args.level},
          f"{format_rational(value)} witness {list(witness)}")
    return EXIT_OK


def cmd_repavg(args) -> int:
    if args.stream is not None:
        stream = IndexStream.from_list(json.loads(args.stream))
    else:
        stream = IndexStream(range(args.start, 10 ** 12, args.step))
    ra = repeated_average(args.p, stream)
    _emit(args, {"p": args.p, "vector": ra.vector.to_json()}, json.dumps(ra.vector.to_json()),
          [["index", "coefficient"]] + [[k, str(v)] for k, v in ra.vector.items()])
    return EXIT_OK


def _params(args, spec: ThetaSpec) -> ParamSet:
    p, L = _ints(args.p), _ints(args.L)
    if p is None and L is None:
        found = find_parameters(spec, args.N, default_fform(spec), horizon=args.horizon)
        if isinstance(found, NotFound):
            raise InputError(f"no parameters found: {found.to_json()}")
        return found
    if p is None or L is None:
        raise InputError("give both --p and --L, or neither")
    return ParamSet(args.N, p, L)


def cmd_construct(args) -> int:
    spec = _theta(args.theta)
    if args.N is None:
        raise InputError("--N is required")
    params = _params(args, spec)
    k_min = minimal_k(spec, params)
    digits = len(str(k_min))
    print(f"minimal k: {k_min} ({digits} digits)")
    if args.V is not None:
        V = IndexStream.from_list(json.loads(args.V), budget=args.budget)
    else:
        V = IndexStream.from_start(args.start, budget=args.budget)
    fam = LayeredFamily(spec, params, V)
    rows = [["k", "ell1", "mod_lower", "th21_rhs", "minimal_k_digits"]]
    built = 0
    for k in range(1, args.k_max + 1):
        if not buildable(fam, params.N, k):
            break
        built = k
        x = fam.vector(params.N, k)
        rows.append([k, str(x.ell1()), str(modified_lower_bound(fam, k=k)[0]),
                     str(th21_bound(spec, params, k)[0]), digits])
    if built == 0:
        raise ConstructionTooLarge(f"x_1^{params.N} does not fit in {args.budget} atoms")
    if args.family:
        with open(args.family, "w", encoding="utf-8") as fh:
            fh.write(fam.dumps() + "\n")
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    if built < args.k_max:
        print(f"built x_k^{params.N} for k <= {built}; k = {built + 1} exceeds the atom budget")
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.suite not in SUITES:
        print(f"unknown suite {args.suite!r}; choose from {', '.join(sorted(SUITES))}",
              file=sys.stderr)
        return EXIT_SUITE
    cfg = SuiteConfig(spec=_theta(args.theta), N=args.N or 2, samples=args.samples,
                      seed=args.seed, horizon=args.horizon, exact_cap=args.exact_cap)
    rep = run_suite(args.suite, cfg)
    text = {"json": rep.dumps, "csv": rep.to_csv, "text": rep.to_text}[args.format]()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_theta(args) -> int:
    spec = _theta(args.theta)
    if args.action == "info":
        reg = check_regular(spec, args.horizon)
        values = [spec.at(n) for n in range(1, args.terms + 1)]
        payload = {"theta": spec.to_json(), "values": values, "regular": reg.to_json()}
        text = (f"{spec.label()}\n" + " ".join(format_rational(v) for v in values)
                + f"\nregular up to {args.horizon}: {reg.ok}")
        _emit(args, payload, text)
        return EXIT_OK
    N = args.N or 2
    best, arg = theta_ratio_table(spec, N, args.p_max)
    _emit(args, {"N": N, "p_max": args.p_max, "sup": best, "at_p": arg},
          f"sup Theta_p({N})/theta_p over p <= {args.p_max}: {format_rational(best)} at p = {arg}")
    return EXIT_OK


def cmd_tree(args) -> int:
    if args.tree is None:
        raise InputError("--tree is required")
    tree = NormingTree.from_json(json.loads(args.tree))
    mode = Mode.parse(args.mode or "admissible")
    spec = _theta(args.theta)
    check = validate_tree(tree, mode, spec)
    if not check.ok:
        raise InputError(f"invalid tree: {check.error} at {list(check.path or ())}")
    if args.action == "eval":
        value = evaluate_tree(tree, _vec(args.vec), spec, mode)
        _emit(args, {"value": value}, format_rational(value))
        return EXIT_OK
    if args.action == "flatten":
        out = flatten_to_s1(tree)
    elif args.action == "lift":
        out = lift_s1_to_sN(tree, args.N or 1)
    else:
        out = retarget_to_sN(tree, args.N or 1)
    payload = {"tree": out.to_json(),
               "leaf_orders": [[list(s), o] for s, o in out.leaf_orders()]}
    _emit(args, payload, json.dumps(out.to_json()))
    return EXIT_OK


# argument parsing

CONFIG_KEYS = {"theta", "vec", "mode", "N", "exact_cap", "horizon", "out", "format", "p", "L",
               "start", "V", "budget", "k_max", "family", "samples", "seed", "level", "set",
               "depth", "tree", "p_max", "terms", "step", "stream"}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tslab", description="Exact mixed Tsirelson norm toolkit.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--theta", default="geometric:1/2", help="KIND:ARGS or JSON (default geometric:1/2)")
    common.add_argument("--vec", help='sparse vector, e.g. [[3,"1"],[4,"1/2"]]')
    common.add_argument("--mode", choices=["admissible", "allowable"])
    common.add_argument("--N", type=int)
    common.add_argument("--exact-cap", dest="exact_cap", type=int)
    common.add_argument("--horizon", type=int, default=60)
    common.add_argument("--out")
    common.add_argument("--format", choices=["json", "csv", "text"], default="text")
    common.add_argument("--config", help="JSON file supplying any of the options above")
    sub = ap.add_subparsers(dest="command", required=True)

    for name, help_ in (("norm", "norm of --vec (admissible by default)"),
                        ("mnorm", "modified (allowable) norm of --vec")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--depth", type=int, default=UNBOUNDED, help="iterate the recursion this many times")
        p.add_argument("--tree", action="store_true", help="also print a witness tree")
        p.add_argument("--require-exact", action="store_true", help="exit 3 instead of reporting bounds")

    p = sub.add_parser("schreier", parents=[common], help="membership, least level, or seminorm")
    p.add_argument("--set", help="JSON list of integers")
    p.add_argument("--level", type=int)

    p = sub.add_parser("repavg", parents=[common], help="repeated average over a stream")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--start", type=int, default=2)
    p.add_argument("--step", type=int, default=1)
    p.add_argument("--stream", help="explicit JSON list of indices")

    p = sub.add_parser("construct", parents=[common], help="layered family and bound table")
    p.add_argument("--p", help="comma separated p_1..p_N")
    p.add_argument("--L", help="comma separated L_1..L_N")
    p.add_argument("--start", type=int, default=2, help="V = {start, start+1, ...}")
    p.add_argument("--V", help="explicit JSON list for V")
    p.add_argument("--budget", type=int, default=20000, help="atom budget")
    p.add_argument("--k-max", dest="k_max", type=int, default=8)
    p.add_argument("--family", help="write the family JSON here")

    p = sub.add_parser("verify", parents=[common], help="run a named verification suite")
    p.add_argument("suite")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("theta", parents=[common], help="theta sequence info or Theta ratio")
    p.add_argument("action", choices=["info", "ratio"])
    p.add_argument("--p-max", dest="p_max", type=int, default=40)
    p.add_argument("--terms", type=int, default=10)

    p = sub.add_parser("tree", parents=[common], help="evaluate or transform a norming tree")
    p.add_argument("action", choices=["eval", "flatten", "lift", "retarget"])
    p.add_argument("--tree", help="tree JSON")
    for name, p in sub.choices.items():
        p.set_defaults(subparser=p)
    return ap


def apply_config(args, parser: argparse.ArgumentParser) -> None:
    """Fill options not given on the command line from --config; unknown keys are errors."""
    if not getattr(args, "config", None):
        return
    with open(args.config, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise InputError("config must be a JSON object")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    defaults = {a.dest: a.default for a in parser._actions}
    for key, value in data.items():
        if not hasattr(args, key):
            raise InputError(f"config key {key!r} does not apply to '{args.command}'")
        if getattr(args, key) in (None, defaults.get(key)):
            if key == "vec" and not isinstance(value, str):
                value = json.dumps(value)
            setattr(args, key, value)


COMMANDS = {
    "norm": cmd_norm,
    "mnorm": lambda a: cmd_norm(a, "allowable"),
    "schreier": cmd_schreier,
    "repavg": cmd_repavg,
    "construct": cmd_construct,
    "verify": cmd_verify,
    "theta": cmd_theta,
    "tree": cmd_tree,
}


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        apply_config(args, args.subparser)
        return COMMANDS[args.command](args)
    except (CapExceeded, InsufficientStream, ConstructionTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (InputError, ValueError, KeyError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
