"""Command-line front end.

Exit status: 0 no attack within bounds (or success), 2 attack found,
3 search budget exceeded, 1 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .grammar import GrammarError, parse_term
from .strands import BundleError, bundle_from_json, bundle_to_dot, uniquely_originates

EXIT_OK, EXIT_ERROR, EXIT_ATTACK, EXIT_BUDGET = 0, 1, 2, 3


def _emit(obj):
    json.dump(obj, sys.stdout, indent=2, ensure_ascii=False)
    sys.stdout.write("\n")


def _err(msg: str) -> int:
    print(f"strandlab: {msg}", file=sys.stderr)
    return EXIT_ERROR


def _resolve(target: str):
    """Builtin scenario name first, then a scenario file path."""
    from .protocols import builtin_scenarios
    from .scenario_file import load_scenario, scenario_file_from_named
    named = builtin_scenarios().get(target)
    if named is not None:
        return named, scenario_file_from_named(named)
    if not os.path.exists(target):
        raise FileNotFoundError(f"no builtin scenario or file named {target!r} "
                                "(see 'strandlab list')")
    return None, load_scenario(target)


def cmd_check(args) -> int:
    from .scenario_file import ScenarioError
    from .search import SearchBudgetExceeded, check_property
    try:
        named, sf = _resolve(args.scenario)
    except (FileNotFoundError, ScenarioError) as e:
        return _err(str(e))
    spec, cfg = sf.spec, sf.config
    if args.disable:
        if named is None:
            return _err("--disable needs a builtin scenario")
        try:
            spec, cfg = named.configure(tuple(args.disable))
        except KeyError as e:
            return _err(str(e.args[0]))
    if args.no_unique_origination:
        cfg = cfg.replace(unique_origination=False)
    if args.sessions:
        counts = {}
        for item in args.sessions:
            role, eq, n = item.partition("=")
            if not eq or not n.isdigit():
                return _err(f"--sessions expects ROLE=N, got {item!r}")
            counts[role] = int(n)
        cfg = cfg.with_sessions(**counts)
    if args.workers:
        cfg = cfg.replace(workers=args.workers)
    if args.max_states:
        cfg = cfg.replace(max_states=args.max_states)
    props = sf.properties
    if args.property:
        try:
            props = tuple((n, sf.property(n)) for n in args.property)
        except KeyError as e:
            return _err(str(e.args[0]))
    if not props:
        return _err(f"scenario {sf.name} declares no properties")
    results = {}
    status = EXIT_OK
    for name, prop in props:
        try:
            v = check_property(spec, prop, cfg)
        except SearchBudgetExceeded as e:
            results[name] = {"result": "budget-exceeded", "states_explored": e.states_explored,
                             "message": str(e)}
            status = EXIT_BUDGET if status == EXIT_OK else status
            continue
        results[name] = v.to_json()
        if v.attack:
            status = EXIT_ATTACK
            if args.dot:
                os.makedirs(args.dot, exist_ok=True)
                path = os.path.join(args.dot, f"{sf.name}.{name}.dot")
                with open(path, "w", encoding="utf-8") as fh:
                    fh.write(bundle_to_dot(v.witness, f"{sf.name} {name}"))
                results[name]["dot"] = path
    _emit({"scenario": sf.name, "properties": results})
    return status


def cmd_closure(args) -> int:
    from .kmp import ClosureKind, PolicyError, closure_report, load_policy
    try:
        policy = load_policy(args.policy)
        kind = ClosureKind.parse(args.kind)
    except (OSError, PolicyError, ValueError) as e:
        return _err(f"{args.policy}: {e}")
    rep = closure_report(policy, kind)
    if args.json:
        _emit(rep)
        return EXIT_OK
    print(f"closure: {rep['kind']}")
    print("implied:")
    for e in rep["implied"]:
        print(f"  {e}")
    print("reach:")
    for t, r in rep["reach"].items():
        print(f"  R_{t} = {{{', '.join(r)}}}")
    print(f"secure: {{{', '.join(rep['secure'])}}}")
    return EXIT_OK


def _load_bundle(path):
    with open(path, encoding="utf-8") as fh:
        return bundle_from_json(json.load(fh))


def cmd_bundle(args) -> int:
    try:
        b = _load_bundle(args.file)
    except BundleError as e:
        node = list(e.node) if e.node is not None else None
        _emit({"ok": False, "error": e.code, "message": str(e), "node": node})
        return EXIT_ERROR
    except (OSError, ValueError, KeyError, GrammarError) as e:
        return _err(f"{args.file}: {e}")
    if args.action == "dot":
        out = bundle_to_dot(b, os.path.basename(args.file))
        if args.output:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(out)
        else:
            sys.stdout.write(out)
        return EXIT_OK
    report = {"ok": True, "strands": len(b.strands), "nodes": len(b), "edges": len(b.edges)}
    if args.uniquely_originates:
        checks = {}
        for text in args.uniquely_originates:
            try:
                checks[text] = uniquely_originates(b, parse_term(text))
            except GrammarError as e:
                return _err(f"bad term {text!r}: {e}")
        report["uniquely_originates"] = checks
    _emit(report)
    return EXIT_OK


def cmd_list(args) -> int:
    from .protocols import builtin_scenarios
    out = []
    for name, sc in builtin_scenarios().items():
        out.append({
            "name": name,
            "description": sc.description,
            "properties": [n for n, _ in sc.properties],
            "assumptions": {t.name: t.description for t in sc.toggles},
            "expected": [{"property": r.prop, "needs": list(r.assumptions),
                          "verdict": r.verdict} for r in sc.expected],
        })
    if args.json:
        _emit(out)
        return EXIT_OK
    for sc in out:
        print(f"{sc['name']}: {sc['description']}")
        for row in sc["expected"]:
            needs = ", ".join(row["needs"]) or "-"
            print(f"  {row['property']:34s} {row['verdict']:10s} needs {needs}")
    return EXIT_OK


def cmd_show(args) -> int:
    from .scenario_file import ScenarioError, render_scenario
    try:
        _, sf = _resolve(args.scenario)
    except (FileNotFoundError, ScenarioError) as e:
        return _err(str(e))
    sys.stdout.write(render_scenario(sf))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="strandlab", description="Bounded strand-space analysis.")
    p.add_argument("--list", action="store_true", help="list builtin scenarios and exit")
    sub = p.add_subparsers(dest="command")

    c = sub.add_parser("check", help="check a scenario's properties")
    c.add_argument("scenario", help="builtin scenario name or scenario file")
    c.add_argument("--property", action="append", help="only this property (repeatable)")
    c.add_argument("--no-unique-origination", action="store_true",
                   help="fresh values may be guessed")
    c.add_argument("--disable", action="append", metavar="ASSUMPTION",
                   help="drop a named assumption of a builtin scenario")
    c.add_argument("--sessions", nargs="+", metavar="ROLE=N")
    c.add_argument("--workers", type=int, default=0)
    c.add_argument("--max-states", type=int, default=0)
    c.add_argument("--dot", metavar="DIR", help="write attack witnesses as DOT files")
    c.set_defaults(func=cmd_check)

    k = sub.add_parser("closure", help="policy closure and reachable sets")
    k.add_argument("policy")
    k.add_argument("--kind", default="refined", help="original, original5 or refined")
    k.add_argument("--json", action="store_true")
    k.set_defaults(func=cmd_closure)

    b = sub.add_parser("bundle", help="validate or render a bundle JSON file")
    b.add_argument("action", choices=("validate", "dot"))
    b.add_argument("file")
    b.add_argument("--uniquely-originates", action="append", metavar="TERM")
    b.add_argument("-o", "--output")
    b.set_defaults(func=cmd_bundle)

    ls = sub.add_parser("list", help="builtin scenarios and their expected verdicts")
    ls.add_argument("--json", action="store_true")
    ls.set_defaults(func=cmd_list)

    sh = sub.add_parser("show", help="print a scenario in the text format")
    sh.add_argument("scenario")
    sh.set_defaults(func=cmd_show)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_ERROR if e.code else EXIT_OK
    if args.list:
        return cmd_list(argparse.Namespace(json=False))
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_ERROR
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
