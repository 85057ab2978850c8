"""Command line front end.

Exit status: 0 when the answer is yes (relation holds, formula satisfiable,
...), 1 when it is no, 2 on input or resource errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .action import ActionModel
from .covermod import enumerate_canonical
from .documents import DocumentError, load_model, model_to_dict, save_model
from .emulation import check_relation
from .formula import FormulaSyntaxError, parse, render
from .kripke import KripkeModel, product_update
from .minimize import SearchTooLarge, minimize_bisimulation, minimize_equivalence, minimize_prop_emulation
from .solver import SolverBudgetExceeded, SolverHandle

CHECK_RELATIONS = {"bisim": "bisim", "prop-emu": "prop_emu", "emu": "emu", "equiv": None}
THETAS = ("atoms", "hatset", "cover")
MINIMIZERS = {
    "bisim": minimize_bisimulation,
    "prop-emu": minimize_prop_emulation,
    "equiv": minimize_equivalence,
}


def _action(path: str) -> ActionModel:
    m = load_model(path)
    if not isinstance(m, ActionModel):
        raise DocumentError(f"{path}: expected an action model")
    return m


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2))


def cmd_check(args, solver: SolverHandle) -> int:
    rel = CHECK_RELATIONS[args.relation]
    if rel is None:
        rel = f"equiv_{args.theta}"
    elif args.theta is not None:
        raise DocumentError("--theta only applies to --relation equiv")
    if args.depth is not None and args.theta != "cover":
        raise DocumentError("--depth only applies to --theta cover")
    verdict = check_relation(_action(args.a), _action(args.b), rel, solver, jobs=args.jobs, k=args.depth)
    _emit(verdict.to_json())
    return 0 if verdict.holds else 1


def cmd_minimize(args, solver: SolverHandle) -> int:
    out = MINIMIZERS[args.relation](_action(args.a), solver)
    save_model(out, args.output)
    return 0


def cmd_update(args, solver: SolverHandle) -> int:
    m = load_model(args.model)
    if not isinstance(m, KripkeModel):
        raise DocumentError(f"{args.model}: expected a Kripke model")
    save_model(product_update(m, _action(args.action)), args.output)
    return 0


def cmd_sat(args, solver: SolverHandle) -> int:
    ok, witness = solver.is_satisfiable(parse(args.formula))
    _emit({"satisfiable": ok, "witness": model_to_dict(witness) if witness else None})
    return 0 if ok else 1


def cmd_valid(args, solver: SolverHandle) -> int:
    ok = solver.is_valid(parse(args.formula))
    _emit({"valid": ok})
    return 0 if ok else 1


def cmd_entails(args, solver: SolverHandle) -> int:
    ok = solver.entails(parse(args.premise), parse(args.conclusion))
    _emit({"entails": ok})
    return 0 if ok else 1


def cmd_atoms(args, solver: SolverHandle) -> int:
    atoms = solver.atoms([parse(f) for f in args.formulas])
    _emit([{"conjunction": render(a.conjunction), "members": sorted(map(render, a.members))} for a in atoms])
    return 0


def cmd_canonical(args, solver: SolverHandle) -> int:
    props = [p for p in args.props.split(",") if p]
    agents = [a for a in args.agents.split(",") if a]
    members = enumerate_canonical(args.depth, props, agents, solver)
    _emit([render(c.formula) for c in members])
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="amtk", description="Action model equivalence toolkit")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for the emulation iteration")
    p.add_argument("-v", "--verbose", action="store_true", help="report progress on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="decide a relation between two action models")
    c.add_argument("--relation", required=True, choices=sorted(CHECK_RELATIONS))
    c.add_argument("--theta", choices=THETAS, default=None)
    c.add_argument("--depth", type=int, default=None, help="canonical-formula level for --theta cover")
    c.add_argument("a")
    c.add_argument("b")
    c.set_defaults(func=cmd_check)

    m = sub.add_parser("minimize", help="minimise an action model")
    m.add_argument("--relation", required=True, choices=sorted(MINIMIZERS))
    m.add_argument("a")
    m.add_argument("-o", "--output", required=True)
    m.set_defaults(func=cmd_minimize)

    u = sub.add_parser("update", help="product update of a Kripke model with an action model")
    u.add_argument("model")
    u.add_argument("action")
    u.add_argument("-o", "--output", required=True)
    u.set_defaults(func=cmd_update)

    s = sub.add_parser("sat", help="satisfiability with a witness model")
    s.add_argument("formula")
    s.set_defaults(func=cmd_sat)

    v = sub.add_parser("valid", help="validity")
    v.add_argument("formula")
    v.set_defaults(func=cmd_valid)

    e = sub.add_parser("entails", help="does the first formula entail the second")
    e.add_argument("premise")
    e.add_argument("conclusion")
    e.set_defaults(func=cmd_entails)

    a = sub.add_parser("atoms", help="atoms of the closure of some formulas")
    a.add_argument("--formulas", nargs="+", required=True)
    a.set_defaults(func=cmd_atoms)

    k = sub.add_parser("canonical-formulas", help="canonical cover formulas of one depth")
    k.add_argument("--depth", type=int, required=True)
    k.add_argument("--props", default="")
    k.add_argument("--agents", default="")
    k.set_defaults(func=cmd_canonical)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "check" and args.relation == "equiv" and args.theta is None:
        args.theta = "atoms"
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return 2
    try:
        return args.func(args, SolverHandle())
    except (DocumentError, FormulaSyntaxError, SolverBudgetExceeded, SearchTooLarge, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
