"""Command-line front end.

Exit codes: 0 yes/verified/valid, 1 no/refuted/invalid, 2 usage or I/O
error, 3 cap exceeded or non-convergence. JSON goes to stdout (or ``-o``),
diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from fractions import Fraction

from . import oracle as _oracle
from .game import (
    OPTIMIST,
    PESSIMIST,
    ConstraintBox,
    Entropic,
    GameFormatError,
    RiskAssignment,
    UnreachableVertexWarning,
    format_rational,
    load_game,
    serialize_game,
    validate,
)
from .optimist import solve_optimist
from .qualitative import adversarial_values
from .reductions import (
    ReachabilityArena,
    emit_etr,
    er_to_nash,
    er_to_nash_symbolic,
    format_dimacs,
    gen_reachability_instance,
    gen_threesat_game,
    parse_dimacs,
)
from .verify import (
    EdgeSetProfile,
    NonConvergenceError,
    ProfileError,
    load_profile,
    profile_to_dict,
    verify_profile,
    verify_stationary_erse,
)
from .xrse import construct_xrse

OK, NO, USAGE, LIMIT = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: JSON syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _game(path):
    try:
        return load_game(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _risk(path, g, default=None):
    if path is None:
        if default is None:
            raise UsageError("--risk is required")
        return RiskAssignment.uniform(g.players, default)
    return RiskAssignment.from_dict(_read_json(path), g.players)


def _box(path, g):
    if path is None:
        return None
    return ConstraintBox.from_dict(_read_json(path), g.players)


def _values(values):
    return {p: format_rational(x) if isinstance(x, Fraction) else x for p, x in values.items()}


def _emit(args, doc):
    text = json.dumps(doc, indent=2 if args.pretty else None, sort_keys=False)
    out = getattr(args, "output", None)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _say(args, message):
    if args.pretty:
        print(message, file=sys.stderr)


# ---- subcommands -------------------------------------------------------------

def cmd_validate(args):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", UnreachableVertexWarning)
        try:
            g = load_game(args.game)
            problems = validate(g)
        except GameFormatError as exc:
            problems = exc.problems
        except OSError as exc:
            raise UsageError(f"cannot read {args.game}: {exc.strerror}") from exc
    notes = [str(w.message) for w in caught if issubclass(w.category, UnreachableVertexWarning)]
    for n in notes:
        print(f"warning: {n}", file=sys.stderr)
    _emit(args, {"valid": not problems, "violations": problems, "warnings": notes})
    return OK if not problems else NO


def cmd_info(args):
    g = _game(args.game)
    table = {}
    for p in g.players:
        pess = adversarial_values(g, p, PESSIMIST)
        opt = adversarial_values(g, p, OPTIMIST)
        for v in g.vertices_of(p):
            table[v] = {"owner": p, "pessimist": format_rational(pess[v]), "optimist": format_rational(opt[v])}
    doc = {
        "players": len(g.players),
        "vertices": len(g.vertices),
        "edges": len(g.edge_set),
        "controlled": len(g.controlled),
        "stochastic": len(g.stochastic),
        "terminals": len(g.terminals),
        "adversarial_values": table,
    }
    _emit(args, doc)
    return OK


def cmd_find_xrse(args):
    g = _game(args.game)
    risk = _risk(args.risk, g, default=PESSIMIST)
    res = construct_xrse(g, risk)
    _say(args, f"equilibrium after {len(res.removed)} pruning round(s): {_values(res.values)}")
    _emit(args, {"strategy": profile_to_dict(res.profile, g), "values": _values(res.values)})
    return OK


def cmd_solve_optimist(args):
    g = _game(args.game)
    box = _box(args.constraints, g)
    if box is None:
        raise UsageError("--constraints is required")
    res = solve_optimist(g, box)
    doc = {"answer": res.answer}
    if res:
        doc["values"] = _values(res.values)
        doc["strategy"] = profile_to_dict(res.witness, g)
    else:
        doc["reason"] = res.reason
    _say(args, f"answer: {res.answer}")
    _emit(args, doc)
    return OK if res else NO


def cmd_verify(args):
    g = _game(args.game)
    risk = _risk(args.risk, g)
    box = _box(args.constraints, g)
    sigma = load_profile(args.strategy)
    report = verify_profile(g, sigma, risk, box)
    _say(args, "equilibrium" if report.is_equilibrium else "not an equilibrium")
    _emit(args, report.to_dict())
    return OK if report.accepted else NO


def cmd_oracle(args):
    g = _game(args.game)
    risk = _risk(args.risk, g)
    box = _box(args.constraints, g)
    try:
        res = _oracle.oracle_constrained_existence(g, risk, box, args.cls, args.cap, args.jobs)
    except _oracle.CapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return LIMIT
    doc = {"answer": res.answer}
    if res:
        doc["values"] = _values(res.values)
        doc["strategy"] = profile_to_dict(res.witness, g)
    _emit(args, doc)
    return OK if res else NO


def _entropic_params(g, risk):
    if risk.base is None:
        raise UsageError("the risk file needs a 'base' for entropic commands")
    rhos = {}
    for p in g.players:
        m = risk.mode(p)
        if not isinstance(m, Entropic):
            raise UsageError(f"player {p} needs an entropic parameter (rho)")
        rhos[p] = m.rho
    return risk.base, rhos


def cmd_er_eval(args):
    g = _game(args.game)
    risk = _risk(args.risk, g)
    base, rhos = _entropic_params(g, risk)
    sigma = load_profile(args.strategy)
    if isinstance(sigma, EdgeSetProfile):
        raise UsageError("er-eval needs explicit probabilities (positional or stationary)")
    report = verify_stationary_erse(g, sigma, base, rhos, _box(args.constraints, g), args.tol)
    _emit(args, report.to_dict())
    return OK


def cmd_er_to_nash(args):
    g = _game(args.game)
    risk = _risk(args.risk, g)
    base, rhos = _entropic_params(g, risk)
    if args.symbolic:
        _emit(args, {"payoffs": er_to_nash_symbolic(g, base, rhos)})
        return OK
    text = serialize_game(er_to_nash(g, base, rhos))
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    return OK


def _write_bundle(outdir, game, risk, box):
    os.makedirs(outdir, exist_ok=True)
    files = {
        "game.json": json.loads(serialize_game(game)),
        "risk.json": risk.to_dict(),
        "constraints.json": box.to_dict(),
    }
    for name, doc in files.items():
        with open(os.path.join(outdir, name), "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")


def cmd_gen_3sat(args):
    try:
        with open(args.cnf, encoding="utf-8") as fh:
            cnf = parse_dimacs(fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read {args.cnf}: {exc.strerror}") from exc
    game, risk, box = gen_threesat_game(cnf)
    _write_bundle(args.output, game, risk, box)
    with open(os.path.join(args.output, "formula.cnf"), "w", encoding="utf-8") as fh:
        fh.write(format_dimacs(cnf))
    return OK


def cmd_gen_reach(args):
    arena = ReachabilityArena.from_dict(_read_json(args.arena))
    game, risk, box = gen_reachability_instance(arena)
    _write_bundle(args.output, game, risk, box)
    return OK


def cmd_emit_etr(args):
    g = _game(args.game)
    risk = _risk(args.risk, g)
    base, rhos = _entropic_params(g, risk)
    doc = _read_json(args.support)
    edges = doc["support"] if isinstance(doc, dict) else doc
    text = emit_etr(g, base, rhos, [tuple(e) for e in edges], _box(args.constraints, g))
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return OK


# ---- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="riskgames", description="Risk-sensitive equilibria in simple stochastic games.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pretty", action="store_true", help="indented JSON and a summary on stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn)
        return p

    p = add("validate", cmd_validate, "check a game file")
    p.add_argument("game")
    p = add("info", cmd_info, "sizes and per-vertex adversarial values")
    p.add_argument("game")
    p = add("find-xrse", cmd_find_xrse, "construct a stationary equilibrium (non-negative payoffs)")
    p.add_argument("game")
    p.add_argument("--risk")
    p.add_argument("-o", "--output")
    p = add("solve-optimist", cmd_solve_optimist, "constrained existence when everyone is an optimist")
    p.add_argument("game")
    p.add_argument("--constraints", required=True)
    p.add_argument("-o", "--output")
    p = add("verify", cmd_verify, "check a strategy profile")
    p.add_argument("game")
    p.add_argument("strategy")
    p.add_argument("--risk", required=True)
    p.add_argument("--constraints")
    p = add("oracle", cmd_oracle, "exhaustive search over a strategy class")
    p.add_argument("game")
    p.add_argument("--risk", required=True)
    p.add_argument("--constraints")
    p.add_argument("--class", dest="cls", choices=[_oracle.POSITIONAL, _oracle.STATIONARY_SUPPORT], required=True)
    p.add_argument("--cap", type=int, default=_oracle.DEFAULT_CAP)
    p.add_argument("--jobs", type=int, default=1)
    p = add("er-eval", cmd_er_eval, "entropic values of a stationary profile")
    p.add_argument("game")
    p.add_argument("strategy")
    p.add_argument("--risk", required=True)
    p.add_argument("--constraints")
    p.add_argument("--tol", type=float, default=1e-9)
    p = add("er-to-nash", cmd_er_to_nash, "replace payoffs by modified rewards")
    p.add_argument("game")
    p.add_argument("--risk", required=True)
    p.add_argument("--symbolic", action="store_true", help="exact (base, exponent) records instead of floats")
    p.add_argument("-o", "--output")
    p = add("gen-3sat", cmd_gen_3sat, "game encoding a 3-CNF formula")
    p.add_argument("cnf")
    p.add_argument("-o", "--output", required=True)
    p = add("gen-reach", cmd_gen_reach, "game encoding a two-player reachability arena")
    p.add_argument("arena")
    p.add_argument("-o", "--output", required=True)
    p = add("emit-etr", cmd_emit_etr, "SMT-LIB script for a fixed support")
    p.add_argument("game")
    p.add_argument("--risk", required=True)
    p.add_argument("--support", required=True)
    p.add_argument("--constraints")
    p.add_argument("-o", "--output")
    return ap


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    try:
        return args.func(args)
    except (UsageError, GameFormatError, ProfileError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return LIMIT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
