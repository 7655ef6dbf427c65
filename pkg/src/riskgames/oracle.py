"""Brute-force ground truth for small instances.

Nothing here is clever: profiles are enumerated in a fixed order and each one
is checked directly. The solvers are tested against these answers.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

from .game import OPTIMIST, PESSIMIST, STOCHASTIC, TERMINAL, ConstraintBox, Game, can_reach, reachable
from .optimist import NO, YES, SolveResult
from .qualitative import (
    RAND,
    adversarial_values,
    committed_positive_payoffs,
    game_arena,
    mdp_best_xr,
    stationary_positive_payoffs,
    values_from_payoffs,
)
from .verify import COMMIT_ON_FIRST_VISIT, STATIONARY_UNIFORM, EdgeSetProfile, PositionalProfile, StationaryProfile

POSITIONAL = "positional"
STATIONARY_SUPPORT = "stationary-support"
DEFAULT_CAP = 10**6


class CapExceeded(RuntimeError):
    pass


def _nonempty_subsets(items):
    n = len(items)
    return [tuple(items[k] for k in range(n) if mask >> k & 1) for mask in range(1, 1 << n)]


def class_choices(g: Game, cls) -> list:
    """Per controlled vertex (in order), the list of options of the strategy class."""
    if cls == POSITIONAL:
        return [[(w,) for w in g.edges[v]] for v in g.controlled]
    if cls == STATIONARY_SUPPORT:
        return [_nonempty_subsets(g.edges[v]) for v in g.controlled]
    raise ValueError(f"unknown strategy class {cls!r}")


def _count(options) -> int:
    return math.prod(len(o) for o in options)


def _decode(index, options):
    """Mixed-radix decoding; the first vertex is the most significant digit."""
    out = []
    for opts in reversed(options):
        index, r = divmod(index, len(opts))
        out.append(opts[r])
    return out[::-1]


def _support_of(g: Game, picks) -> frozenset:
    keep = set()
    for v, ws in zip(g.controlled, picks):
        keep.update((v, w) for w in ws)
    for v in g.stochastic:
        keep.update((v, w) for w in g.edges[v])
    return frozenset(keep)


class _BoxFilter:
    """Integer-indexed pre-check of the box on the on-path payoff set.

    Works with per-terminal booleans so the bulk of the enumeration never
    touches rational arithmetic.
    """

    def __init__(self, g: Game, risk, box: ConstraintBox):
        self.g = g
        idx = g.index
        self.succ_stoch = {idx[v]: [idx[w] for w in g.edges[v]] for v in g.stochastic}
        self.ctrl = [idx[v] for v in g.controlled]
        self.is_term = [g.owner[v] == TERMINAL for v in g.vertices]
        self.n = len(g.vertices)
        self.start = idx[g.initial]
        rows = {}
        for v in g.vertices:
            if g.owner[v] == TERMINAL:
                rows[idx[v]] = g.payoff_vector(v)
        rows[-1] = g.zero_vector
        self.flags = {}
        for key, vec in rows.items():
            self.flags[key] = [(x >= box.lo(p), x <= box.hi(p)) for p, x in zip(g.players, vec)]
        self.pess = [risk.mode(p) == PESSIMIST for p in g.players]

    def passes(self, picks) -> bool:
        succ = dict(self.succ_stoch)
        idx = self.g.index
        for v, ws in zip(self.ctrl, picks):
            succ[v] = [idx[w] for w in ws]
        seen = {self.start}
        stack = [self.start]
        while stack:
            u = stack.pop()
            for w in succ.get(u, ()):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        terms = [u for u in seen if self.is_term[u]]
        live = set(terms)
        grew = True
        while grew:
            grew = False
            for u in seen:
                if u not in live and any(w in live for w in succ.get(u, ())):
                    live.add(u)
                    grew = True
        keys = terms + ([-1] if len(live) < len(seen) else [])
        for k, pess in enumerate(self.pess):
            fl = [self.flags[key][k] for key in keys]
            if pess:
                ok = all(a for a, _ in fl) and any(b for _, b in fl)
            else:
                ok = all(b for _, b in fl) and any(a for a, _ in fl)
            if not ok:
                return False
        return True


def _stationary_equilibrium(g: Game, keep, risk, box):
    """Values if the uniform profile on ``keep`` is an equilibrium inside ``box``."""
    values = values_from_payoffs(g, stationary_positive_payoffs(g, keep), risk)
    if not box.contains(values):
        return None
    for p in g.players:
        arena = game_arena(g, p, keep=keep, others=RAND)
        best, _ = mdp_best_xr(arena, risk.mode(p))
        if best > values[p]:
            return None
    return values


def _scan(job):
    g, risk, box, options, lo, hi = job
    quick = _BoxFilter(g, risk, box)
    for idx in range(lo, hi):
        picks = _decode(idx, options)
        if not quick.passes(picks):
            continue
        keep = _support_of(g, picks)
        values = _stationary_equilibrium(g, keep, risk, box)
        if values is not None:
            return idx, values
    return None


def _profile(g, picks, cls):
    if cls == POSITIONAL:
        return PositionalProfile({v: ws[0] for v, ws in zip(g.controlled, picks)})
    return StationaryProfile({v: tuple((w, Fraction(1, len(ws))) for w in ws) for v, ws in zip(g.controlled, picks)})


def oracle_constrained_existence(g: Game, risk, box: ConstraintBox | None, cls=POSITIONAL,
                                 cap: int = DEFAULT_CAP, jobs: int = 1) -> SolveResult:
    """First profile of the class, in canonical order, that is an equilibrium inside ``box``."""
    if not risk.is_extreme():
        raise ValueError("the oracle handles optimists and pessimists only")
    box = box or ConstraintBox.free()
    options = class_choices(g, cls)
    total = _count(options)
    if total > cap:
        raise CapExceeded(f"{total} profiles exceed the cap of {cap}")
    if jobs <= 1 or total < 1000:
        hit = _scan((g, risk, box, options, 0, total))
    else:
        step = -(-total // (jobs * 4))
        chunks = [(g, risk, box, options, lo, min(lo + step, total)) for lo in range(0, total, step)]
        hit = None
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for res in pool.map(_scan, chunks):
                if res is not None:
                    hit = res
                    break
    if hit is None:
        return SolveResult(NO, reason=f"none of {total} profiles qualifies")
    idx, values = hit
    return SolveResult(YES, _profile(g, _decode(idx, options), cls), values, rounds=idx)


# ---- adversarial values ----------------------------------------------------

def _positional_chain_value(g: Game, start, choice: dict, player, mode):
    def succ(u):
        return g.edges[u] if g.owner[u] == STOCHASTIC else (choice[u],) if u in choice else ()

    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for w in succ(u):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    pays = [g.payoff[t][player] for t in seen if g.owner[t] == TERMINAL]
    live = {t for t in seen if g.owner[t] == TERMINAL}
    changed = True
    while changed:
        changed = False
        for u in seen:
            if u not in live and any(w in live for w in succ(u)):
                live.add(u)
                changed = True
    if len(live) < len(seen):
        pays.append(Fraction(0))
    return min(pays) if mode == PESSIMIST else max(pays)


def oracle_adversarial_value(g: Game, v, player, mode, cap: int = DEFAULT_CAP) -> Fraction:
    """min over coalition positional profiles of max over the player's positional strategies."""
    if g.owner[v] == TERMINAL:
        return g.payoff[v][player]
    mine = [u for u in g.controlled if g.owner[u] == player]
    theirs = [u for u in g.controlled if g.owner[u] != player]
    n_mine = math.prod(len(g.edges[u]) for u in mine)
    n_theirs = math.prod(len(g.edges[u]) for u in theirs)
    if n_mine * n_theirs > cap:
        raise CapExceeded(f"{n_mine * n_theirs} profile pairs exceed the cap of {cap}")
    best = None
    for them in itertools.product(*(g.edges[u] for u in theirs)):
        base = dict(zip(theirs, them))
        top = None
        for me in itertools.product(*(g.edges[u] for u in mine)):
            choice = dict(base)
            choice.update(zip(mine, me))
            x = _positional_chain_value(g, v, choice, player, mode)
            top = x if top is None else max(top, x)
        best = top if best is None else min(best, top)
    return best


# ---- edge-set profiles with punishment -------------------------------------

def edgeset_qualifies(g: Game, keep, semantics, box: ConstraintBox):
    """Exact check of a punishing edge-set profile when everyone is an optimist.

    Returns the on-path values when the profile is an equilibrium inside
    ``box``, else ``None``. Off-support deviations meet the hostile-coalition
    value of their target; in the stationary reading in-support deviations
    form an MDP, and under commitment a player may revisit a vertex on a
    cycle and pick a different support edge, which the others detect.
    """
    risk_all = {p: OPTIMIST for p in g.players}
    if semantics == COMMIT_ON_FIRST_VISIT:
        pays = committed_positive_payoffs(g, keep)
    else:
        pays = stationary_positive_payoffs(g, keep)
    values = {p: max(vec[k] for vec in pays) for k, p in enumerate(g.players)}
    if not box.contains(values):
        return None
    seen = reachable(g, keep, g.initial)
    on_cycle = set()
    if semantics == COMMIT_ON_FIRST_VISIT:
        for u in seen:
            succ = g.successors(u, keep)
            if any(u in reachable(g, keep, w) for w in succ):
                on_cycle.add(u)
    for p in g.players:
        vals = adversarial_values(g, p, OPTIMIST)
        for u in seen:
            if g.owner[u] != p:
                continue
            inside = g.successors(u, keep)
            targets = [w for w in g.edges[u] if w not in inside]
            if u in on_cycle and len(inside) >= 2:
                targets = list(g.edges[u])
            if any(vals[w] > values[p] for w in targets):
                return None
        if semantics == STATIONARY_UNIFORM:
            arena = game_arena(g, p, keep=keep, others=RAND, keep_player=keep)
            best, _ = mdp_best_xr(arena, risk_all[p])
            if best > values[p]:
                return None
    return values


def oracle_edgeset_existence(g: Game, box: ConstraintBox | None, semantics=STATIONARY_UNIFORM,
                             cap: int = DEFAULT_CAP) -> SolveResult:
    """Search every support (non-empty subset per controlled vertex) for a punishing profile."""
    box = box or ConstraintBox.free()
    options = class_choices(g, STATIONARY_SUPPORT)
    total = _count(options)
    if total > cap:
        raise CapExceeded(f"{total} supports exceed the cap of {cap}")
    for idx in range(total):
        keep = _support_of(g, _decode(idx, options))
        values = edgeset_qualifies(g, keep, semantics, box)
        if values is not None:
            return SolveResult(YES, EdgeSetProfile(keep, semantics, True), values, rounds=idx)
    return SolveResult(NO, reason=f"none of {total} supports qualifies")


# ---- exact Nash check on small games ----------------------------------------

def _exact_solve(a, b):
    """Gauss-Jordan elimination over the rationals."""
    n = len(b)
    m = [row[:] + [b[k]] for k, row in enumerate(a)]
    for c in range(n):
        piv = next(r for r in range(c, n) if m[r][c] != 0)
        m[c], m[piv] = m[piv], m[c]
        inv = 1 / m[c][c]
        m[c] = [x * inv for x in m[c]]
        for r in range(n):
            if r != c and m[r][c] != 0:
                f = m[r][c]
                m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    return [m[r][n] for r in range(n)]


def exact_expectation(g: Game, rows: dict, player) -> Fraction:
    """Expected payoff of ``player`` from the initial vertex in a Markov chain, exactly."""
    succ_keep = {(v, w) for v, row in rows.items() for w, _ in row}
    live = can_reach(g, succ_keep | {e for e in g.edge_set if g.owner[e[0]] == STOCHASTIC}, g.terminals)
    if g.initial in g.terminals:
        return g.payoff[g.initial][player]
    if g.initial not in live:
        return Fraction(0)
    inner = [v for v in g.vertices if v in live and v not in g.terminals]
    pos = {v: k for k, v in enumerate(inner)}
    a = [[Fraction(int(r == c)) for c in range(len(inner))] for r in range(len(inner))]
    b = [Fraction(0)] * len(inner)
    for v in inner:
        for w, p in rows[v]:
            if w in g.terminals:
                b[pos[v]] += p * g.payoff[w][player]
            elif w in pos:
                a[pos[v]][pos[w]] -= p
    return _exact_solve(a, b)[pos[g.initial]]


def oracle_nash_positional(g: Game, sigma, tol=0.0) -> bool:
    """Expected-payoff Nash check against every positional deviation, in exact arithmetic."""
    if isinstance(sigma, PositionalProfile):
        base = {v: ((w, Fraction(1)),) for v, w in sigma.moves.items()}
    else:
        base = dict(sigma.moves)
    for v in g.stochastic:
        base[v] = tuple((w, g.prob[(v, w)]) for w in g.edges[v])
    for p in g.players:
        here = exact_expectation(g, base, p)
        mine = g.vertices_of(p)
        for picks in itertools.product(*(g.edges[u] for u in mine)):
            rows = dict(base)
            rows.update({u: ((w, Fraction(1)),) for u, w in zip(mine, picks)})
            if exact_expectation(g, rows, p) > here + Fraction(tol):
                return False
    return True


def brute_sat(cnf) -> bool:
    """Truth-table satisfiability for at most 20 variables."""
    n = cnf.n_vars
    if n > 20:
        raise ValueError("brute_sat handles at most 20 variables")
    for bits in range(1 << n):
        if all(any((lit > 0) == bool(bits >> (abs(lit) - 1) & 1) for lit in clause) for clause in cnf.clauses):
            return True
    return False
