"""Constrained existence of extreme-risk equilibria when every player is an optimist.

Two regimes, chosen by the upper bounds. If every upper bound is at least 0,
never terminating is acceptable and plays commit to their first choice at
each vertex. Otherwise termination must be forced, and the witness
randomises at every visit.
"""

from __future__ import annotations

from dataclasses import dataclass

from .game import OPTIMIST, ConstraintBox, Game, RiskAssignment, reachable
from .qualitative import (
    adversarial_values,
    committed_positive_payoffs,
    cooperative_almost_sure_termination,
    positive_attractor,
    stationary_positive_payoffs,
    values_from_payoffs,
)
from .verify import COMMIT_ON_FIRST_VISIT, STATIONARY_UNIFORM, EdgeSetProfile

YES, NO = "yes", "no"


@dataclass
class SolveResult:
    answer: str
    witness: EdgeSetProfile | None = None
    values: dict | None = None
    rounds: int = 0
    reason: str = ""

    def __bool__(self):
        return self.answer == YES


def _all_optimists(g: Game, risk):
    if risk is not None and any(risk.mode(p) != OPTIMIST for p in g.players):
        raise ValueError("every player must be an optimist")


def _optimist_risk(g):
    return RiskAssignment.uniform(g.players, OPTIMIST)


def _cut_into(keep: set, region) -> set:
    return {(u, w) for (u, w) in keep if u not in region and w in region}


def _too_high_terminals(g: Game, box: ConstraintBox):
    return {t for t in g.terminals if any(g.payoff[t][p] > box.hi(p) for p in g.players)}


def _tempting(g: Game, z: dict) -> set:
    out = set()
    for p in g.players:
        vals = adversarial_values(g, p, OPTIMIST)
        out.update(v for v in g.vertices_of(p) if vals[v] > z[p])
    return out


def _meets_lower(g, box, z):
    return all(z[p] >= box.lo(p) for p in g.players)


def solve_optimist(g: Game, box: ConstraintBox, risk=None) -> SolveResult:
    _all_optimists(g, risk)
    if all(box.hi(p) >= 0 for p in g.players):
        return solve_cycle_friendly(g, box)
    return solve_cycle_averse(g, box)


def solve_cycle_friendly(g: Game, box: ConstraintBox) -> SolveResult:
    risk = _optimist_risk(g)
    keep = set(g.edge_set)
    bad = positive_attractor(g, keep, _too_high_terminals(g, box))
    if g.initial in bad:
        return SolveResult(NO, rounds=0, reason="some upper bound is exceeded whatever is played")
    keep -= _cut_into(keep, bad)
    rounds = 0
    while True:
        rounds += 1
        z = values_from_payoffs(g, committed_positive_payoffs(g, keep), risk)
        bad = positive_attractor(g, keep, _tempting(g, z))
        if g.initial in bad:
            return SolveResult(NO, rounds=rounds, reason="a profitable deviation cannot be avoided")
        cut = _cut_into(keep, bad)
        if not cut:
            break
        keep -= cut
    if not _meets_lower(g, box, z):
        return SolveResult(NO, rounds=rounds, reason="lower bounds not met at the fixpoint")
    witness = EdgeSetProfile(frozenset(keep), COMMIT_ON_FIRST_VISIT, True)
    return SolveResult(YES, witness, z, rounds)


def solve_cycle_averse(g: Game, box: ConstraintBox) -> SolveResult:
    risk = _optimist_risk(g)
    keep = set(g.edge_set)
    bad = positive_attractor(g, keep, _too_high_terminals(g, box))
    if g.initial in bad:
        return SolveResult(NO, rounds=0, reason="some upper bound is exceeded whatever is played")
    keep -= _cut_into(keep, bad)
    k, quiet, z = 0, 0, None
    # stop once two consecutive rounds (one of each parity) removed nothing
    while k <= 1 or quiet < 2:
        k += 1
        if k % 2 == 1:
            bad = frozenset(g.vertices) - cooperative_almost_sure_termination(g, keep)
            why = "non-termination cannot be ruled out"
        else:
            z = values_from_payoffs(g, stationary_positive_payoffs(g, keep), risk)
            bad = positive_attractor(g, keep, _tempting(g, z))
            why = "a profitable deviation cannot be avoided"
        if g.initial in bad:
            return SolveResult(NO, rounds=k, reason=why)
        cut = _cut_into(keep, bad)
        keep -= cut
        quiet = 0 if cut else quiet + 1
    if not _meets_lower(g, box, z):
        return SolveResult(NO, rounds=k, reason="lower bounds not met at the fixpoint")
    keep = final_refinements(g, keep)
    witness = EdgeSetProfile(frozenset(keep), STATIONARY_UNIFORM, True)
    return SolveResult(YES, witness, z, k)


def _terminals_from(g: Game, keep, start) -> frozenset:
    return reachable(g, keep, start) & g.terminals


def final_refinements(g: Game, support) -> frozenset:
    """Drop redundant choices at controlled vertices while keeping every terminal reachable.

    An edge ``u -> v`` goes if ``u`` is controlled with another option, every
    terminal reachable from ``v`` stays reachable from the initial vertex
    without it, and some terminal stays reachable from ``u`` without it.
    """
    keep = set(support)
    order = [e for e in g.edge_list if e in keep]
    changed = True
    while changed:
        changed = False
        for e in order:
            u, v = e
            if e not in keep or not g.is_controlled(u):
                continue
            if sum(1 for w in g.edges[u] if (u, w) in keep) < 2:
                continue
            without = keep - {e}
            if not _terminals_from(g, keep, v) <= _terminals_from(g, without, g.initial):
                continue
            if not _terminals_from(g, without, u):
                continue
            keep = without
            changed = True
            break
    return frozenset(keep)
