"""Construction of a stationary extreme-risk equilibrium for non-negative games.

Start from every edge and repeatedly prune: whenever some pessimist could,
using only the current edges, make sure to beat its current value, cut the
edges that lead from the reachable region into the set where that player is
still exposed. The fixpoint, played uniformly, is an equilibrium.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .game import PESSIMIST, Game, reachable
from .qualitative import (
    RAND,
    almost_sure_reach,
    game_arena,
    stationary_positive_payoffs,
    sure_safe,
    values_from_payoffs,
)
from .verify import STATIONARY_UNIFORM, EdgeSetProfile


@dataclass
class XrseResult:
    profile: EdgeSetProfile
    values: dict
    trace: list = field(default_factory=list)  # per round: {pessimist: value}
    removed: list = field(default_factory=list)  # per round: edges cut


def exposure_region(g: Game, keep, player, z) -> frozenset:
    """Vertices where ``player``, restricted to ``keep`` against uniform play of
    the others, cannot guarantee almost surely a payoff strictly above ``z``."""
    arena = game_arena(g, player, keep=keep, others=RAND, keep_player=keep)
    terms = arena.terminal_states
    if z >= 0:
        win, _ = almost_sure_reach(arena, [s for s in terms if arena.payoff[s] > z])
    else:
        win, _ = sure_safe(arena, [s for s in terms if arena.payoff[s] <= z])
    return frozenset(g.vertices[s] for s in range(len(arena)) if s not in win)


def construct_xrse(g: Game, risk) -> XrseResult:
    if not risk.is_extreme():
        raise ValueError("construction needs optimists and pessimists only")
    if any(x < 0 for pay in g.payoff.values() for x in pay.values()):
        raise ValueError("construction needs non-negative payoffs")
    keep = set(g.edge_set)
    pessimists = [p for p in g.players if risk.mode(p) == PESSIMIST]
    trace, removed = [], []
    while True:
        payoffs = stationary_positive_payoffs(g, keep)
        values = values_from_payoffs(g, payoffs, risk)
        trace.append({p: values[p] for p in pessimists})
        seen = reachable(g, keep, g.initial)
        cut = None
        for p in pessimists:
            exposed = exposure_region(g, keep, p, values[p])
            if g.initial not in exposed:
                cut = {(u, w) for (u, w) in keep if u in seen and u not in exposed and w in exposed}
                break
        if not cut:
            profile = EdgeSetProfile(frozenset(keep), STATIONARY_UNIFORM, False)
            return XrseResult(profile, values, trace, removed)
        keep -= cut
        removed.append(sorted(cut, key=lambda e: (g.index[e[0]], g.index[e[1]])))
