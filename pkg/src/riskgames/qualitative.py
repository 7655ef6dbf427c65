"""Qualitative fixpoints on games and induced arenas.

Everything here depends only on supports, never on probability values. The
central object is :class:`Arena`: a finite graph whose states belong to the
analysed player (``MAX``), to a hostile coalition (``MIN``), to chance
(``RAND``) or are terminal with one rational payoff.  An induced MDP is an
arena without ``MIN`` states.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

from .game import OPTIMIST, PESSIMIST, STOCHASTIC, TERMINAL, Game, can_reach, reachable

MAX, MIN, RAND, TERM = "max", "min", "rand", "term"


@dataclass
class Arena:
    kind: list
    succ: list
    payoff: list  # Fraction for TERM states, None elsewhere
    labels: list = field(default_factory=list)
    initial: int = 0

    def __len__(self):
        return len(self.kind)

    @cached_property
    def pred(self) -> list:
        out = [[] for _ in self.kind]
        for u, ws in enumerate(self.succ):
            for w in ws:
                out[w].append(u)
        return out

    @cached_property
    def terminal_states(self) -> list:
        return [s for s, k in enumerate(self.kind) if k == TERM]

    def label_index(self) -> dict:
        return {lab: s for s, lab in enumerate(self.labels)}


InducedMDP = Arena


def game_arena(g: Game, player, keep=None, others=MIN, keep_player=None) -> Arena:
    """Arena over the vertices of ``g`` seen from ``player``.

    ``others`` is the kind given to vertices of the remaining players.
    ``keep`` restricts every controlled vertex except the analysed player's,
    whose edges are restricted by ``keep_player`` (full edges by default).
    """
    idx = g.index
    kind, succ, pay = [], [], []
    for v in g.vertices:
        o = g.owner[v]
        if o == TERMINAL:
            kind.append(TERM)
            succ.append(())
            pay.append(g.payoff[v][player] if player is not None else None)
            continue
        if o == STOCHASTIC:
            kind.append(RAND)
            ws = g.edges[v]
        elif o == player:
            kind.append(MAX)
            ws = g.successors(v, keep_player)
        else:
            kind.append(others)
            ws = g.successors(v, keep)
        succ.append(tuple(idx[w] for w in ws))
        pay.append(None)
    return Arena(kind, succ, pay, list(g.vertices), idx[g.initial])


def cooperative_arena(g: Game, keep=None) -> Arena:
    """All controlled vertices act as one cooperative controller."""
    idx = g.index
    kind, succ = [], []
    for v in g.vertices:
        o = g.owner[v]
        kind.append(TERM if o == TERMINAL else RAND if o == STOCHASTIC else MAX)
        succ.append(tuple(idx[w] for w in g.successors(v, keep)))
    return Arena(kind, succ, [None] * len(kind), list(g.vertices), idx[g.initial])


# ---- fixpoint kernels --------------------------------------------------------

def positive_reach(arena: Arena, target, existential=(MAX, RAND), within=None):
    """Least fixpoint: states from which ``target`` is hit with positive probability.

    States whose kind is in ``existential`` need one successor inside, the
    others need all of them. Terminal states only count when targeted.
    Returns ``(region, choice)`` where ``choice`` gives an attracting move for
    every existential non-target state of the region.
    """
    n = len(arena)
    ok = [True] * n if within is None else [False] * n
    if within is not None:
        for s in within:
            ok[s] = True
    region = [False] * n
    choice = {}
    todo = deque()
    for s in target:
        if ok[s] and not region[s]:
            region[s] = True
            todo.append(s)
    missing = [0] * n
    for s in range(n):
        if arena.kind[s] not in existential:
            missing[s] = len(arena.succ[s])
    pred = arena.pred
    while todo:
        w = todo.popleft()
        for u in pred[w]:
            if region[u] or not ok[u] or arena.kind[u] == TERM:
                continue
            if arena.kind[u] in existential:
                region[u] = True
                choice[u] = w
                todo.append(u)
            else:
                missing[u] -= 1
                if missing[u] == 0:
                    region[u] = True
                    todo.append(u)
    return {s for s in range(n) if region[s]}, choice


def sure_safe(arena: Arena, avoid, existential=(MAX,)):
    """Greatest fixpoint: states from which ``avoid`` is never hit.

    Existential states need one successor in the region, the others all of
    them. Returns ``(region, choice)`` with a staying move per existential state.
    """
    n = len(arena)
    inside = [True] * n
    todo = deque()
    for s in avoid:
        if inside[s]:
            inside[s] = False
            todo.append(s)
    count = [len(arena.succ[s]) for s in range(n)]
    pred = arena.pred
    while todo:
        w = todo.popleft()
        for u in pred[w]:
            if not inside[u]:
                continue
            if arena.kind[u] in existential:
                count[u] -= 1
                if count[u] == 0:
                    inside[u] = False
                    todo.append(u)
            else:
                inside[u] = False
                todo.append(u)
    region = {s for s in range(n) if inside[s]}
    choice = {}
    for s in region:
        if arena.kind[s] in existential:
            choice[s] = next(w for w in arena.succ[s] if inside[w])
    return region, choice


def almost_sure_reach(arena: Arena, target, reacher=MAX):
    """States from which ``reacher`` hits ``target`` with probability one.

    The other player kind is hostile and ``RAND`` random. Classical nested
    fixpoint: shrink the candidate region by everything the opponent can
    push, with positive probability, out of it or into states that cannot
    progress. The choice map gives attracting moves for ``reacher``.
    """
    region, choice, _ = _almost_sure(arena, target, reacher)
    return region, choice


def _almost_sure(arena: Arena, target, reacher):
    """Nested fixpoint plus a positional spoiling strategy for the opponent
    on every state outside the returned region."""
    opponent = MIN if reacher == MAX else MAX
    n = len(arena)
    target = set(target)
    alive = set(range(n))
    spoil = {}
    while True:
        progress, choice = positive_reach(arena, target, existential=(reacher, RAND), within=alive)
        stuck = alive - progress
        if not stuck:
            return alive, choice, spoil
        for s in stuck:
            if arena.kind[s] == opponent:
                spoil[s] = next(w for w in arena.succ[s] if w not in progress)
        outside = set(range(n)) - alive
        leak, toward = positive_reach(arena, stuck | outside, existential=(opponent, RAND), within=None)
        for s in leak - stuck - outside:
            if arena.kind[s] == opponent:
                spoil[s] = toward[s]
        alive -= leak


# ---- values -----------------------------------------------------------------

def _candidates(arena: Arena):
    vals = {arena.payoff[s] for s in arena.terminal_states}
    vals.add(Fraction(0))
    return sorted(vals, reverse=True)


def winning_region(arena: Arena, x, mode):
    """States where MAX secures risk value at least ``x``, with a positional witness."""
    terms = arena.terminal_states
    if mode == OPTIMIST:
        if x > 0:
            good = [s for s in terms if arena.payoff[s] >= x]
            return positive_reach(arena, good, existential=(MAX, RAND))
        # a positive chance of avoiding the bad terminals (stalling forever
        # included) is exactly what the coalition cannot rule out almost surely
        bad = [s for s in terms if arena.payoff[s] < x]
        lost, _, spoil = _almost_sure(arena, bad, reacher=MIN)
        return set(range(len(arena))) - lost, spoil
    if mode == PESSIMIST:
        if x > 0:
            good = [s for s in terms if arena.payoff[s] >= x]
            return almost_sure_reach(arena, good)
        bad = [s for s in terms if arena.payoff[s] < x]
        return sure_safe(arena, bad, existential=(MAX,))
    raise ValueError(f"unknown mode {mode!r}")


def arena_values(arena: Arena, mode, need_witness=False):
    """Per-state value by a threshold sweep over the payoffs and 0.

    Returns ``values`` (list) and, if requested, a per-state positional
    choice for MAX states that attains the value of that state.
    """
    n = len(arena)
    values = [None] * n
    witness = {}
    left = n
    for x in _candidates(arena):
        region, choice = winning_region(arena, x, mode)
        for s in region:
            if values[s] is None:
                values[s] = x
                left -= 1
                if need_witness and arena.kind[s] == MAX:
                    witness[s] = choice.get(s, arena.succ[s][0])
        if left == 0:
            break
    if need_witness:
        for s in range(n):
            if arena.kind[s] == MAX and s not in witness:
                witness[s] = arena.succ[s][0]
    return values, witness


def mdp_best_xr(m: Arena, mode):
    """Best extreme-risk value from the initial state of an MDP and a positional policy.

    The policy maps state labels to successor labels and is read off the
    winning region of the best threshold, so it attains the value from the
    initial state.
    """
    if any(k == MIN for k in m.kind):
        raise ValueError("an MDP has no adversarial states")
    value = None
    for x in _candidates(m):
        region, choice = winning_region(m, x, mode)
        if m.initial in region:
            value = x
            break
    policy = {}
    for s, k in enumerate(m.kind):
        if k == MAX:
            w = choice.get(s, m.succ[s][0])
            policy[m.labels[s] if m.labels else s] = m.labels[w] if m.labels else w
    return value, policy


# ---- game-level operations -------------------------------------------------

def cooperative_safety(g: Game, keep, avoid) -> frozenset:
    """Vertices from which some profile using ``keep`` surely avoids ``avoid``."""
    arena = cooperative_arena(g, keep)
    idx = g.index
    region, _ = sure_safe(arena, [idx[v] for v in avoid], existential=(MAX,))
    return frozenset(g.vertices[s] for s in region)


def positive_attractor(g: Game, keep, target) -> frozenset:
    """Vertices from which every profile using ``keep`` hits ``target`` with positive probability."""
    return frozenset(g.vertices) - cooperative_safety(g, keep, target)


def cooperative_almost_sure_termination(g: Game, keep) -> frozenset:
    """Vertices from which some profile using ``keep`` terminates almost surely."""
    arena = cooperative_arena(g, keep)
    idx = g.index
    region, _ = almost_sure_reach(arena, [idx[t] for t in g.terminals])
    return frozenset(g.vertices[s] for s in region)


def stationary_positive_payoffs(g: Game, support) -> set:
    """Payoff vectors with positive probability when every vertex randomises over ``support``."""
    seen = reachable(g, support, g.initial)
    out = {g.payoff_vector(t) for t in seen if t in g.terminals}
    live = can_reach(g, support, g.terminals)
    if any(v not in live for v in seen):
        out.add(g.zero_vector)
    return out


def committed_positive_payoffs(g: Game, keep) -> set:
    """Payoff vectors with positive probability when each vertex commits on first visit."""
    seen = reachable(g, keep, g.initial)
    out = {g.payoff_vector(t) for t in seen if t in g.terminals}
    if cooperative_safety(g, keep, g.terminals) & seen:
        out.add(g.zero_vector)
    return out


def values_from_payoffs(g: Game, payoffs, risk) -> dict:
    out = {}
    for k, p in enumerate(g.players):
        xs = [vec[k] for vec in payoffs]
        out[p] = min(xs) if risk.mode(p) == PESSIMIST else max(xs)
    return out


def adversarial_values(g: Game, player, mode) -> dict:
    """Value each vertex guarantees ``player`` against all other players together."""
    key = ("adversarial", player, mode)
    cache = g._cache
    if key not in cache:
        arena = game_arena(g, player)
        values, _ = arena_values(arena, mode)
        cache[key] = {v: values[s] for s, v in enumerate(g.vertices)}
    return cache[key]


def adversarial_value(g: Game, v, player, mode) -> Fraction:
    return adversarial_values(g, player, mode)[v]
