"""Strategy profiles, their extreme-risk values, and equilibrium checks."""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .game import (
    OPTIMIST,
    STOCHASTIC,
    TERMINAL,
    ConstraintBox,
    Game,
    as_edge_set,
    check_keep,
    format_rational,
    parse_rational,
    reachable,
)
from .qualitative import (
    MAX,
    RAND,
    TERM,
    Arena,
    adversarial_values,
    committed_positive_payoffs,
    game_arena,
    mdp_best_xr,
    stationary_positive_payoffs,
    values_from_payoffs,
)
from .risk import invert_modified_reward, log_base, modified_reward, reward_shift

STATIONARY_UNIFORM = "stationary"
COMMIT_ON_FIRST_VISIT = "commit"


class ProfileError(ValueError):
    pass


class NonConvergenceError(RuntimeError):
    pass


# ---- profile types -----------------------------------------------------------

@dataclass(frozen=True)
class PositionalProfile:
    moves: Mapping  # vertex -> successor


@dataclass(frozen=True)
class StationaryProfile:
    moves: Mapping  # vertex -> ((successor, probability), ...)

    @classmethod
    def uniform(cls, g: Game, support) -> "StationaryProfile":
        moves = {}
        for v in g.controlled:
            ws = g.successors(v, support)
            moves[v] = tuple((w, Fraction(1, len(ws))) for w in ws)
        return cls(moves)


@dataclass(frozen=True)
class EdgeSetProfile:
    support: frozenset
    semantics: str = STATIONARY_UNIFORM
    punish_on_deviation: bool = False

    def __post_init__(self):
        object.__setattr__(self, "support", as_edge_set(self.support))
        if self.semantics not in (STATIONARY_UNIFORM, COMMIT_ON_FIRST_VISIT):
            raise ProfileError(f"unknown semantics {self.semantics!r}")
        if self.semantics == COMMIT_ON_FIRST_VISIT:
            object.__setattr__(self, "punish_on_deviation", True)


@dataclass(frozen=True)
class FiniteMemoryProfile:
    """Collective Mealy-style profile: output at a vertex reads the memory built
    from the history strictly before it."""

    states: tuple
    initial: object
    update: Mapping  # (state, vertex) -> state
    output: Mapping  # (state, controlled vertex) -> ((successor, probability), ...)

    @classmethod
    def from_positional(cls, sigma: PositionalProfile, g: Game) -> "FiniteMemoryProfile":
        s = "s0"
        return cls(
            (s,),
            s,
            {(s, v): s for v in g.vertices if v not in g.terminals},
            {(s, v): ((w, Fraction(1)),) for v, w in sigma.moves.items()},
        )


def _dist(pairs, where):
    pairs = tuple((w, Fraction(p)) for w, p in pairs)
    if not pairs:
        raise ProfileError(f"empty move set at {where}")
    if any(p <= 0 for _, p in pairs):
        raise ProfileError(f"non-positive probability at {where}")
    if sum(p for _, p in pairs) != 1:
        raise ProfileError(f"probabilities at {where} do not sum to 1")
    return pairs


class _View:
    """Uniform access to any profile: memory update and move distribution."""

    def __init__(self, g: Game, sigma):
        self.g = g
        self.sigma = sigma
        if isinstance(sigma, PositionalProfile):
            self.m0 = None
            self._moves = {v: ((w, Fraction(1)),) for v, w in sigma.moves.items()}
        elif isinstance(sigma, StationaryProfile):
            self.m0 = None
            self._moves = {v: _dist(ws, v) for v, ws in sigma.moves.items()}
        elif isinstance(sigma, EdgeSetProfile):
            if sigma.semantics != STATIONARY_UNIFORM:
                raise ProfileError("commit-on-first-visit profiles have no finite stationary view")
            problems = check_keep(g, sigma.support)
            if problems:
                raise ProfileError("; ".join(problems))
            self.m0 = None
            self._moves = dict(StationaryProfile.uniform(g, sigma.support).moves)
        elif isinstance(sigma, FiniteMemoryProfile):
            self.m0 = sigma.initial
            self._moves = None
        else:
            raise ProfileError(f"unsupported profile type {type(sigma).__name__}")

    def step(self, m, v):
        if self._moves is not None:
            return None
        try:
            return self.sigma.update[(m, v)]
        except KeyError:
            raise ProfileError(f"memory update undefined on ({m}, {v})") from None

    def moves(self, m, v):
        if self._moves is not None:
            key, table = v, self._moves
        else:
            key, table = (m, v), self.sigma.output
        try:
            ws = table[key]
        except KeyError:
            raise ProfileError(f"profile undefined at {key}") from None
        if self._moves is None:
            ws = _dist(ws, key)
        for w, _ in ws:
            if w not in self.g.edges[v]:
                raise ProfileError(f"{v}->{w} is not an edge")
        return ws


def _product(g: Game, view: _View, deviator=None, player=None):
    """Reachable product of the game with the profile's memory.

    Vertices of ``deviator`` become MAX states with all their edges; every
    other choice follows the profile. Returns the arena and per-state
    transition probabilities (``None`` for MAX states).
    """
    start = (g.initial, view.m0)
    index = {start: 0}
    labels = [start]
    kind, succ, pay, probs = [], [], [], []
    todo = deque([start])
    while todo:
        v, m = todo.popleft()
        o = g.owner[v]
        if o == TERMINAL:
            kind.append(TERM)
            succ.append(())
            probs.append(())
            pay.append(g.payoff[v][player] if player is not None else g.payoff_vector(v))
            continue
        m2 = view.step(m, v)
        if o == STOCHASTIC:
            kind.append(RAND)
            moves = tuple((w, g.prob[(v, w)]) for w in g.edges[v])
        elif o == deviator:
            kind.append(MAX)
            moves = tuple((w, None) for w in g.edges[v])
        else:
            kind.append(RAND)
            moves = view.moves(m, v)
        row, prow = [], []
        for w, p in moves:
            key = (w, m2)
            if key not in index:
                index[key] = len(labels)
                labels.append(key)
                todo.append(key)
            row.append(index[key])
            prow.append(p)
        succ.append(tuple(row))
        probs.append(tuple(prow))
        pay.append(None)
    return Arena(kind, succ, pay, labels, 0), probs


def _chain_payoffs(g: Game, arena: Arena) -> set:
    terms = arena.terminal_states
    out = {arena.payoff[s] for s in terms}
    live = set(terms)
    todo = deque(terms)
    pred = arena.pred
    while todo:
        w = todo.popleft()
        for u in pred[w]:
            if u not in live:
                live.add(u)
                todo.append(u)
    if len(live) < len(arena):
        out.add(g.zero_vector)
    return out


def positive_payoffs(g: Game, sigma) -> set:
    """Payoff vectors obtained with positive probability under ``sigma``."""
    if isinstance(sigma, EdgeSetProfile):
        problems = check_keep(g, sigma.support)
        if problems:
            raise ProfileError("; ".join(problems))
        if sigma.semantics == COMMIT_ON_FIRST_VISIT:
            return committed_positive_payoffs(g, sigma.support)
        return stationary_positive_payoffs(g, sigma.support)
    arena, _ = _product(g, _View(g, sigma))
    return _chain_payoffs(g, arena)


def xr_of_profile(g: Game, sigma, risk) -> dict:
    return values_from_payoffs(g, positive_payoffs(g, sigma), risk)


def _deviation_view(g: Game, sigma) -> _View:
    if isinstance(sigma, EdgeSetProfile) and sigma.punish_on_deviation:
        raise ProfileError("punishing edge-set profiles are checked with verify_edgeset_certificate")
    return _View(g, sigma)


def best_deviation(g: Game, sigma, player, risk):
    """Best value ``player`` reaches by deviating (with all original edges) and the policy."""
    arena, _ = _product(g, _deviation_view(g, sigma), deviator=player, player=player)
    return mdp_best_xr(arena, risk.mode(player))


# ---- reports -----------------------------------------------------------------

def memory_bound(g: Game) -> int:
    n, p = len(g.vertices), len(g.players)
    return 3 * n * p - 2 * n + p + 1


@dataclass
class PlayerReport:
    xr_value: Fraction
    best_deviation: Fraction
    deviation_witness: dict = field(default_factory=dict)

    @property
    def improves(self) -> bool:
        return self.best_deviation > self.xr_value


@dataclass
class VerifyReport:
    players: dict
    is_equilibrium: bool
    constraints_met: bool | None
    certificate_size: int
    memory_bound: int
    failures: list = field(default_factory=list)

    @property
    def bound_ok(self) -> bool:
        return self.certificate_size <= self.memory_bound

    @property
    def values(self) -> dict:
        return {p: r.xr_value for p, r in self.players.items()}

    @property
    def accepted(self) -> bool:
        return self.is_equilibrium and self.constraints_met is not False

    def to_dict(self) -> dict:
        return {
            "is_equilibrium": self.is_equilibrium,
            "constraints_met": self.constraints_met,
            "certificate_size": self.certificate_size,
            "memory_bound": self.memory_bound,
            "bound_ok": self.bound_ok,
            "players": {
                p: {
                    "value": format_rational(r.xr_value),
                    "best_deviation": format_rational(r.best_deviation),
                    "deviation_witness": {str(k): str(v) for k, v in r.deviation_witness.items()},
                }
                for p, r in self.players.items()
            },
            "failures": list(self.failures),
        }


def _certificate_size(sigma) -> int:
    return len(sigma.states) if isinstance(sigma, FiniteMemoryProfile) else 1


def verify_profile(g: Game, sigma, risk, box: ConstraintBox | None = None) -> VerifyReport:
    """Exact extreme-risk equilibrium check, plus the optional constraint box."""
    if not risk.is_extreme():
        raise ValueError("verify_profile handles optimists and pessimists only")
    if isinstance(sigma, EdgeSetProfile) and sigma.punish_on_deviation:
        return verify_edgeset_certificate(g, sigma, risk, box)
    values = xr_of_profile(g, sigma, risk)
    players = {}
    for p in g.players:
        dev, witness = best_deviation(g, sigma, p, risk)
        players[p] = PlayerReport(values[p], dev, witness)
    ok = all(not r.improves for r in players.values())
    met = None if box is None else box.contains(values)
    failures = [f"player {p} improves to {format_rational(r.best_deviation)}" for p, r in players.items() if r.improves]
    if met is False:
        failures.append("values outside the constraint box")
    return VerifyReport(players, ok, met, _certificate_size(sigma), memory_bound(g), failures)


def verify_edgeset_certificate(g: Game, pi: EdgeSetProfile, risk, box: ConstraintBox | None = None) -> VerifyReport:
    """Certificate check for punishing edge-set profiles when everyone is an optimist.

    (a) reachable terminals respect the upper bounds, (b) on-path values meet
    the lower bounds, (c) no reachable vertex of a player offers that player
    more than its on-path value against a hostile coalition, (d) deviations
    that stay inside the support do not pay either.
    """
    if any(risk.mode(p) != OPTIMIST for p in g.players):
        raise ValueError("edge-set certificates are defined for optimists only")
    problems = check_keep(g, pi.support)
    if problems:
        raise ProfileError("; ".join(problems))
    failures = []
    values = xr_of_profile(g, pi, risk)
    seen = reachable(g, pi.support, g.initial)
    if box is not None:
        for t in sorted(seen & g.terminals, key=g.index.get):
            for p in g.players:
                if g.payoff[t][p] > box.hi(p):
                    failures.append(f"(a) terminal {t} exceeds the upper bound of {p}")
        for p in g.players:
            if values[p] < box.lo(p):
                failures.append(f"(b) value of {p} below its lower bound")
    players = {}
    for p in g.players:
        best, witness = values[p], {}
        if pi.semantics == STATIONARY_UNIFORM:
            arena = game_arena(g, p, keep=pi.support, others=RAND, keep_player=pi.support)
            best, witness = mdp_best_xr(arena, OPTIMIST)
            if best > values[p]:
                failures.append(f"(d) {p} gains {format_rational(best)} inside the support")
        vals = adversarial_values(g, p, OPTIMIST)
        for v in g.vertices:
            if g.owner[v] == p and v in seen and vals[v] > values[p]:
                failures.append(f"(c) {p} can secure {format_rational(vals[v])} from {v}")
                if vals[v] > best:
                    best, witness = vals[v], {v: "hostile-coalition value"}
        players[p] = PlayerReport(values[p], best, witness)
    ok = all(not r.improves for r in players.values())
    met = None if box is None else box.contains(values) and not any(f.startswith("(a)") for f in failures)
    return VerifyReport(players, ok, met, 1, memory_bound(g), failures)


# ---- entropic risk on stationary profiles ----------------------------------

@dataclass
class ErPlayerReport:
    rho: Fraction
    expected_reward: float
    best_expected_reward: float
    value: float
    best_value: float


@dataclass
class ErReport:
    players: dict
    is_equilibrium: bool
    constraints_met: bool | None
    iterations: int

    def to_dict(self) -> dict:
        return {
            "is_equilibrium": self.is_equilibrium,
            "constraints_met": self.constraints_met,
            "players": {
                p: {
                    "rho": format_rational(r.rho),
                    "value": r.value,
                    "best_deviation": r.best_value,
                    "expected_reward": r.expected_reward,
                    "best_expected_reward": r.best_expected_reward,
                }
                for p, r in self.players.items()
            },
        }


def _stationary_rows(g: Game, sigma) -> dict:
    view = _View(g, sigma)
    if view.m0 is not None:
        raise ProfileError("entropic verification needs a stationary profile")
    rows = {}
    for v in g.vertices:
        o = g.owner[v]
        if o == TERMINAL:
            continue
        if o == STOCHASTIC:
            rows[v] = tuple((w, g.prob[(v, w)]) for w in g.edges[v])
        else:
            rows[v] = view.moves(None, v)
    return rows


def transformed_payoffs(g: Game, player, base, rho, shift=0.0) -> dict:
    rho = Fraction(rho)
    if rho == 0:
        return {t: float(g.payoff[t][player]) for t in g.terminals}
    return {t: modified_reward(g.payoff[t][player], base, rho, shift) for t in g.terminals}


def chain_expectation(g: Game, rows: dict, reward: dict) -> float:
    """Expected terminal reward from the initial vertex; non-termination counts 0."""
    succ = {v: tuple(w for w, _ in row) for v, row in rows.items()}
    live = set(g.terminals)
    changed = True
    while changed:
        changed = False
        for v, ws in succ.items():
            if v not in live and any(w in live for w in ws):
                live.add(v)
                changed = True
    inner = [v for v in g.vertices if v in live and v not in g.terminals]
    if g.initial in g.terminals:
        return reward[g.initial]
    if g.initial not in live:
        return 0.0
    pos = {v: k for k, v in enumerate(inner)}
    a = np.eye(len(inner))
    b = np.zeros(len(inner))
    for v in inner:
        for w, p in rows[v]:
            p = float(p)
            if w in g.terminals:
                b[pos[v]] += p * reward[w]
            elif w in pos:
                a[pos[v], pos[w]] -= p
    x = np.linalg.solve(a, b)
    return float(x[pos[g.initial]])


def absorption(g: Game, rows: dict) -> tuple:
    """Probability of ending in each terminal, and of never terminating, from the initial vertex."""
    terms = sorted(g.terminals, key=g.index.get)
    if g.initial in g.terminals:
        return {t: float(t == g.initial) for t in terms}, 0.0
    inner = [v for v in g.vertices if v not in g.terminals]
    pos = {v: k for k, v in enumerate(inner)}
    col = {t: k for k, t in enumerate(terms)}
    succ = {v: tuple(w for w, _ in row) for v, row in rows.items()}
    live = set(g.terminals)
    changed = True
    while changed:
        changed = False
        for v, ws in succ.items():
            if v not in live and any(w in live for w in ws):
                live.add(v)
                changed = True
    a = np.eye(len(inner))
    b = np.zeros((len(inner), len(terms) + 1))
    for v in inner:
        if v not in live:
            b[pos[v], -1] = 1.0
            continue
        for w, p in rows[v]:
            if w in g.terminals:
                b[pos[v], col[w]] += float(p)
            else:
                a[pos[v], pos[w]] -= float(p)
    x = np.linalg.solve(a, b)[pos[g.initial]]
    return {t: max(0.0, float(x[col[t]])) for t in terms}, max(0.0, float(x[-1]))


def _entropic_from_absorption(g: Game, law, player, base, rho) -> float:
    mass, stall = law
    atoms = [(float(g.payoff[t][player]), q) for t, q in mass.items() if q > 0]
    if stall > 0:
        atoms.append((0.0, stall))
    if rho == 0:
        return math.fsum(x * q for x, q in atoms)
    lb = log_base(base)
    r = float(rho)
    logs = [-r * x * lb + math.log(q) for x, q in atoms]
    top = max(logs)
    return -(top + math.log(math.fsum(math.exp(e - top) for e in logs))) / (r * lb)


def mdp_best_expectation(g: Game, rows: dict, player, reward: dict, tol=1e-9, max_iter=10**6):
    """Best expected terminal reward for ``player`` against fixed stationary others.

    Value iteration from zero on non-terminal vertices (non-termination pays 0).
    Returns ``(value, iterations)``; raises NonConvergenceError past the cap.
    """
    verts = [v for v in g.vertices if v not in g.terminals]
    x = {v: 0.0 for v in verts}
    x.update(reward)
    own = [v for v in verts if g.owner[v] == player]
    rest = [(v, tuple((w, float(p)) for w, p in rows[v])) for v in verts if g.owner[v] != player]
    eps = tol * 1e-3
    for it in range(1, max_iter + 1):
        delta = 0.0
        for v in own:
            new = max(x[w] for w in g.edges[v])
            delta = max(delta, abs(new - x[v]))
            x[v] = new
        for v, row in rest:
            new = math.fsum(p * x[w] for w, p in row)
            delta = max(delta, abs(new - x[v]))
            x[v] = new
        if delta <= eps:
            return x[g.initial], it
    raise NonConvergenceError(f"value iteration did not converge within {max_iter} sweeps")


def verify_stationary_erse(g: Game, sigma, base, rhos: Mapping, box: ConstraintBox | None = None,
                           tol: float = 1e-9, max_iter: int = 10**6) -> ErReport:
    """Entropic-risk equilibrium check for a stationary profile with explicit probabilities.

    Comparisons use the modified rewards, divided by ``base^A`` when the
    largest exponent ``A`` is positive so that they stay within [-1, 1];
    ``tol`` applies on that scale. The profile's own value comes from its
    absorption law in log space; the best-deviation value is read back from
    the modified reward and saturates once every ``base^(-rho x)`` is
    negligible next to 1.
    """
    if base != "e" and Fraction(base) <= 1:
        raise ValueError("base must exceed 1")
    rows = _stationary_rows(g, sigma)
    law = absorption(g, rows)
    players, ok, iters = {}, True, 0
    for p in g.players:
        rho = Fraction(rhos[p])
        shift = reward_shift((g.payoff[t][p] for t in g.terminals), base, rho) if rho else 0.0
        reward = transformed_payoffs(g, p, base, rho, shift)
        here = chain_expectation(g, rows, reward)
        best, it = mdp_best_expectation(g, rows, p, reward, tol, max_iter)
        iters = max(iters, it)
        val = _entropic_from_absorption(g, law, p, base, rho)
        bval = best if rho == 0 else invert_modified_reward(best, base, rho, shift)
        players[p] = ErPlayerReport(rho, here, best, val, bval)
        if best > here + tol:
            ok = False
    met = None
    if box is not None:
        met = all(box.lo(p) - tol <= r.value <= box.hi(p) + tol for p, r in players.items())
    return ErReport(players, ok, met, iters)


# ---- JSON ------------------------------------------------------------------

def _parse_moves(raw, where):
    if isinstance(raw, str):
        return ((raw, Fraction(1)),)
    if not isinstance(raw, list) or not raw:
        raise ProfileError(f"bad move list at {where}")
    if all(isinstance(e, str) for e in raw):
        return tuple((w, Fraction(1, len(raw))) for w in raw)
    out = []
    for e in raw:
        if not isinstance(e, dict) or "to" not in e:
            raise ProfileError(f"bad move entry at {where}: {e!r}")
        out.append((e["to"], parse_rational(e["prob"]) if "prob" in e else None))
    if any(p is None for _, p in out):
        if not all(p is None for _, p in out):
            raise ProfileError(f"mixed explicit and implicit probabilities at {where}")
        out = [(w, Fraction(1, len(out))) for w, _ in out]
    return tuple(out)


def profile_from_dict(doc):
    if not isinstance(doc, dict):
        raise ProfileError("strategy document must be an object")
    kind = doc.get("kind")
    if kind == "positional":
        return PositionalProfile(dict(doc["moves"]))
    if kind == "stationary":
        return StationaryProfile({v: _parse_moves(ws, v) for v, ws in doc["moves"].items()})
    if kind == "edgeset":
        sem = doc.get("semantics", STATIONARY_UNIFORM)
        punish = doc.get("punish_on_deviation", sem == COMMIT_ON_FIRST_VISIT)
        return EdgeSetProfile(as_edge_set(tuple(e) for e in doc["support"]), sem, bool(punish))
    if kind == "memory":
        update = {(s, v): t for s, v, t in doc["update"]}
        output = {(s, v): _parse_moves(ws, (s, v)) for s, v, ws in doc["output"]}
        states = tuple(doc["states"])
        if doc["initial"] not in states:
            raise ProfileError("initial memory state not declared")
        for (s, _), t in update.items():
            if s not in states or t not in states:
                raise ProfileError(f"update mentions unknown state {s!r} or {t!r}")
        return FiniteMemoryProfile(states, doc["initial"], update, output)
    raise ProfileError(f"unknown strategy kind {kind!r}")


def _moves_to_json(ws):
    return [{"to": w, "prob": format_rational(p)} for w, p in ws]


def profile_to_dict(sigma, g: Game | None = None) -> dict:
    if isinstance(sigma, PositionalProfile):
        return {"kind": "positional", "moves": dict(sigma.moves)}
    if isinstance(sigma, StationaryProfile):
        return {"kind": "stationary", "moves": {v: _moves_to_json(ws) for v, ws in sigma.moves.items()}}
    if isinstance(sigma, EdgeSetProfile):
        edges = sorted(sigma.support)
        if g is not None:
            edges = [e for e in g.edge_list if e in sigma.support]
        doc = {"kind": "edgeset", "semantics": sigma.semantics, "support": [list(e) for e in edges]}
        if sigma.punish_on_deviation:
            doc["punish_on_deviation"] = True
        return doc
    if isinstance(sigma, FiniteMemoryProfile):
        return {
            "kind": "memory",
            "states": list(sigma.states),
            "initial": sigma.initial,
            "update": [[s, v, t] for (s, v), t in sigma.update.items()],
            "output": [[s, v, _moves_to_json(ws)] for (s, v), ws in sigma.output.items()],
        }
    raise ProfileError(f"unsupported profile type {type(sigma).__name__}")


def load_profile(path):
    with open(path, encoding="utf-8") as fh:
        try:
            return profile_from_dict(json.load(fh))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ProfileError):
                raise
            raise ProfileError(f"malformed strategy document: {exc}") from exc
