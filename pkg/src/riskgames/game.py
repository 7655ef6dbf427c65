"""Exact data model for simple stochastic games.

A game is a directed graph whose vertices are owned by a player, by chance
(``stochastic``) or are terminals carrying one rational payoff per player.
Plays that never reach a terminal pay zero to everybody.
"""

from __future__ import annotations

import json
import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping

STOCHASTIC = "stochastic"
TERMINAL = "terminal"
RESERVED_OWNERS = (STOCHASTIC, TERMINAL)

Edge = tuple  # (source, target)


class GameFormatError(ValueError):
    """Raised when a document cannot be turned into a valid game."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class UnreachableVertexWarning(UserWarning):
    pass


def parse_rational(value) -> Fraction:
    """Read ``"p/q"``, ``"p"``, decimals or ints without rounding."""
    if isinstance(value, bool):
        raise ValueError(f"not a number: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        # JSON floats: go through the shortest decimal so "0.1" stays 1/10
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational: {value!r}") from exc
    raise ValueError(f"not a number: {value!r}")


def parse_bound(value, default: float) -> Fraction | float:
    if value is None:
        return default
    if isinstance(value, str) and value.strip().lower() in ("inf", "+inf", "infinity", "+infinity"):
        return math.inf
    if isinstance(value, str) and value.strip().lower() in ("-inf", "-infinity"):
        return -math.inf
    return parse_rational(value)


def format_rational(q) -> str:
    if isinstance(q, float):
        if q == math.inf:
            return "inf"
        if q == -math.inf:
            return "-inf"
        return repr(q)
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True, eq=False)
class Game:
    """Immutable turn-based stochastic game with terminal payoffs.

    ``owner`` maps every vertex to a player name, ``"stochastic"`` or
    ``"terminal"``. ``edges`` keeps successor order as declared, which is the
    order every enumeration and tie-break in the package follows.
    """

    players: tuple
    vertices: tuple
    owner: Mapping
    edges: Mapping
    prob: Mapping
    payoff: Mapping
    initial: str
    meta: Mapping = field(default_factory=dict)

    # ---- derived views -------------------------------------------------
    @cached_property
    def terminals(self) -> frozenset:
        return frozenset(v for v in self.vertices if self.owner[v] == TERMINAL)

    @cached_property
    def stochastic(self) -> frozenset:
        return frozenset(v for v in self.vertices if self.owner[v] == STOCHASTIC)

    @cached_property
    def controlled(self) -> tuple:
        return tuple(v for v in self.vertices if self.owner[v] not in RESERVED_OWNERS)

    @cached_property
    def edge_set(self) -> frozenset:
        return frozenset((u, v) for u in self.vertices for v in self.edges[u])

    @cached_property
    def edge_list(self) -> tuple:
        """All edges in canonical order (vertex order, then successor order)."""
        return tuple((u, v) for u in self.vertices for v in self.edges[u])

    @cached_property
    def index(self) -> dict:
        return {v: k for k, v in enumerate(self.vertices)}

    @cached_property
    def pred(self) -> dict:
        out = {v: [] for v in self.vertices}
        for u in self.vertices:
            for v in self.edges[u]:
                out[v].append(u)
        return {v: tuple(ps) for v, ps in out.items()}

    @cached_property
    def _cache(self) -> dict:
        return {}

    def vertices_of(self, player) -> tuple:
        return tuple(v for v in self.vertices if self.owner[v] == player)

    def is_controlled(self, v) -> bool:
        return self.owner[v] not in RESERVED_OWNERS

    def payoff_vector(self, t) -> tuple:
        return tuple(self.payoff[t][p] for p in self.players)

    @property
    def zero_vector(self) -> tuple:
        return tuple(Fraction(0) for _ in self.players)

    def successors(self, v, keep=None) -> tuple:
        """Successors of ``v`` restricted to ``keep`` (stochastic vertices keep all)."""
        if keep is None or self.owner[v] == STOCHASTIC:
            return self.edges[v]
        return tuple(w for w in self.edges[v] if (v, w) in keep)

    def successor_map(self, keep=None) -> dict:
        return {v: self.successors(v, keep) for v in self.vertices}

    # ---- serialisation -------------------------------------------------
    def to_dict(self) -> dict:
        verts = []
        for v in self.vertices:
            o = self.owner[v]
            if o == TERMINAL:
                verts.append({"id": v, "terminal": {p: format_rational(self.payoff[v][p]) for p in self.players}})
            elif o == STOCHASTIC:
                verts.append({
                    "id": v,
                    "owner": STOCHASTIC,
                    "edges": [{"to": w, "prob": format_rational(self.prob[(v, w)])} for w in self.edges[v]],
                })
            else:
                verts.append({"id": v, "owner": o, "edges": list(self.edges[v])})
        doc = {"players": list(self.players), "initial": self.initial, "vertices": verts}
        if self.meta:
            doc["meta"] = dict(self.meta)
        return doc

    @classmethod
    def from_dict(cls, doc) -> "Game":
        problems = []
        if not isinstance(doc, dict):
            raise GameFormatError("top level must be an object")
        players = doc.get("players")
        if not isinstance(players, list) or not players or not all(isinstance(p, str) for p in players):
            raise GameFormatError("'players' must be a non-empty list of strings")
        if len(set(players)) != len(players):
            problems.append("duplicate player identifiers")
        for p in players:
            if p in RESERVED_OWNERS:
                problems.append(f"player name {p!r} is reserved")
        raw_vertices = doc.get("vertices")
        if not isinstance(raw_vertices, list) or not raw_vertices:
            raise GameFormatError("'vertices' must be a non-empty list")
        initial = doc.get("initial")

        vertices, owner, edges, prob, payoff = [], {}, {}, {}, {}
        for entry in raw_vertices:
            if not isinstance(entry, dict) or not isinstance(entry.get("id"), str):
                problems.append(f"vertex entry without string id: {entry!r}")
                continue
            v = entry["id"]
            if v in owner:
                problems.append(f"duplicate vertex id {v!r}")
                continue
            vertices.append(v)
            if "terminal" in entry:
                owner[v] = TERMINAL
                if entry.get("edges"):
                    problems.append(f"terminal has outgoing edge: {v}")
                edges[v] = ()
                pay = entry["terminal"]
                if not isinstance(pay, dict):
                    problems.append(f"terminal {v}: payoff must be an object")
                    pay = {}
                payoff[v] = {}
                for p, x in pay.items():
                    if p not in players:
                        problems.append(f"terminal {v}: unknown player {p!r}")
                        continue
                    try:
                        payoff[v][p] = parse_rational(x)
                    except ValueError as exc:
                        problems.append(f"terminal {v}: {exc}")
                continue
            o = entry.get("owner")
            if o != STOCHASTIC and o not in players:
                raise GameFormatError(problems + [f"vertex {v}: unknown owner {o!r}"])
            owner[v] = o
            raw_edges = entry.get("edges", [])
            if not isinstance(raw_edges, list):
                problems.append(f"vertex {v}: 'edges' must be a list")
                raw_edges = []
            succ = []
            for e in raw_edges:
                if o == STOCHASTIC:
                    if not isinstance(e, dict) or "to" not in e or "prob" not in e:
                        problems.append(f"stochastic vertex {v}: edges need 'to' and 'prob'")
                        continue
                    w = e["to"]
                    try:
                        q = parse_rational(e["prob"])
                    except ValueError as exc:
                        problems.append(f"stochastic vertex {v}: {exc}")
                        continue
                    prob[(v, w)] = q
                else:
                    w = e["to"] if isinstance(e, dict) else e
                if w in succ:
                    problems.append(f"vertex {v}: duplicate edge to {w}")
                    continue
                succ.append(w)
            edges[v] = tuple(succ)

        meta = doc.get("meta", {})
        game = cls(
            players=tuple(players),
            vertices=tuple(vertices),
            owner=owner,
            edges=edges,
            prob=prob,
            payoff={t: dict(pay) for t, pay in payoff.items()},
            initial=initial,
            meta=meta if isinstance(meta, dict) else {},
        )
        problems.extend(_violations(game))
        if problems:
            raise GameFormatError(problems)
        return game


def _violations(g: Game) -> list:
    out = []
    known = set(g.vertices)
    if g.initial not in known:
        out.append(f"initial vertex {g.initial!r} is not declared")
    for v in g.vertices:
        o = g.owner.get(v)
        succ = g.edges.get(v, ())
        for w in succ:
            if w not in known:
                out.append(f"vertex {v}: edge to undeclared vertex {w!r}")
        if o == TERMINAL:
            if succ:
                out.append(f"terminal has outgoing edge: {v}")
            pay = g.payoff.get(v, {})
            for p in g.players:
                if p not in pay:
                    out.append(f"terminal {v}: missing payoff for player {p}")
            continue
        if not succ:
            out.append(f"vertex {v} has no successor")
        if o == STOCHASTIC:
            total = Fraction(0)
            for w in succ:
                q = g.prob.get((v, w))
                if q is None:
                    out.append(f"stochastic vertex {v}: no probability for edge to {w}")
                    continue
                if q <= 0:
                    out.append(f"stochastic vertex {v}: probability of edge to {w} must be positive, got {format_rational(q)}")
                elif q > 1:
                    out.append(f"stochastic vertex {v}: probability of edge to {w} exceeds 1")
                total += q
            if succ and total != 1:
                out.append(f"stochastic vertex {v}: distribution sums to {format_rational(total)}")
    return out


def validate(g: Game) -> list:
    """Return the list of violated invariants; unreachable vertices only warn."""
    problems = _violations(g)
    if not problems:
        seen = reachable(g, None, g.initial)
        for v in g.vertices:
            if v not in seen:
                warnings.warn(f"vertex {v} is unreachable from {g.initial}", UnreachableVertexWarning, stacklevel=2)
    return problems


def parse_game(text) -> Game:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GameFormatError(f"JSON syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return Game.from_dict(doc)


def serialize_game(g: Game, indent=2) -> str:
    return json.dumps(g.to_dict(), indent=indent)


def load_game(path) -> Game:
    with open(path, encoding="utf-8") as fh:
        return parse_game(fh.read())


# ---- edge sets and graph utilities ------------------------------------------

def as_edge_set(edges: Iterable) -> frozenset:
    return frozenset((u, v) for u, v in edges)


def check_keep(g: Game, keep) -> list:
    """Problems that would make ``keep`` an invalid support for ``g``."""
    out = []
    for u, v in keep:
        if (u, v) not in g.edge_set:
            out.append(f"{u}->{v} is not an edge of the game")
    for v in g.controlled:
        if not any((v, w) in keep for w in g.edges[v]):
            out.append(f"vertex {v} left with no successor")
    for v in g.stochastic:
        for w in g.edges[v]:
            if (v, w) not in keep:
                out.append(f"stochastic vertex {v} lost its edge to {w}")
    return out


def restrict_edges(g: Game, keep) -> Game:
    """Sub-game keeping only the edges in ``keep`` (stochastic edges must all stay)."""
    keep = as_edge_set(keep)
    problems = check_keep(g, keep)
    if problems:
        raise GameFormatError(problems)
    return Game(
        players=g.players,
        vertices=g.vertices,
        owner=g.owner,
        edges={v: g.successors(v, keep) for v in g.vertices},
        prob=g.prob,
        payoff=g.payoff,
        initial=g.initial,
        meta=g.meta,
    )


def reachable(g: Game, keep, start) -> frozenset:
    """Vertices reachable from ``start`` (a vertex or an iterable of vertices)."""
    if isinstance(start, str):
        start = (start,)
    seen = set(start)
    todo = deque(seen)
    while todo:
        u = todo.popleft()
        for w in g.successors(u, keep):
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return frozenset(seen)


def can_reach(g: Game, keep, targets) -> frozenset:
    """Vertices from which some vertex of ``targets`` is reachable."""
    succ = g.successor_map(keep)
    preds = {v: [] for v in g.vertices}
    for u, ws in succ.items():
        for w in ws:
            preds[w].append(u)
    seen = set(targets)
    todo = deque(seen)
    while todo:
        w = todo.popleft()
        for u in preds[w]:
            if u not in seen:
                seen.add(u)
                todo.append(u)
    return frozenset(seen)


# ---- constraint boxes and risk assignments ---------------------------------

@dataclass(frozen=True)
class ConstraintBox:
    """Closed interval per player; missing bounds are infinite."""

    lower: Mapping = field(default_factory=dict)
    upper: Mapping = field(default_factory=dict)

    def lo(self, player):
        return self.lower.get(player, -math.inf)

    def hi(self, player):
        return self.upper.get(player, math.inf)

    def contains(self, values: Mapping) -> bool:
        return all(self.lo(p) <= x <= self.hi(p) for p, x in values.items())

    def to_dict(self) -> dict:
        return {
            "lower": {p: format_rational(x) for p, x in self.lower.items()},
            "upper": {p: format_rational(x) for p, x in self.upper.items()},
        }

    @classmethod
    def from_dict(cls, doc, players=None) -> "ConstraintBox":
        if not isinstance(doc, dict):
            raise GameFormatError("constraints must be an object")
        lower = {p: parse_bound(x, -math.inf) for p, x in (doc.get("lower") or {}).items()}
        upper = {p: parse_bound(x, math.inf) for p, x in (doc.get("upper") or {}).items()}
        box = cls(lower, upper)
        problems = []
        if players is not None:
            for p in list(lower) + list(upper):
                if p not in players:
                    problems.append(f"constraint on unknown player {p!r}")
        for p in set(lower) | set(upper):
            if box.lo(p) > box.hi(p):
                problems.append(f"empty interval for player {p}")
        if problems:
            raise GameFormatError(problems)
        return box

    @classmethod
    def free(cls) -> "ConstraintBox":
        return cls({}, {})


OPTIMIST = "optimist"
PESSIMIST = "pessimist"


@dataclass(frozen=True)
class Entropic:
    rho: Fraction


@dataclass(frozen=True)
class RiskAssignment:
    """Per-player attitude: ``"optimist"``, ``"pessimist"`` or :class:`Entropic`."""

    players: Mapping
    base: object = None  # Fraction > 1, or the string "e"

    def mode(self, player):
        return self.players[player]

    def is_extreme(self) -> bool:
        return all(m in (OPTIMIST, PESSIMIST) for m in self.players.values())

    def rhos(self) -> dict:
        return {p: m.rho for p, m in self.players.items() if isinstance(m, Entropic)}

    @classmethod
    def uniform(cls, players, mode) -> "RiskAssignment":
        return cls({p: mode for p in players})

    def to_dict(self) -> dict:
        out = {}
        for p, m in self.players.items():
            out[p] = {"rho": format_rational(m.rho)} if isinstance(m, Entropic) else m
        doc = {"players": out}
        if self.base is not None:
            doc["base"] = self.base if isinstance(self.base, str) else format_rational(self.base)
        return doc

    @classmethod
    def from_dict(cls, doc, players=None) -> "RiskAssignment":
        if not isinstance(doc, dict) or not isinstance(doc.get("players"), dict):
            raise GameFormatError("risk document needs a 'players' object")
        problems = []
        table = {}
        for p, m in doc["players"].items():
            if m in (OPTIMIST, PESSIMIST):
                table[p] = m
            elif isinstance(m, dict) and "rho" in m:
                table[p] = Entropic(parse_rational(m["rho"]))
            else:
                problems.append(f"player {p}: unknown risk attitude {m!r}")
        base = doc.get("base")
        if base is not None:
            if base != "e":
                base = parse_rational(base)
                if base <= 1:
                    problems.append("base must exceed 1")
        elif any(isinstance(m, Entropic) for m in table.values()):
            problems.append("entropic players need a 'base'")
        if players is not None:
            for p in players:
                if p not in table:
                    problems.append(f"no risk attitude for player {p}")
            for p in table:
                if p not in players:
                    problems.append(f"risk attitude for unknown player {p}")
        if problems:
            raise GameFormatError(problems)
        if players is not None:
            table = {p: table[p] for p in players}
        return cls(table, base)
