"""Instance transformers: entropic-to-expectation payoffs, hardness gadgets, SMT-LIB export."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .game import (
    OPTIMIST,
    PESSIMIST,
    STOCHASTIC,
    TERMINAL,
    ConstraintBox,
    Game,
    GameFormatError,
    RiskAssignment,
    can_reach,
    check_keep,
    format_rational,
    reachable,
)
from .qualitative import MAX, RAND, TERM, Arena, sure_safe
from .risk import modified_reward

# ---- CNF -------------------------------------------------------------------


@dataclass(frozen=True)
class CnfFormula:
    n_vars: int
    clauses: tuple  # tuples of three non-zero signed variable indices

    def __post_init__(self):
        clauses = tuple(tuple(int(x) for x in c) for c in self.clauses)
        for c in clauses:
            if len(c) != 3:
                raise ValueError(f"clause {c} does not have three literals")
            if any(x == 0 or abs(x) > self.n_vars for x in c):
                raise ValueError(f"clause {c} mentions a variable outside 1..{self.n_vars}")
        object.__setattr__(self, "clauses", clauses)


def parse_dimacs(text: str) -> CnfFormula:
    """Read DIMACS CNF; shorter clauses are padded by repeating their last literal."""
    n_vars, clauses, current = None, [], []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad problem line: {raw!r}")
            n_vars = int(parts[2])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                if not current:
                    raise ValueError("empty clause")
                if len(current) > 3:
                    raise ValueError(f"clause {current} has more than three literals")
                while len(current) < 3:
                    current.append(current[-1])
                clauses.append(tuple(current))
                current = []
            else:
                current.append(lit)
    if current:
        raise ValueError("last clause is not terminated by 0")
    if n_vars is None:
        raise ValueError("missing 'p cnf' line")
    return CnfFormula(n_vars, tuple(clauses))


def format_dimacs(cnf: CnfFormula) -> str:
    lines = [f"p cnf {cnf.n_vars} {len(cnf.clauses)}"]
    lines += [" ".join(str(x) for x in c) + " 0" for c in cnf.clauses]
    return "\n".join(lines) + "\n"


# ---- entropic to expectation ---------------------------------------------


def _check_rhos(g: Game, rhos):
    missing = [p for p in g.players if p not in rhos]
    if missing:
        raise ValueError(f"no risk parameter for {', '.join(missing)}")
    return {p: Fraction(rhos[p]) for p in g.players}


def er_to_nash(g: Game, base, rhos) -> Game:
    """Same game with payoffs replaced by their modified rewards (binary64, as decimal strings).

    Players with parameter 0 keep their payoffs.
    """
    rhos = _check_rhos(g, rhos)
    payoff = {}
    for t in g.terminals:
        row = {}
        for p in g.players:
            x = g.payoff[t][p]
            row[p] = x if rhos[p] == 0 else Fraction(repr(modified_reward(x, base, rhos[p])))
        payoff[t] = row
    meta = dict(g.meta)
    meta["provenance"] = (
        "payoffs are binary64 modified rewards (1 - base^(-rho*x) for rho > 0, base^(-rho*x) - 1 for rho < 0) "
        f"with base {base if base == 'e' else format_rational(base)} and rho "
        + ", ".join(f"{p}={format_rational(r)}" for p, r in rhos.items())
    )
    return Game(g.players, g.vertices, g.owner, g.edges, g.prob, payoff, g.initial, meta)


def er_to_nash_symbolic(g: Game, base, rhos) -> dict:
    """Transformed payoffs as exact ``sign * (base^exponent - 1)`` records."""
    rhos = _check_rhos(g, rhos)
    out = {}
    for t in sorted(g.terminals, key=g.index.get):
        row = {}
        for p in g.players:
            x, r = g.payoff[t][p], rhos[p]
            if r == 0:
                row[p] = {"identity": format_rational(x)}
            else:
                row[p] = {
                    "base": base if base == "e" else format_rational(base),
                    "exponent": format_rational(-r * x),
                    "sign": -1 if r > 0 else 1,
                }
        out[t] = row
    return out


# ---- 3SAT ------------------------------------------------------------------


def _lit(x: int) -> str:
    return f"x{x}" if x > 0 else f"not_x{-x}"


def gen_threesat_game(cnf: CnfFormula):
    """Game, all-pessimist risk and box whose constrained equilibria encode satisfiability."""
    n, m = cnf.n_vars, len(cnf.clauses)
    if n < 1 or m < 1:
        raise ValueError("need at least one variable and one clause")
    lits = [l for i in range(1, n + 1) for l in (i, -i)]
    players = []
    for i in range(1, n + 1):
        players += [f"circle_x{i}", f"circle_not_x{i}", f"square_x{i}", f"square_not_x{i}"]
    players += [f"clause{j}" for j in range(1, m + 1)] + ["diamond"]
    half = "1/2"
    verts = []
    for i in range(1, n + 1):
        nxt = f"o_x{i + 1}" if i < n else "s_r"
        verts.append({"id": f"o_x{i}", "owner": f"circle_x{i}", "edges": [f"s_x{i}", f"o_not_x{i}"]})
        verts.append({"id": f"o_not_x{i}", "owner": f"circle_not_x{i}", "edges": [f"s_not_x{i}", "t_dagger"]})
        for l in (i, -i):
            verts.append({"id": f"s_{_lit(l)}", "owner": STOCHASTIC,
                          "edges": [{"to": f"f_{_lit(l)}", "prob": half}, {"to": f"q_{_lit(-l)}", "prob": half}]})
        for l in (i, -i):
            verts.append({"id": f"q_{_lit(l)}", "owner": f"square_{_lit(l)}", "edges": ["t_diamond", nxt]})
    share = format_rational(Fraction(1, m))
    verts.append({"id": "s_r", "owner": STOCHASTIC, "edges": [{"to": f"C{j}", "prob": share} for j in range(1, m + 1)]})
    for j, clause in enumerate(cnf.clauses, start=1):
        targets = list(dict.fromkeys(f"t_{_lit(l)}" for l in clause))
        verts.append({"id": f"C{j}", "owner": f"clause{j}", "edges": targets})

    def pay(special=None, value=None, default="2"):
        row = {p: default for p in players}
        if special is not None:
            row[special] = value
        return row

    for l in lits:
        verts.append({"id": f"t_{_lit(l)}", "terminal": pay(f"square_{_lit(l)}", "1")})
        verts.append({"id": f"f_{_lit(l)}", "terminal": pay(f"circle_{_lit(l)}", "1")})
    verts.append({"id": "t_diamond", "terminal": pay("diamond", "0")})
    verts.append({"id": "t_dagger", "terminal": pay(default="0")})
    game = Game.from_dict({"players": players, "initial": "o_x1", "vertices": verts})
    risk = RiskAssignment.uniform(players, PESSIMIST)
    lower = {p: Fraction(0) for p in players}
    lower["diamond"] = Fraction(2)
    box = ConstraintBox(lower, {p: Fraction(2) for p in players})
    return game, risk, box


# ---- reachability games ------------------------------------------------------


@dataclass(frozen=True)
class ReachabilityArena:
    players: tuple  # (reacher, avoider)
    vertices: tuple
    owner: dict
    edges: dict
    initial: str
    target: frozenset

    @classmethod
    def from_dict(cls, doc) -> "ReachabilityArena":
        problems = []
        players = doc.get("players")
        if not isinstance(players, list) or len(players) != 2:
            raise GameFormatError("a reachability arena has exactly two players")
        target = doc.get("target")
        if not isinstance(target, list) or not target:
            raise GameFormatError("'target' must be a non-empty list")
        verts, owner, edges = [], {}, {}
        for e in doc.get("vertices", []):
            v = e.get("id")
            if v in owner:
                problems.append(f"duplicate vertex {v!r}")
                continue
            o = e.get("owner")
            if o not in players:
                problems.append(f"vertex {v}: owner must be one of the two players")
            verts.append(v)
            owner[v] = o
            edges[v] = tuple(x["to"] if isinstance(x, dict) else x for x in e.get("edges", []))
        known = set(verts)
        for v in verts:
            for w in edges[v]:
                if w not in known:
                    problems.append(f"vertex {v}: edge to undeclared vertex {w!r}")
            if v not in target and not edges[v]:
                problems.append(f"vertex {v} has no successor")
        for t in target:
            if t not in known:
                problems.append(f"target {t!r} is not a vertex")
        if doc.get("initial") not in known:
            problems.append("initial vertex is not declared")
        if problems:
            raise GameFormatError(problems)
        return cls(tuple(players), tuple(verts), owner, edges, doc["initial"], frozenset(target))

    def to_dict(self) -> dict:
        return {
            "players": list(self.players),
            "initial": self.initial,
            "target": [v for v in self.vertices if v in self.target],
            "vertices": [{"id": v, "owner": self.owner[v], "edges": list(self.edges[v])} for v in self.vertices],
        }


def gen_reachability_instance(arena: ReachabilityArena):
    """Game where the reacher gets 1 and the avoider -1 at targets; the box pins (1, -1)."""
    reacher, avoider = arena.players
    verts = []
    for v in arena.vertices:
        if v in arena.target:
            verts.append({"id": v, "terminal": {reacher: "1", avoider: "-1"}})
        else:
            verts.append({"id": v, "owner": arena.owner[v], "edges": list(arena.edges[v])})
    game = Game.from_dict({"players": list(arena.players), "initial": arena.initial, "vertices": verts})
    risk = RiskAssignment.uniform(arena.players, OPTIMIST)
    box = ConstraintBox({reacher: Fraction(1), avoider: Fraction(-1)}, {reacher: Fraction(1), avoider: Fraction(-1)})
    return game, risk, box


# ---- SMT-LIB export ----------------------------------------------------------


def _num(q) -> str:
    q = Fraction(q)
    mag = f"{abs(q.numerator)}.0" if q.denominator == 1 else f"(/ {abs(q.numerator)}.0 {q.denominator}.0)"
    return f"(- {mag})" if q < 0 else mag


class _Script:
    def __init__(self):
        self.decls, self.asserts, self.aux = [], [], 0
        self._powers = {}

    def var(self, name):
        self.decls.append(f"(declare-fun {name} () Real)")
        return name

    def new_aux(self):
        self.aux += 1
        return self.var(f"aux{self.aux}")

    def add(self, formula):
        self.asserts.append(f"(assert {formula})")

    def _int_power(self, root: str, k: int) -> str:
        """Variable equal to ``root ** k`` through a repeated-squaring chain."""
        squares = [root]
        for _ in range(k.bit_length() - 1):
            s = self.new_aux()
            self.add(f"(= {s} (* {squares[-1]} {squares[-1]}))")
            squares.append(s)
        picked = [squares[j] for j in range(k.bit_length()) if k >> j & 1]
        acc = picked[0]
        for s in picked[1:]:
            nxt = self.new_aux()
            self.add(f"(= {nxt} (* {acc} {s}))")
            acc = nxt
        return acc

    def power(self, base, exponent: Fraction) -> str:
        """Term equal to ``base ** exponent`` (exact rational base, or Euler's number)."""
        if exponent == 0:
            return "1.0"
        if base == "e":
            return f"(exp {_num(exponent)})"
        key = (Fraction(base), exponent)
        if key in self._powers:
            return self._powers[key]
        b = Fraction(base) if exponent > 0 else 1 / Fraction(base)
        c, d = abs(exponent.numerator), exponent.denominator
        root = self.new_aux()
        self.add(f"(= {root} {_num(b)})")
        y = self._int_power(root, c)
        if d > 1:
            z = self.new_aux()
            self.add(f"(> {z} 0.0)")
            self.add(f"(= {self._int_power(z, d)} {y})")
            y = z
        self._powers[key] = y
        return y

    def reward(self, x, base, rho) -> str:
        """Modified reward of ``x`` as a term."""
        t = self.power(base, -rho * Fraction(x))
        if t == "1.0":
            return "0.0"
        return f"(- 1.0 {t})" if rho > 0 else f"(- {t} 1.0)"


def _player_safe_region(g: Game, player, support) -> set:
    """Vertices from which ``player`` (any edge) keeps the play away from terminals
    surely while the others follow ``support``."""
    idx = g.index
    kind, succ = [], []
    for v in g.vertices:
        o = g.owner[v]
        if o == TERMINAL:
            kind.append(TERM)
        elif o == player:
            kind.append(MAX)
        else:
            kind.append(RAND)
        ws = g.edges[v] if o in (player, STOCHASTIC) else g.successors(v, support)
        succ.append(tuple(idx[w] for w in ws))
    arena = Arena(kind, succ, [None] * len(kind), list(g.vertices), idx[g.initial])
    region, _ = sure_safe(arena, [idx[t] for t in g.terminals], existential=(MAX,))
    return {g.vertices[s] for s in region}


def emit_etr(g: Game, base, rhos, support, box: ConstraintBox | None = None) -> str:
    """SMT-LIB v2 script satisfiable iff some stationary profile with exactly ``support``
    is an entropic-risk equilibrium whose values lie in ``box``."""
    rhos = _check_rhos(g, rhos)
    zero = [p for p, r in rhos.items() if r == 0]
    if zero:
        raise ValueError(
            f"rho = 0 for {', '.join(zero)} requests plain expectation; "
            "use er_to_nash and expectation (Nash) tooling instead"
        )
    if base != "e" and Fraction(base) <= 1:
        raise ValueError("base must exceed 1")
    support = frozenset(tuple(e) for e in support)
    problems = check_keep(g, support)
    if problems:
        raise ValueError("invalid support: " + "; ".join(problems))
    box = box or ConstraintBox.free()
    vid = g.index
    pid = {p: k for k, p in enumerate(g.players)}
    sc = _Script()

    def p_(u, w):
        return f"p_{vid[u]}_{vid[w]}"

    def r_(i, v):
        return f"r_{pid[i]}_{vid[v]}"

    def m_(i, v):
        return f"m_{pid[i]}_{vid[v]}"

    for u, w in g.edge_list:
        sc.var(p_(u, w))
    for i in g.players:
        for v in g.vertices:
            sc.var(r_(i, v))
            sc.var(m_(i, v))

    # strategy profile with the given support
    for u, w in g.edge_list:
        p = p_(u, w)
        sc.add(f"(and (<= 0.0 {p}) (<= {p} 1.0))")
        if g.owner[u] == STOCHASTIC:
            sc.add(f"(= {p} {_num(g.prob[(u, w)])})")
        elif (u, w) in support:
            sc.add(f"(> {p} 0.0)")
        else:
            sc.add(f"(= {p} 0.0)")
    for u in g.controlled:
        terms = " ".join(p_(u, w) for w in g.edges[u])
        sc.add(f"(= (+ {terms} 0.0) 1.0)")

    seen = reachable(g, support, g.initial)
    reach_terms = seen & g.terminals
    productive = can_reach(g, support, reach_terms)
    v0 = g.initial

    def mix(u, var):
        parts = " ".join(f"(* {p_(u, w)} {var(w)})" for w in g.edges[u])
        return f"(+ {parts} 0.0)"

    for i in g.players:
        rho = rhos[i]
        rewards = {t: sc.reward(g.payoff[t][i], base, rho) for t in sorted(g.terminals, key=vid.get)}
        # value of the induced Markov chain
        for v in g.vertices:
            if v in reach_terms:
                sc.add(f"(= {r_(i, v)} {rewards[v]})")
            elif v not in productive or v in g.terminals:
                sc.add(f"(= {r_(i, v)} 0.0)")
            else:
                sc.add(f"(= {r_(i, v)} {mix(v, lambda w: r_(i, w))})")
        # upper bound on the value of every deviation
        safe = _player_safe_region(g, i, support)
        for v in g.vertices:
            if v in g.terminals:
                sc.add(f"(= {m_(i, v)} {rewards[v]})")
                continue
            if g.owner[v] == i:
                for w in g.edges[v]:
                    sc.add(f"(>= {m_(i, v)} {m_(i, w)})")
            else:
                sc.add(f"(= {m_(i, v)} {mix(v, lambda w: m_(i, w))})")
            if v in safe:
                sc.add(f"(>= {m_(i, v)} 0.0)")
        lo, hi = box.lo(i), box.hi(i)
        if lo != -math.inf:
            sc.add(f"(>= {r_(i, v0)} {sc.reward(lo, base, rho)})")
        if hi != math.inf:
            sc.add(f"(<= {r_(i, v0)} {sc.reward(hi, base, rho)})")
        sc.add(f"(<= {m_(i, v0)} {r_(i, v0)})")

    header = [
        "; stationary entropic-risk equilibrium with a fixed support",
        f"; base {'e (uses exp; outside QF_NRA, needs a solver with exponentials)' if base == 'e' else format_rational(base)}",
        "; rho: " + ", ".join(f"{p}={format_rational(r)}" for p, r in rhos.items()),
        "; p_u_w: probability of edge u->w; r_i_v: expected modified reward of player i from v;",
        "; m_i_v: upper bound on what player i can reach from v by deviating",
        "; vertices that reach no terminal under the support get r = 0, the modified reward of 0;",
        "; m is forced non-negative where the player can avoid every terminal forever",
        "; box bounds are compared in modified-reward space",
        f"; auxiliary variables: {sc.aux}",
        "; vertices: " + " ".join(f"{k}={v}" for v, k in vid.items()),
        "; players: " + " ".join(f"{k}={p}" for p, k in pid.items()),
    ]
    logic = "(set-logic ALL)" if base == "e" else "(set-logic QF_NRA)"
    lines = header + [logic] + sc.decls + sc.asserts + ["(check-sat)", "(exit)"]
    return "\n".join(lines) + "\n"
