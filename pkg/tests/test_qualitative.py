from fractions import Fraction

from hypothesis import given, settings

from gamegen import data_game, small_games
from riskgames.game import OPTIMIST, PESSIMIST, STOCHASTIC, RiskAssignment, reachable
from riskgames.oracle import oracle_adversarial_value
from riskgames.qualitative import (
    RAND,
    adversarial_value,
    adversarial_values,
    committed_positive_payoffs,
    cooperative_almost_sure_termination,
    cooperative_safety,
    game_arena,
    mdp_best_xr,
    positive_attractor,
    stationary_positive_payoffs,
    values_from_payoffs,
)

F = Fraction


def naive_attractor(g, keep, target):
    region = set(target)
    changed = True
    while changed:
        changed = False
        for v in g.vertices:
            if v in region or v in g.terminals:
                continue
            succ = g.successors(v, keep)
            hit = any(w in region for w in succ) if g.owner[v] == STOCHASTIC else all(w in region for w in succ)
            if hit:
                region.add(v)
                changed = True
    return region


def naive_as_termination(g, keep):
    """Greatest Y such that from Y the terminals are reachable while staying in Y."""
    y = set(g.vertices)
    while True:
        z = set(g.terminals)
        grew = True
        while grew:
            grew = False
            for v in y - z:
                succ = g.successors(v, keep)
                if g.owner[v] == STOCHASTIC:
                    ok = all(w in y for w in succ) and any(w in z for w in succ)
                else:
                    ok = any(w in z for w in succ)
                if ok:
                    z.add(v)
                    grew = True
        if z == y:
            return y
        y = z


def test_exit_loop_safety_and_attractor():
    g = data_game("exit_loop")
    assert cooperative_safety(g, g.edge_set, {"t1"}) == {"a", "b", "t2"}
    assert positive_attractor(g, g.edge_set, {"t1"}) == {"t1"}
    assert positive_attractor(g, {("a", "t1"), ("b", "a")}, {"t1"}) == {"a", "b", "t1"}


def test_exit_loop_adversarial_values_are_all_one():
    g = data_game("exit_loop")
    for p in g.players:
        for mode in (OPTIMIST, PESSIMIST):
            assert adversarial_value(g, "a", p, mode) == 1
            assert adversarial_value(g, "b", p, mode) == 1


def test_crossing_values_split_by_mode():
    g = data_game("crossing")
    assert adversarial_value(g, "c", "circle", OPTIMIST) == 2
    assert adversarial_value(g, "c", "circle", PESSIMIST) == 1
    assert adversarial_value(g, "e", "circle", OPTIMIST) == 1
    assert adversarial_value(g, "e", "square", PESSIMIST) == 2


def test_exit_loop_payoff_sets():
    g = data_game("exit_loop")
    full = g.edge_set
    assert stationary_positive_payoffs(g, full) == {(1, 2), (2, 1)}
    assert committed_positive_payoffs(g, full) == {(0, 0), (1, 2), (2, 1)}
    loop = {("a", "b"), ("b", "a")}
    assert stationary_positive_payoffs(g, loop) == {(0, 0)}
    risk = RiskAssignment.uniform(g.players, PESSIMIST)
    assert values_from_payoffs(g, committed_positive_payoffs(g, full), risk) == {"circle": 0, "square": 0}


def test_lottery_choice_mdp_choices():
    g = data_game("lottery_choice")
    arena = game_arena(g, "player")
    assert mdp_best_xr(arena, PESSIMIST) == (F(1), {"b": "t3"})
    assert mdp_best_xr(arena, OPTIMIST) == (F(40), {"b": "c"})
    assert adversarial_value(g, "c", "player", PESSIMIST) == 0


def test_cooperative_termination_on_a_loop():
    g = data_game("exit_loop")
    assert cooperative_almost_sure_termination(g, {("a", "b"), ("b", "a")}) == {"t1", "t2"}
    assert cooperative_almost_sure_termination(g, g.edge_set) == set(g.vertices)


@settings(max_examples=150, deadline=None)
@given(small_games())
def test_attractor_is_complement_of_safety_and_matches_naive(g):
    for t in g.terminals:
        attr = positive_attractor(g, g.edge_set, {t})
        assert attr == set(g.vertices) - cooperative_safety(g, g.edge_set, {t})
        assert attr == naive_attractor(g, g.edge_set, {t})


@settings(max_examples=150, deadline=None)
@given(small_games())
def test_almost_sure_termination_matches_naive(g):
    assert cooperative_almost_sure_termination(g, g.edge_set) == naive_as_termination(g, g.edge_set)


@settings(max_examples=80, deadline=None)
@given(small_games(max_ctrl=3))
def test_adversarial_value_matches_enumeration(g):
    for p in g.players:
        for mode in (OPTIMIST, PESSIMIST):
            vals = adversarial_values(g, p, mode)
            for v in g.vertices:
                assert vals[v] == oracle_adversarial_value(g, v, p, mode)


@settings(max_examples=150, deadline=None)
@given(small_games())
def test_optimist_never_below_pessimist(g):
    for p in g.players:
        lo = adversarial_values(g, p, PESSIMIST)
        hi = adversarial_values(g, p, OPTIMIST)
        assert all(lo[v] <= hi[v] for v in g.vertices)


@settings(max_examples=150, deadline=None)
@given(small_games())
def test_committed_payoffs_extend_stationary_ones(g):
    """Commitment can only add the zero vector: the reachable terminals are the same."""
    st_ = stationary_positive_payoffs(g, g.edge_set)
    co = committed_positive_payoffs(g, g.edge_set)
    assert st_ <= co
    assert co - st_ <= {g.zero_vector}
    terms = reachable(g, g.edge_set, g.initial) & g.terminals
    assert {g.payoff_vector(t) for t in terms} <= st_


def policy_value(g, player, policy, mode):
    """XR value of the Markov chain where ``player`` follows ``policy`` and everyone else randomises."""
    def succ(u):
        return (policy[u],) if g.owner[u] == player else g.edges[u]

    seen, stack = {g.initial}, [g.initial]
    while stack:
        u = stack.pop()
        for w in succ(u):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    live = {t for t in seen if t in g.terminals}
    grew = True
    while grew:
        grew = False
        for u in seen - live:
            if any(w in live for w in succ(u)):
                live.add(u)
                grew = True
    pays = [g.payoff[t][player] for t in seen & g.terminals]
    if live != seen:
        pays.append(Fraction(0))
    return min(pays) if mode == PESSIMIST else max(pays)


@settings(max_examples=200, deadline=None)
@given(small_games())
def test_mdp_policy_attains_reported_value(g):
    for p in g.players:
        arena = game_arena(g, p, others=RAND)
        for mode in (OPTIMIST, PESSIMIST):
            value, policy = mdp_best_xr(arena, mode)
            assert policy_value(g, p, policy, mode) == value
