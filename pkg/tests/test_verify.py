import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gamegen import DATA, data_game, random_game, random_mixed_risk, random_stationary, rescaled, seeds
from riskgames.game import ConstraintBox, Game, RiskAssignment
from riskgames.oracle import exact_expectation
from riskgames.risk import FinitePayoffDistribution, entropic_risk
from riskgames.verify import (
    COMMIT_ON_FIRST_VISIT,
    STATIONARY_UNIFORM,
    EdgeSetProfile,
    FiniteMemoryProfile,
    NonConvergenceError,
    PositionalProfile,
    ProfileError,
    StationaryProfile,
    _stationary_rows,
    best_deviation,
    chain_expectation,
    load_profile,
    memory_bound,
    positive_payoffs,
    profile_from_dict,
    profile_to_dict,
    verify_profile,
    verify_stationary_erse,
    xr_of_profile,
)

PESS = RiskAssignment.uniform(("circle", "square"), "pessimist")
OPT = RiskAssignment.uniform(("circle", "square"), "optimist")
BOX11 = ConstraintBox({"circle": 1, "square": 1}, {"circle": 1, "square": 1})


def test_common_coin_profile_profile():
    g = data_game("common_coin")
    report = verify_profile(g, load_profile(DATA / "common_coin_profile.json"), PESS, BOX11)
    assert report.is_equilibrium and report.constraints_met
    assert report.values == {"circle": 1, "square": 1}
    assert (report.certificate_size, report.memory_bound) == (4, 23)
    assert report.bound_ok


def test_crossing_profile_profile():
    g = data_game("crossing")
    report = verify_profile(g, load_profile(DATA / "crossing_profile.json"), PESS, BOX11)
    assert report.accepted
    assert report.values == {"circle": 1, "square": 1}
    assert report.certificate_size == 5


def test_crossing_naive_profile_rejected():
    g = data_game("crossing")
    report = verify_profile(g, load_profile(DATA / "crossing_naive.json"), PESS, BOX11)
    assert not report.is_equilibrium
    assert report.constraints_met
    assert {p: r.best_deviation for p, r in report.players.items()} == {"circle": 2, "square": 2}


def test_exit_loop_uniform_profile_loses_to_square():
    g = data_game("exit_loop")
    sigma = StationaryProfile.uniform(g, g.edge_set)
    assert xr_of_profile(g, sigma, PESS) == {"circle": 1, "square": 1}
    value, witness = best_deviation(g, sigma, "square", PESS)
    assert value == 2
    assert witness[("b", None)] == ("a", None)  # product states: (vertex, memory)


def test_positional_and_memory_views_agree():
    g = data_game("exit_loop")
    sigma = PositionalProfile({"a": "t1", "b": "t2"})
    as_memory = FiniteMemoryProfile.from_positional(sigma, g)
    assert positive_payoffs(g, sigma) == positive_payoffs(g, as_memory) == {(1, 2)}
    r1, r2 = verify_profile(g, sigma, PESS), verify_profile(g, as_memory, PESS)
    assert r1.is_equilibrium == r2.is_equilibrium
    assert r1.values == r2.values


def test_memory_bound_formula():
    g = data_game("crossing")
    n, p = len(g.vertices), len(g.players)
    assert memory_bound(g) == 3 * n * p - 2 * n + p + 1 == 35


def test_edgeset_certificate_reports_failures():
    g = data_game("exit_loop")
    pi = EdgeSetProfile(g.edge_set, COMMIT_ON_FIRST_VISIT, True)
    report = verify_profile(g, pi, OPT, ConstraintBox({}, {"circle": 1}))
    assert not report.accepted
    assert any(f.startswith("(a)") for f in report.failures)
    good = EdgeSetProfile(frozenset({("a", "b"), ("a", "t1"), ("b", "a")}), COMMIT_ON_FIRST_VISIT, True)
    assert verify_profile(g, good, OPT, ConstraintBox({}, {"circle": 1})).accepted


def test_edgeset_certificate_needs_optimists():
    g = data_game("exit_loop")
    with pytest.raises(ValueError):
        verify_profile(g, EdgeSetProfile(g.edge_set, COMMIT_ON_FIRST_VISIT, True), PESS)


def test_profile_json_round_trips():
    g = data_game("crossing")
    for name in ("common_coin_profile", "crossing_profile", "crossing_naive"):
        sigma = load_profile(DATA / f"{name}.json")
        assert profile_from_dict(json.loads(json.dumps(profile_to_dict(sigma, g)))) == sigma
    pi = EdgeSetProfile(g.edge_set, STATIONARY_UNIFORM, True)
    assert profile_from_dict(profile_to_dict(pi, g)) == pi


def test_stationary_shorthands():
    sigma = profile_from_dict({"kind": "stationary", "moves": {"a": ["b", "t1"], "b": "t2"}})
    assert sigma.moves["a"] == (("b", Fraction(1, 2)), ("t1", Fraction(1, 2)))
    assert sigma.moves["b"] == (("t2", Fraction(1)),)
    with pytest.raises(ProfileError):
        profile_from_dict({"kind": "stationary", "moves": {"a": [{"to": "b", "prob": "1"}, {"to": "t1"}]}})
    with pytest.raises(ProfileError):
        profile_from_dict({"kind": "nonsense"})


def test_profile_must_use_existing_edges():
    g = data_game("exit_loop")
    with pytest.raises(ProfileError):
        verify_profile(g, PositionalProfile({"a": "t2", "b": "t2"}), PESS)


# ---- entropic ---------------------------------------------------------------

def test_lottery_choice_entropic_values():
    g = data_game("lottery_choice")
    blue = PositionalProfile({"b": "c"})
    red = PositionalProfile({"b": "t3"})
    for sigma in (blue, red):
        rep = verify_stationary_erse(g, sigma, "e", {"player": 0})
        assert rep.players["player"].value == pytest.approx(1.0, abs=1e-12)
    rep = verify_stationary_erse(g, blue, "e", {"player": 1})
    assert rep.players["player"].value == pytest.approx(0.025317807984289875, rel=1e-9)
    assert rep.players["player"].best_value == pytest.approx(1.0, abs=1e-9)
    assert not rep.is_equilibrium
    assert verify_stationary_erse(g, red, "e", {"player": 1}).is_equilibrium
    assert verify_stationary_erse(g, blue, "e", {"player": -1}).is_equilibrium
    assert verify_stationary_erse(g, blue, "e", {"player": 50}).players["player"].value == pytest.approx(0.0, abs=0.01)
    assert verify_stationary_erse(g, blue, "e", {"player": -50}).players["player"].value == pytest.approx(40, abs=0.1)


def test_value_iteration_cap():
    g = data_game("lottery_choice")
    with pytest.raises(NonConvergenceError):
        verify_stationary_erse(g, PositionalProfile({"b": "c"}), "e", {"player": 1}, max_iter=2)


def terminal_distribution(g, rows):
    """Exact law of the payoff vector, non-termination included as the zero vector."""
    mass = {}
    for t in g.terminals:
        indicator = {u: {p: Fraction(int(u == t)) for p in g.players} for u in g.terminals}
        h = Game(g.players, g.vertices, g.owner, g.edges, g.prob, indicator, g.initial)
        q = exact_expectation(h, rows, g.players[0])
        if q:
            mass[t] = q
    rest = 1 - sum(mass.values())
    return mass, rest


@settings(max_examples=60, deadline=None)
@given(seeds, st.sampled_from([Fraction(2), Fraction(3, 2), "e"]),
       st.sampled_from([Fraction(-20), Fraction(-1), Fraction(-1, 2), Fraction(1, 2), Fraction(1), Fraction(20)]))
def test_entropic_value_matches_exact_distribution(seed, base, rho):
    g = random_game(seed, n_ctrl=3, n_stoch=2, fractional=True, nonneg=False, payoff_range=20)
    sigma = random_stationary(seed, g)
    mass, rest = terminal_distribution(g, _stationary_rows(g, sigma))
    report = verify_stationary_erse(g, sigma, base, {p: rho for p in g.players})
    for p in g.players:
        atoms = [(g.payoff[t][p], q) for t, q in mass.items()] + ([(0, rest)] if rest else [])
        expected = entropic_risk(FinitePayoffDistribution(tuple(atoms)), base, rho)
        assert report.players[p].value == pytest.approx(expected, rel=1e-7, abs=1e-7)


@settings(max_examples=80, deadline=None)
@given(seeds)
def test_chain_expectation_matches_exact_solve(seed):
    g = random_game(seed, n_ctrl=4, n_stoch=2, fractional=True, nonneg=False)
    sigma = random_stationary(seed, g)
    rows = _stationary_rows(g, sigma)
    for p in g.players:
        reward = {t: float(g.payoff[t][p]) for t in g.terminals}
        assert chain_expectation(g, rows, reward) == pytest.approx(float(exact_expectation(g, rows, p)), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_xr_verdicts_ignore_probability_values(seed):
    g = random_game(seed, n_ctrl=4, n_stoch=2, n_players=3)
    risk = random_mixed_risk(seed, g)
    sigma = random_stationary(seed, g)
    a = verify_profile(g, sigma, risk)
    b = verify_profile(g, rescaled(sigma, seed + 1), risk)
    assert a.values == b.values
    assert a.is_equilibrium == b.is_equilibrium
    assert {p: r.best_deviation for p, r in a.players.items()} == {p: r.best_deviation for p, r in b.players.items()}
