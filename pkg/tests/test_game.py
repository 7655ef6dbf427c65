import json
import math
import warnings
from fractions import Fraction

import pytest
from hypothesis import given, settings

from gamegen import DATA, data_game, small_games
from riskgames.game import (
    ConstraintBox,
    Entropic,
    Game,
    GameFormatError,
    RiskAssignment,
    UnreachableVertexWarning,
    check_keep,
    can_reach,
    parse_bound,
    parse_game,
    parse_rational,
    reachable,
    restrict_edges,
    serialize_game,
    validate,
)


def doc_with(*vertices, players=("A",), initial="a"):
    return {"players": list(players), "initial": initial, "vertices": list(vertices)}


def test_parse_rational_forms():
    assert parse_rational("3/4") == Fraction(3, 4)
    assert parse_rational(2) == 2
    assert parse_rational("-1.25") == Fraction(-5, 4)
    with pytest.raises(ValueError):
        parse_rational("nope")


def test_parse_bound_accepts_infinity():
    assert parse_bound("inf", 0) == math.inf
    assert parse_bound("-inf", 0) == -math.inf
    assert parse_bound(None, -math.inf) == -math.inf


def test_exit_loop_loads_with_canonical_edges():
    g = data_game("exit_loop")
    assert g.players == ("circle", "square")
    assert g.terminals == {"t1", "t2"}
    assert g.edge_list == (("a", "b"), ("a", "t1"), ("b", "a"), ("b", "t2"))
    assert g.payoff_vector("t1") == (1, 2)
    assert validate(g) == []


def test_stochastic_vertex_keeps_all_edges_under_restriction():
    g = data_game("common_coin")
    assert g.successors("c", keep=frozenset()) == ("a", "b")
    assert g.successors("a", keep={("a", "t1")}) == ("t1",)


def test_terminal_with_edge_rejected():
    doc = doc_with(
        {"id": "a", "owner": "A", "edges": ["t"]},
        {"id": "t", "terminal": {"A": "1"}, "edges": ["a"]},
    )
    with pytest.raises(GameFormatError) as err:
        Game.from_dict(doc)
    assert "terminal has outgoing edge: t" in err.value.problems


def test_bad_distribution_rejected():
    doc = doc_with(
        {"id": "a", "owner": "stochastic", "edges": [{"to": "t", "prob": "1/3"}, {"to": "u", "prob": "1/3"}]},
        {"id": "t", "terminal": {"A": "1"}},
        {"id": "u", "terminal": {"A": "0"}},
    )
    with pytest.raises(GameFormatError) as err:
        Game.from_dict(doc)
    assert any("sums to 2/3" in p for p in err.value.problems)


def test_dead_end_and_unknown_target_rejected():
    doc = doc_with({"id": "a", "owner": "A", "edges": []}, {"id": "t", "terminal": {"A": "1"}})
    with pytest.raises(GameFormatError, match="no successor"):
        Game.from_dict(doc)
    doc = doc_with({"id": "a", "owner": "A", "edges": ["zz"]})
    with pytest.raises(GameFormatError, match="undeclared"):
        Game.from_dict(doc)


def test_unknown_owner_and_missing_payoff():
    with pytest.raises(GameFormatError, match="unknown owner"):
        Game.from_dict(doc_with({"id": "a", "owner": "B", "edges": ["a"]}))
    doc = doc_with({"id": "a", "owner": "A", "edges": ["t"]}, {"id": "t", "terminal": {}})
    with pytest.raises(GameFormatError, match="missing payoff"):
        Game.from_dict(doc)


def test_json_syntax_error_reports_position():
    with pytest.raises(GameFormatError, match="line 1"):
        parse_game('{"players": [')


def test_unreachable_vertex_only_warns():
    g = Game.from_dict(doc_with(
        {"id": "a", "owner": "A", "edges": ["t"]},
        {"id": "b", "owner": "A", "edges": ["t"]},
        {"id": "t", "terminal": {"A": "1"}},
    ))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        assert validate(g) == []
    assert any(issubclass(w.category, UnreachableVertexWarning) for w in caught)


def test_reachability_helpers():
    g = data_game("exit_loop")
    keep = {("a", "b"), ("b", "a")}
    assert reachable(g, keep, "a") == {"a", "b"}
    assert can_reach(g, keep, {"t1"}) == {"t1"}
    assert can_reach(g, None, {"t1"}) == {"t1", "a", "b"}
    assert check_keep(g, keep) == []
    assert check_keep(g, {("a", "b")})  # b is left without an edge
    h = restrict_edges(g, {("a", "t1"), ("b", "t2")})
    assert h.edges["a"] == ("t1",)


def test_constraint_box_round_trip():
    box = ConstraintBox.from_dict({"lower": {"circle": "1"}, "upper": {"circle": "2", "square": "inf"}},
                                  players=("circle", "square"))
    assert box.lo("square") == -math.inf
    assert box.contains({"circle": Fraction(3, 2), "square": 7})
    assert not box.contains({"circle": 3})
    with pytest.raises(GameFormatError):
        ConstraintBox.from_dict({"lower": {"circle": "3"}, "upper": {"circle": "2"}})
    with pytest.raises(GameFormatError):
        ConstraintBox.from_dict({"lower": {"nobody": "0"}}, players=("circle",))


def test_risk_assignment_parsing():
    r = RiskAssignment.from_dict({"players": {"A": {"rho": "-1/2"}, "B": "pessimist"}, "base": "3/2"})
    assert r.mode("A") == Entropic(Fraction(-1, 2))
    assert not r.is_extreme()
    assert r.rhos() == {"A": Fraction(-1, 2)}
    assert RiskAssignment.from_dict(r.to_dict()) == r
    with pytest.raises(GameFormatError):
        RiskAssignment.from_dict({"players": {"A": {"rho": "1"}}})
    with pytest.raises(GameFormatError):
        RiskAssignment.from_dict({"players": {"A": "gambler"}})


def test_data_files_all_validate():
    for name in ("lottery_choice", "exit_loop", "common_coin", "crossing"):
        assert validate(data_game(name)) == []
    assert json.loads((DATA / "exit_loop.json").read_text())["initial"] == "a"


@settings(max_examples=60, deadline=None)
@given(small_games())
def test_serialize_round_trip(g):
    h = parse_game(serialize_game(g))
    assert h.to_dict() == g.to_dict()
    assert h.edge_list == g.edge_list
    assert all(h.payoff[t] == g.payoff[t] for t in g.terminals)
