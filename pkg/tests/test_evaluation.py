from fractions import Fraction

import pytest

from helpers import coin_flip, matching_pennies, one_decision, payoff_equivalence
from tpigame.abstraction import abstract_imperfect_recall
from tpigame.conversion import convert_basic, convert_folded, convert_pruned
from tpigame.evaluation import (BudgetExceeded, ImperfectRecallResponder,
                                MissingInfosetPolicy, ProvenanceMissing, best_response,
                                expected_utility, exploitability, has_perfect_recall, map_rho,
                                map_rho_mixed, map_sigma, opponent_plan_to_tpi, plan_profile,
                                reduced_plans, tmecor_bruteforce, tree_stats, uniform_profile)
from tpigame.game import GameBuilder
from tpigame.generators import builtin_examples, generate


def test_expected_utility_cases():
    assert expected_utility(coin_flip(), {}) == (0, 0)
    g = one_decision((3, 7, 5))
    assert expected_utility(g, {0: [0, 1, 0]}) == (7, -7)
    assert expected_utility(g, uniform_profile(g)) == (5, -5)
    mp = matching_pennies()
    prof = {0: [Fraction(1, 4), Fraction(3, 4)], 1: [1, 0]}
    assert expected_utility(mp, prof) == (Fraction(-1, 2), Fraction(1, 2))


def test_missing_policy():
    with pytest.raises(MissingInfosetPolicy):
        expected_utility(matching_pennies(), {0: [1, 0]})


def test_best_response_one_decision():
    v, plan = best_response(one_decision((3, 7, 5)), {}, 0)
    assert v == 7 and plan == {0: "x1"}


def test_best_response_pennies():
    mp = matching_pennies()
    v, plan = best_response(mp, {0: [0.75, 0.25]}, 1)
    assert v == pytest.approx(0.5) and plan == {1: "t"}
    assert exploitability(mp, {0: [0.5, 0.5], 1: [0.5, 0.5]}) == pytest.approx(0)
    assert exploitability(mp, {0: [1, 0], 1: [0.5, 0.5]}) == pytest.approx(1)


def test_imperfect_recall_responder(k3_tpi):
    # own actions are always observed, so forgetting only comes from abstraction
    ir = abstract_imperfect_recall(k3_tpi["folded"])
    assert has_perfect_recall(k3_tpi["folded"], 0)
    assert not has_perfect_recall(ir, 0)
    assert has_perfect_recall(ir, 1)
    with pytest.raises(ImperfectRecallResponder):
        best_response(ir, uniform_profile(ir), 0)


def test_abstract_game_lifts_instead_of_failing(k3_tpi):
    ir = abstract_imperfect_recall(k3_tpi["folded"])
    x = exploitability(ir, uniform_profile(ir))
    y = exploitability(k3_tpi["folded"], uniform_profile(k3_tpi["folded"]))
    assert x == pytest.approx(y)


def test_oracle_small_cases():
    v, dist = tmecor_bruteforce(matching_pennies())
    assert v == pytest.approx(0, abs=1e-5)
    assert sum(p for _, p in dist) == pytest.approx(1)
    v, _ = tmecor_bruteforce(one_decision((3, 7, 5)))
    assert v == pytest.approx(7)
    v, _ = tmecor_bruteforce(builtin_examples()["cooperative"])
    assert v == pytest.approx(3.5, abs=1e-5)


def test_oracle_budget():
    with pytest.raises(BudgetExceeded):
        tmecor_bruteforce(generate("21K3"), budget=10)


def test_reduced_plans_skip_unreached():
    g = builtin_examples()["adversarial"]
    plans = reduced_plans(g, g.team)
    # p1 and p2 act on disjoint chance branches: 2 x 2 joint plans
    assert len(plans) == 4
    assert all(len(p) == 2 for p in plans)


def test_adversary_best_response_to_mapped_oracle():
    g = builtin_examples()["adversarial"]
    value, dist = tmecor_bruteforce(g)
    t = convert_basic(g)
    mixed = map_rho_mixed(dist, g, t)
    prof = {}
    for plan, w in mixed.items():
        for i, lab in plan:
            acts = t.infosets[i].actions
            row = prof.setdefault(i, [0.0] * len(acts))
            row[acts.index(lab)] += w
    v, _ = best_response(t, prof, 1)
    # best_response reports the responder's own payoff
    assert -v == pytest.approx(value, abs=1e-4)


@pytest.mark.parametrize("name", ["cooperative", "adversarial"])
def test_builtin_payoff_equivalence(name):
    g = builtin_examples()[name]
    assert payoff_equivalence(g, convert_basic(g)) > 0
    assert payoff_equivalence(g, convert_pruned(g)) > 0


def test_maps_are_inverse_on_reached_infosets():
    g = builtin_examples()["cooperative"]
    t = convert_basic(g)
    for pT in reduced_plans(g, g.team):
        back = map_sigma(map_rho(pT, g, t), t, g)
        assert back == pT


def test_maps_need_provenance(k3_tpi):
    f = k3_tpi["folded"]
    with pytest.raises(ProvenanceMissing):
        map_rho({}, generate("21K3"), f)
    with pytest.raises(ProvenanceMissing):
        opponent_plan_to_tpi({}, generate("21K3"), f)


def test_plan_profile_is_one_hot():
    g = matching_pennies()
    assert plan_profile(g, {0: "T"}, {1: "h"}) == {0: [0, 1], 1: [1, 0]}


def test_tree_stats():
    b = GameBuilder(("a", "b"), (0,), 1)
    b.set_payoff(0, (0, 0))
    s = tree_stats(b.build())
    assert (s.nodes, s.team_infosets, s.adversary_infosets, s.terminals) == (1, 0, 0, 1)
    assert s.team_sequences == 1
    s = tree_stats(generate("21K3"))
    assert (s.team_infosets, s.team_actions) == (24, 48)


def test_tree_stats_dummy_flag():
    from tpigame.transform import make_public_turn_taking
    g = make_public_turn_taking(_timed_pair())
    plain = tree_stats(g)
    full = tree_stats(g, count_dummies=True)
    assert full.nodes > plain.nodes
    assert full.team_infosets == plain.team_infosets


def _timed_pair():
    # opponent moves first on one branch only, so padding is needed
    b = GameBuilder(("a", "b"), (0,), 1)
    b.declare(0, "x", {1})
    b.declare(0, "y", {1})
    b.declare(1, "X", {0})
    (h,) = b.expand(0, 1, ["X"])
    for z in b.expand(h, 0, ["x", "y"]):
        b.set_payoff(z, (1, -1))
    return b.build()
