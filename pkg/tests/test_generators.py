from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from tpigame.evaluation import tree_stats
from tpigame.game import CHANCE, TERMINAL
from tpigame.generators import (InvalidParams, builtin_examples, gen_random_vefg, generate,
                                parse_instance)
from tpigame.transform import NotTimeable, make_public_turn_taking


def leaves(g):
    out = {}
    for z in range(len(g)):
        if g.player[z] == TERMINAL:
            out[tuple(g.label[h] for h in g.history(z))] = g.payoffs[z]
    return out


def reference_leaves(n, ranks, suits, leduc, max_bets, bets):
    """Rules oracle: {label sequence: payoffs} written as plain recursion."""
    names = "JQK" if ranks == 3 else "QK" if ranks == 2 else "TJQK"
    out = {}

    def showdown(hands, board, live, put):
        def power(i):
            return (board is not None and hands[i] == board, names.index(hands[i]))
        top = max(power(i) for i in live)
        win = [i for i in live if power(i) == top]
        pot = sum(put)
        return tuple(Fraction(pot, len(win)) * (i in win) - put[i] for i in range(n))

    def betting(seq, hands, deck, board, rnd, live, put, queue, nraise):
        if len(live) == 1:
            out[seq] = showdown(hands, board, live, put)
            return
        if not queue:
            if leduc and rnd == 0:
                for c in sorted(set(deck)):
                    rest = list(deck)
                    rest.remove(c)
                    betting(seq + (f"board:{c}",), hands, rest, c, 1, live, put,
                            list(live), 0)
            else:
                out[seq] = showdown(hands, board, live, put)
            return
        s, queue = queue[0], queue[1:]
        high = max(put)
        # check or call
        p2 = list(put)
        p2[s] = high
        betting(seq + ("c",), hands, deck, board, rnd, live, p2, queue, nraise)
        if nraise < max_bets:
            p2 = list(put)
            p2[s] = high + bets[rnd]
            after = [(s + k) % n for k in range(1, n)]
            betting(seq + ("r",), hands, deck, board, rnd, live, p2,
                    [i for i in after if i in live], nraise + 1)
        if put[s] < high:
            betting(seq + ("f",), hands, deck, board, rnd, [i for i in live if i != s],
                    put, queue, nraise)

    def deal(seq, hands, deck):
        if len(hands) == n:
            betting(seq, hands, deck, None, 0, list(range(n)), [1] * n, list(range(n)), 0)
            return
        for c in sorted(set(deck)):
            rest = list(deck)
            rest.remove(c)
            deal(seq + (f"{len(hands)}:{c}",), hands + [c], rest)

    deal((), [], [c for c in names[:ranks] for _ in range(suits)])
    return out


@pytest.mark.parametrize("name,args", [
    ("21K3", (3, 3, 1, False, 1, (1,))),
    ("21K4", (3, 4, 1, False, 1, (1,))),
    ("31K4", (4, 4, 1, False, 1, (1,))),
    ("21L123", (3, 2, 3, True, 1, (2, 4))),
    ("21L133", (3, 3, 3, True, 1, (2, 4))),
])
def test_leaves_match_rules_oracle(name, args):
    got = leaves(generate(name))
    want = reference_leaves(*args)
    assert set(got) == set(want)
    for k, u in want.items():
        assert got[k] == u, k


def test_21k3_deals_and_chance():
    g = generate("21K3")
    assert g.player[0] == CHANCE
    deals = [h for h in range(len(g)) if g.depth[h] == 3]
    assert len(deals) == 6
    # deal probabilities multiply to 1/6
    for h in deals:
        p = Fraction(1)
        for x in g.history(h):
            par = g.parent[x]
            p *= g.probs[par][x - g.first_child[par]]
        assert p == Fraction(1, 6)


@pytest.mark.parametrize("name", ["21K3", "21K4", "21L123"])
def test_chip_conservation(name):
    g = generate(name)
    for z in range(len(g)):
        if g.player[z] == TERMINAL:
            assert sum(g.payoffs[z]) == 0


def test_split_pot():
    # two ranks, three suits: both team members can pair the board
    g = generate("21L123")
    found = False
    for seq, u in leaves(g).items():
        if seq[:3] == ("0:K", "1:K", "2:Q") and seq[-1] != "f" and "board:K" in seq:
            if "f" not in seq:
                assert u[0] == u[1] > 0
                found = True
    assert found


def test_deal_visibility():
    g = generate("21K3")
    for (actor, lab), obs in g.visibility.items():
        if actor == CHANCE:
            seat = int(lab.split(":")[0])
            assert obs == {seat}
        else:
            assert obs == set(range(3)) - {actor}


@pytest.mark.parametrize("name,adv", [
    ("21K3", (12, 25)), ("21K4", (16, 33)), ("21L133", (228, 457)), ("21L223", (630, 1443)),
])
def test_adversary_counts(name, adv):
    s = tree_stats(generate(name))
    assert (s.adversary_infosets, s.adversary_sequences) == adv


def test_adversary_seat_and_names():
    g = generate("21K3")
    assert g.players == ("team0", "team1", "adversary")
    assert g.opponent == 2 and g.team == (0, 1)
    g0 = generate("21K3", adversary_seat=0)
    assert g0.opponent == 0 and g0.team == (1, 2)
    assert parse_instance("21L133").max_bets == 1
    assert parse_instance("21L223").max_bets == 2


@pytest.mark.parametrize("bad", ["", "21K", "11K3", "22K3", "21K1", "21L013", "XYZ", "21K3x"])
def test_invalid_names(bad):
    with pytest.raises(InvalidParams):
        generate(bad)


def test_deck_too_small():
    with pytest.raises(InvalidParams):
        generate("41K3")


def test_builtins_validate():
    ex = builtin_examples()
    assert set(ex) == {"cooperative", "adversarial"}
    for g in ex.values():
        assert g.validate().ok
    assert ex["cooperative"].opponent is None


@given(st.integers(0, 10**6), st.integers(10, 200))
def test_random_deterministic_and_bounded(seed, budget):
    a = gen_random_vefg(seed, budget=budget)
    b = gen_random_vefg(seed, budget=budget)
    assert len(a) == len(b) <= budget
    assert list(a.label) == list(b.label) and a.payoffs == b.payoffs
    assert a.visibility == b.visibility


def test_random_games_exercise_recall_diagnostics():
    seen = Counter()
    timeable = 0
    for seed in range(100):
        g = gen_random_vefg(seed, budget=60)
        seen.update(d for d in g.validate().codes())
        try:
            make_public_turn_taking(g)
            timeable += 1
        except NotTimeable:
            pass
    for code in ("hidden_teammate_action", "non_visible_structure", "private_signal"):
        assert seen[code] > 0, code
    assert timeable > 50
