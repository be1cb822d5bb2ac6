from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from helpers import coin_flip
from tpigame.game import (CHANCE, HIDDEN, PRIV, PUB, TERMINAL, GameBuilder, InvalidGame,
                          VisibilityIncomplete, visibility_for_set)
from tpigame.generators import gen_random_vefg


def tiny():
    b = GameBuilder(("p0", "p1", "p2"), (0, 1), 2)
    b.declare(CHANCE, "x", {0})
    b.declare(CHANCE, "y", {0})
    for a in "ab":
        b.declare(0, a, {1, 2})
    b.declare(1, "c", {0})
    b.declare(1, "d", {0})
    k = b.expand(0, CHANCE, ["x", "y"], [Fraction(1, 3), Fraction(2, 3)])
    for h in k:
        for h1 in b.expand(h, 0, ["a", "b"]):
            for z in b.expand(h1, 1, ["c", "d"]):
                b.set_payoff(z, (1, 1, -2))
    return b.build(name="tiny")


def test_children_are_contiguous():
    g = tiny()
    assert list(g.children(0)) == [1, 2]
    assert g.actions(1) == ("a", "b")
    for h in range(1, len(g)):
        assert h in g.children(g.parent[h])


def test_history_and_depth():
    g = tiny()
    z = len(g) - 1
    assert len(g.history(z)) == 3
    assert g.depth[z] == 3


def test_visibility_three_valued():
    g = tiny()
    assert visibility_for_set(g, (0, 1), 0, "a") == PUB
    assert visibility_for_set(g, (0, 1), CHANCE, "x") == PRIV
    assert visibility_for_set(g, (1, 2), CHANCE, "x") == HIDDEN


def test_infosets_from_observations():
    g = tiny()
    # p0 sees the chance draw: two infosets; p1 sees p0's action only: two infosets
    assert len(g.infosets_of(0)) == 2
    assert len(g.infosets_of(1)) == 2
    I = g.infosets_of(1)[0]
    assert len(I.nodes) == 2


def test_own_actions_always_observed():
    g = tiny()
    assert g.observes(1, 1, "c")
    assert not g.observes(2, 1, "c")


def test_missing_visibility_reported():
    b = GameBuilder(("a", "b"), (0,), 1)
    for z in b.expand(0, 0, ["l", "r"]):
        b.set_payoff(z, (0, 0))
    g = b.build()
    with pytest.raises(VisibilityIncomplete):
        g.observes(1, 0, "l")
    assert "visibility_incomplete" in g.validate().codes()


def test_validate_catches_bad_chance_and_zero_sum():
    b = GameBuilder(("a", "b"), (0,), 1)
    b.declare(CHANCE, "u", ())
    b.declare(CHANCE, "v", ())
    z1, z2 = b.expand(0, CHANCE, ["u", "v"], [Fraction(1, 2), Fraction(1, 3)])
    b.set_payoff(z1, (1, -1))
    b.set_payoff(z2, (1, 0))
    codes = b.build().validate().codes()
    assert {"chance_normalization", "zero_sum"} <= codes


def test_infoset_with_different_actions_rejected():
    b = GameBuilder(("a", "b"), (0,), 1)
    b.declare(CHANCE, "u", ())
    b.declare(CHANCE, "v", ())
    for lab in "pqr":
        b.declare(0, lab, ())
    h1, h2 = b.expand(0, CHANCE, ["u", "v"], [Fraction(1, 2)] * 2)
    for z in b.expand(h1, 0, ["p", "q"]):
        b.set_payoff(z, (0, 0))
    for z in b.expand(h2, 0, ["p", "r"]):
        b.set_payoff(z, (0, 0))
    with pytest.raises(InvalidGame):
        b.build().infosets


def test_collapsed_signal_reads_like_chance_edge():
    # an edge carrying signal "s" is observed exactly like a chance action "s"
    def build(collapse):
        b = GameBuilder(("a", "b"), (0,), 1)
        b.declare(0, "go", set())
        b.declare(CHANCE, "s", {1})
        b.declare(1, "k", set())
        if collapse:
            (h,) = b.expand(0, 0, ["go"], signals=["s"])
        else:
            (m,) = b.expand(0, 0, ["go"])
            (h,) = b.expand(m, CHANCE, ["s"], [1])
        (z,) = b.expand(h, 1, ["k"])
        b.set_payoff(z, (0, 0))
        return b.build(), h
    g1, h1 = build(True)
    g2, h2 = build(False)
    ids1, back1 = g1.observation_ids((1,))
    ids2, back2 = g2.observation_ids((1,))
    assert g1.decode_key(back1, ids1[h1]) == g2.decode_key(back2, ids2[h2])


def test_public_turn_taking_detects_violation():
    # player 1's infoset mixes a history where player 0 moved and one where it did not
    b = GameBuilder(("a", "b"), (0,), 1)
    b.declare(CHANCE, "u", ())
    b.declare(CHANCE, "v", ())
    b.declare(0, "m", ())
    b.declare(1, "p", ())
    b.declare(1, "q", ())
    h1, h2 = b.expand(0, CHANCE, ["u", "v"], [Fraction(1, 2)] * 2)
    (g1,) = b.expand(h1, 0, ["m"])
    for h in (g1, h2):
        for z in b.expand(h, 1, ["p", "q"]):
            b.set_payoff(z, (0, 0))
    ok, bad = b.build().check_public_turn_taking()
    assert not ok and bad.owner == 1


def test_terminal_only_game():
    b = GameBuilder(("a", "b"), (0,), 1)
    b.set_payoff(0, (0, 0))
    g = b.build()
    assert g.player[0] == TERMINAL
    assert g.infosets == []
    assert g.validate().ok


def test_coin_flip_public_states():
    g = coin_flip()
    states = g.compute_public_states((0, 1))
    assert sum(len(s.nodes) for s in states) == len(g)


@given(st.integers(0, 10_000))
def test_random_games_validate_and_partition(seed):
    g = gen_random_vefg(seed, budget=60)
    rep = g.validate()
    assert rep.ok, rep.lines()
    seen = set()
    for I in g.infosets:
        acts = g.actions(I.nodes[0])
        for h in I.nodes:
            assert g.player[h] == I.owner
            assert g.actions(h) == acts
            seen.add(h)
    assert seen == {h for h in range(len(g)) if g.player[h] >= 0}
