"""Shared test utilities: small games and prepared random games."""

from fractions import Fraction

from tpigame.game import CHANCE, GameBuilder
from tpigame.generators import gen_random_vefg
from tpigame.transform import NotTimeable, inflate_team, make_public_turn_taking


def prepared_random(seed, budget=40, players=3):
    """Random game made public-turn-taking and inflated, or None if untimeable."""
    g = gen_random_vefg(seed, budget=budget, players=players)
    try:
        return inflate_team(make_public_turn_taking(g))
    except NotTimeable:
        return None


def matching_pennies():
    """Team of one (player 0) against player 1; player 1 does not see the coin."""
    b = GameBuilder(("row", "col"), (0,), 1)
    for a in "HT":
        b.declare(0, a, ())
        b.declare(1, a.lower(), ())
    for a, h in zip("HT", b.expand(0, 0, ["H", "T"])):
        for x, z in zip("ht", b.expand(h, 1, ["h", "t"])):
            u = 1 if a.lower() == x else -1
            b.set_payoff(z, (u, -u))
    return b.build(name="pennies")


def coin_flip():
    b = GameBuilder(("a", "b"), (0,), 1)
    b.declare(CHANCE, "heads", {0, 1})
    b.declare(CHANCE, "tails", {0, 1})
    z1, z2 = b.expand(0, CHANCE, ["heads", "tails"], [Fraction(1, 2)] * 2)
    b.set_payoff(z1, (1, -1))
    b.set_payoff(z2, (-1, 1))
    return b.build(name="coin")


def one_decision(payoffs=(3, 7, 5)):
    b = GameBuilder(("a", "b"), (0,), 1)
    labels = [f"x{i}" for i in range(len(payoffs))]
    for lab in labels:
        b.declare(0, lab, {1})
    for z, u in zip(b.expand(0, 0, labels), payoffs):
        b.set_payoff(z, (u, -u))
    return b.build(name="one-decision")


def public_chain(levels, branching=2):
    """All-public team game: team0, team1, adversary and chance take turns.

    Every action is seen by everybody, so the team shares all information.
    """
    b = GameBuilder(("t0", "t1", "adv"), (0, 1), 2)
    order = [0, 1, 2, CHANCE]
    labels = [f"a{i}" for i in range(branching)]
    for p in order:
        for lab in labels:
            b.declare(p, lab, {0, 1, 2})
    frontier = [(0, 0, 0)]
    while frontier:
        h, depth, acc = frontier.pop()
        if depth == levels:
            u = Fraction(acc % 5 - 2)
            b.set_payoff(h, (u / 2, u / 2, -u))
            continue
        p = order[depth % 4]
        probs = [Fraction(1, branching)] * branching if p == CHANCE else None
        for k, c in enumerate(b.expand(h, p, labels, probs)):
            frontier.append((c, depth + 1, acc * 3 + k + depth))
    return b.build(name=f"chain{levels}")


def team_value(game, profile):
    from tpigame.evaluation import expected_utility
    u = expected_utility(game, profile)
    return sum(u[i] for i in game.team)


def sequence_payoffs(game, plan, opp_key):
    """{opponent action sequence: chance-weighted team payoff} under a team-side plan.

    Payoffs are linear in the opponent's realization plan, so two plans agree
    against every opponent plan iff these vectors are equal.
    """
    from tpigame.game import TERMINAL
    io = game.infoset_of
    side = set(game.team)
    out = {}
    stack = [(0, Fraction(1), ())]
    while stack:
        h, r, seq = stack.pop()
        p = game.player[h]
        if p == TERMINAL:
            u = sum(game.payoffs[h][i] for i in game.team)
            out[seq] = out.get(seq, 0) + r * u
        elif p == CHANCE:
            for c, x in zip(game.children(h), game.probs[h]):
                stack.append((c, r * x, seq))
        elif p in side:
            stack.append((game.first_child[h] + game.actions(h).index(plan[io[h]]), r, seq))
        else:
            for c, lab in zip(game.children(h), game.actions(h)):
                stack.append((c, r, seq + (opp_key(h), lab)))
    return {k: v for k, v in out.items() if v}


def payoff_equivalence(src, tpi, budget=None):
    """Exact check of u_T(T, o) = u_t(rho(T), o) and u_t(t, o) = u_T(sigma(t), o).

    Every reduced team plan and coordinator plan is mapped; opponents are
    covered through sequence payoff vectors. Returns the number of plans
    checked and raises AssertionError on the first mismatch.
    """
    from tpigame.evaluation import map_rho, map_sigma, reduced_plans
    sio = src.infoset_of

    def key_src(h):
        return sio[h]

    def key_tpi(h):
        return sio[tpi.provenance[h]]

    checked = 0
    for pT in reduced_plans(src, src.team, budget):
        want = sequence_payoffs(src, pT, key_src)
        got = sequence_payoffs(tpi, map_rho(pT, src, tpi), key_tpi)
        assert want == got, pT
        checked += 1
    for pt in reduced_plans(tpi, tpi.team, budget):
        want = sequence_payoffs(tpi, pt, key_tpi)
        got = sequence_payoffs(src, map_sigma(pt, tpi, src), key_src)
        assert want == got, pt
        checked += 1
    return checked
