"""Benchmark game constructors: multi-player Kuhn and Leduc poker, the small
hand-coded examples, and seeded random games for property tests."""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from fractions import Fraction

from .game import CHANCE, GameBuilder


class InvalidParams(ValueError):
    pass


INSTANCE_GRAMMAR = "mnKr (e.g. 21K3) or mnLbrc (e.g. 21L133); m, n, b, c single digits"
_KUHN_RE = re.compile(r"^(\d)(\d)K(\d+)$")
_LEDUC_RE = re.compile(r"^(\d)(\d)L(\d)(\d)(\d)$")


@dataclass
class PokerParams:
    variant: str  # "kuhn" or "leduc"
    team_size: int = 2
    adversary_count: int = 1
    ranks: int = 3
    max_bets: int = 1
    suits: int = 1
    ante: int = 1
    raise_amounts: tuple = (1,)
    adversary_seat: int | None = None  # default: last seat
    raise_schedule: str = "round"  # "round": amount by betting round; "raise": by raise count

    @property
    def seats(self):
        return self.team_size + self.adversary_count

    @property
    def name(self):
        if self.variant == "kuhn":
            return f"{self.team_size}{self.adversary_count}K{self.ranks}"
        return f"{self.team_size}{self.adversary_count}L{self.max_bets}{self.ranks}{self.suits}"

    def seat_of_adversary(self):
        return self.seats - 1 if self.adversary_seat is None else self.adversary_seat

    def check(self):
        if self.variant not in ("kuhn", "leduc"):
            raise InvalidParams(f"unknown variant {self.variant!r}")
        if self.team_size < 2:
            raise InvalidParams("team size must be >= 2")
        if self.adversary_count != 1:
            raise InvalidParams("exactly one adversary is supported")
        if self.ranks < 2:
            raise InvalidParams("at least two ranks are required")
        deck = self.ranks * self.suits
        need = self.seats + (1 if self.variant == "leduc" else 0)
        if deck < need:
            raise InvalidParams(f"deck of {deck} cards cannot serve {need} cards")
        if self.max_bets < 1:
            raise InvalidParams("max_bets must be >= 1")
        if self.variant == "leduc" and len(self.raise_amounts) < (
                2 if self.raise_schedule == "round" else self.max_bets):
            raise InvalidParams("not enough raise amounts")
        seat = self.seat_of_adversary()
        if not 0 <= seat < self.seats:
            raise InvalidParams(f"adversary seat {seat} out of range")


def parse_instance(name, adversary_seat=None, raise_schedule="round"):
    """Parse ``mnKr`` / ``mnLbrc`` instance names into :class:`PokerParams`."""
    m = _KUHN_RE.match(name)
    if m:
        p = PokerParams("kuhn", int(m[1]), int(m[2]), int(m[3]), 1, 1, 1, (1,),
                        adversary_seat)
    else:
        m = _LEDUC_RE.match(name)
        if not m:
            raise InvalidParams(f"unknown instance {name!r}; expected {INSTANCE_GRAMMAR}")
        p = PokerParams("leduc", int(m[1]), int(m[2]), int(m[4]), int(m[3]), int(m[5]), 1,
                        (2, 4), adversary_seat, raise_schedule)
    p.check()
    return p


def generate(name, adversary_seat=None, raise_schedule="round"):
    params = parse_instance(name, adversary_seat, raise_schedule)
    return gen_poker(params)


def gen_kuhn(params):
    params.variant = "kuhn"
    return gen_poker(params)


def gen_leduc(params):
    params.variant = "leduc"
    return gen_poker(params)


# -- poker engine ------------------------------------------------------------

RANK_NAMES = "23456789TJQKA"


def rank_name(r, ranks):
    # highest rank is always K-like: shift so 3 ranks read J Q K
    names = RANK_NAMES[-ranks - 1:-1] if ranks <= 12 else RANK_NAMES
    return names[r]


@dataclass
class _Betting:
    contrib: list
    folded: list
    to_act: list
    raises: int = 0

    def copy(self):
        return _Betting(list(self.contrib), list(self.folded), list(self.to_act), self.raises)

    def active(self):
        return [i for i, f in enumerate(self.folded) if not f]


def gen_poker(params):
    params.check()
    n = params.seats
    adv = params.seat_of_adversary()
    team = tuple(i for i in range(n) if i != adv)
    names = tuple(f"team{i}" if i != adv else "adversary" for i in range(n))
    b = GameBuilder(names, team, adv)
    leduc = params.variant == "leduc"
    copies = params.suits if leduc else 1
    rn = [rank_name(r, params.ranks) for r in range(params.ranks)]

    for s in range(n):
        for r in range(params.ranks):
            b.declare(CHANCE, f"{s}:{rn[r]}", {s})
        for a in "crf":
            b.declare(s, a, set(range(n)) - {s})
    if leduc:
        for r in range(params.ranks):
            b.declare(CHANCE, f"board:{rn[r]}", set(range(n)))

    def raise_amount(round_no, raises_so_far):
        if params.variant == "kuhn":
            return params.raise_amounts[0]
        if params.raise_schedule == "round":
            return params.raise_amounts[round_no]
        return params.raise_amounts[raises_so_far]

    def payoff(hands, board, bet):
        alive = bet.active()
        if len(alive) == 1:
            winners = alive
        else:
            def strength(i):
                pair = board is not None and hands[i] == board
                return (1 if pair else 0, hands[i])
            best = max(strength(i) for i in alive)
            winners = [i for i in alive if strength(i) == best]
        pot = sum(bet.contrib)
        share = Fraction(pot, len(winners))
        return [(share if i in winners else 0) - bet.contrib[i] for i in range(n)]

    # explicit work stack: (node, kind, state)
    stack = [(0, "deal", ([], [copies] * params.ranks))]
    while stack:
        node, kind, st = stack.pop()
        if kind == "deal":
            hands, remaining = st
            seat = len(hands)
            if seat == n:
                bet = _Betting([params.ante] * n, [False] * n, list(range(n)))
                stack.append((node, "bet", (hands, remaining, None, 0, bet)))
                continue
            total = sum(remaining)
            ranks = [r for r in range(params.ranks) if remaining[r] > 0]
            kids = b.expand(node, CHANCE, [f"{seat}:{rn[r]}" for r in ranks],
                            [Fraction(remaining[r], total) for r in ranks])
            for child, r in zip(kids, ranks):
                rem = list(remaining)
                rem[r] -= 1
                stack.append((child, "deal", (hands + [r], rem)))
        elif kind == "board":
            hands, remaining, bet = st
            total = sum(remaining)
            ranks = [r for r in range(params.ranks) if remaining[r] > 0]
            kids = b.expand(node, CHANCE, [f"board:{rn[r]}" for r in ranks],
                            [Fraction(remaining[r], total) for r in ranks])
            for child, r in zip(kids, ranks):
                nb = bet.copy()
                nb.to_act = nb.active()
                nb.raises = 0
                stack.append((child, "bet", (hands, None, r, 1, nb)))
        else:
            hands, remaining, board, round_no, bet = st
            if len(bet.active()) == 1:
                b.set_payoff(node, payoff(hands, board, bet))
                continue
            if not bet.to_act:
                if leduc and round_no == 0:
                    stack.append((node, "board", (hands, remaining, bet)))
                else:
                    b.set_payoff(node, payoff(hands, board, bet))
                continue
            seat = bet.to_act[0]
            top = max(bet.contrib)
            facing = bet.contrib[seat] < top
            acts = ["c"]
            if bet.raises < params.max_bets:
                acts.append("r")
            if facing:
                acts.append("f")
            kids = b.expand(node, seat, acts)
            for child, a in zip(kids, acts):
                nb = bet.copy()
                nb.to_act.pop(0)
                if a == "c":
                    nb.contrib[seat] = top
                elif a == "f":
                    nb.folded[seat] = True
                else:
                    nb.contrib[seat] = top + raise_amount(round_no, bet.raises)
                    nb.raises += 1
                    order = [(seat + k) % n for k in range(1, n)]
                    nb.to_act = [i for i in order if not nb.folded[i]]
                stack.append((child, "bet", (hands, remaining, board, round_no, nb)))

    return b.build(name=params.name, meta={"params": params})


# -- hand-coded examples -----------------------------------------------------

def cooperative_example():
    """Two-member team, chance, no adversary; member 2 sees everything but chance.

    Chance draws private state 0 or 1 for member 1, member 1 then picks A/B
    and member 2, seeing that choice, picks C/D. The team earns when member 2
    matches the private state, so member 1 must signal it.
    """
    b = GameBuilder(("p1", "p2"), (0, 1), None)
    b.declare(CHANCE, "s0", {0})
    b.declare(CHANCE, "s1", {0})
    for a in "AB":
        b.declare(0, a, {1})
    for a in "CD":
        b.declare(1, a, {0})
    states = b.expand(0, CHANCE, ["s0", "s1"], [Fraction(1, 2), Fraction(1, 2)])
    table = {
        # (state, p1 action, p2 action) -> team payoff
        (0, "A", "C"): 3, (0, "A", "D"): 0, (0, "B", "C"): 2, (0, "B", "D"): 1,
        (1, "A", "C"): 0, (1, "A", "D"): 2, (1, "B", "C"): 1, (1, "B", "D"): 4,
    }
    for s, h in enumerate(states):
        for a, h1 in zip("AB", b.expand(h, 0, ["A", "B"])):
            for c, h2 in zip("CD", b.expand(h1, 1, ["C", "D"])):
                u = table[(s, a, c)]
                b.set_payoff(h2, (Fraction(u, 2), Fraction(u, 2)))
    return b.build(name="cooperative")


def adversarial_example():
    """Team of two against an adversary; the team members' first decisions
    share one public state because a hidden chance draw decides who moves."""
    b = GameBuilder(("p1", "p2", "adversary"), (0, 1), 2)
    b.declare(CHANCE, "L", {0})
    b.declare(CHANCE, "R", {0})
    for a in "AB":
        b.declare(0, a, {1, 2})
    for a in "CD":
        b.declare(1, a, {0, 2})
    for a in "XY":
        b.declare(2, a, {0, 1})
    payoff = {
        ("L", "A", "X"): 2, ("L", "A", "Y"): -1, ("L", "B", "X"): -1, ("L", "B", "Y"): 1,
        ("R", "C", "X"): -2, ("R", "C", "Y"): 1, ("R", "D", "X"): 1, ("R", "D", "Y"): 0,
    }
    branches = b.expand(0, CHANCE, ["L", "R"], [Fraction(1, 2), Fraction(1, 2)])
    for side, h, p, acts in ((("L"), branches[0], 0, "AB"), ("R", branches[1], 1, "CD")):
        for a, h1 in zip(acts, b.expand(h, p, list(acts))):
            for x, h2 in zip("XY", b.expand(h1, 2, ["X", "Y"])):
                u = Fraction(payoff[(side, a, x)])
                b.set_payoff(h2, (u / 2, u / 2, -u))
    return b.build(name="adversarial")


def builtin_examples():
    return {"cooperative": cooperative_example(), "adversarial": adversarial_example()}


# -- random games ------------------------------------------------------------

def gen_random_vefg(seed, budget=40, players=3, max_actions=3, max_depth=6,
                    observe_prob=0.6, payoff_range=5):
    """Seeded random zero-sum game with randomized visibility.

    ``players - 1`` team members face one adversary (the last player). Player
    action sets are a function of the actor's observation sequence, which keeps
    the induced information sets well formed.
    """
    if budget > 10_000:
        raise InvalidParams("budget above 10^4 nodes")
    if players < 2:
        raise InvalidParams("need at least two players")
    rng = random.Random(seed)
    team = tuple(range(players - 1))
    adv = players - 1
    b = GameBuilder(tuple(f"p{i}" for i in range(players)), team, adv)
    alphabet = "abcdefgh"[:max(max_actions, 2)]
    actors = list(range(players)) + [CHANCE]
    for actor in actors:
        for a in alphabet:
            obs = {p for p in range(players) if p != actor and rng.random() < observe_prob}
            b.declare(actor, a, obs)
    # observation keys are tracked alongside the build to fix action sets
    action_sets = {}
    keys = {0: tuple(() for _ in range(players))}
    frontier = [(0, 0)]
    while frontier:
        idx = rng.randrange(len(frontier))
        node, depth = frontier.pop(idx)
        room = budget - len(b) - len(frontier)
        stop = depth >= max_depth or room < max_actions or (depth > 1 and rng.random() < 0.25)
        if stop:
            team_u = rng.randint(-payoff_range, payoff_range)
            split = rng.randint(-2, 2)
            u = [Fraction(0)] * players
            u[team[0]] = Fraction(team_u - split * (len(team) - 1))
            for t in team[1:]:
                u[t] = Fraction(split)
            u[adv] = -sum(u[t] for t in team)
            b.set_payoff(node, u)
            continue
        actor = rng.choice(actors)
        if actor == CHANCE:
            k = rng.randint(2, max_actions)
            labels = rng.sample(alphabet, k)
            w = [rng.randint(1, 4) for _ in range(k)]
            kids = b.expand(node, CHANCE, labels, [Fraction(x, sum(w)) for x in w])
        else:
            ak = (actor, keys[node][actor])
            labels = action_sets.get(ak)
            if labels is None:
                k = rng.randint(2, max_actions)
                labels = action_sets[ak] = sorted(rng.sample(alphabet, k))
            kids = b.expand(node, actor, labels)
        for child, lab in zip(kids, labels):
            ks = []
            for p in range(players):
                seen = actor == p or p in b.visibility[(actor, lab)]
                ks.append(keys[node][p] + ((actor, lab),) if seen else keys[node][p])
            keys[child] = tuple(ks)
            frontier.append((child, depth + 1))
    return b.build(name=f"random-{seed}")
