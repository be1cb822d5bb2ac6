"""Team-public-information conversions.

The team is replaced by a coordinator that sees only what is public to the
whole team and, at each team decision, issues a *prescription*: one action for
every team private state (infoset) of the current public state.

Three materialized flavours are provided:

* ``convert_basic``: the plain conversion; the forced chance node that plays
  the prescribed action is collapsed into the prescription edge, whose signal
  carries the played action.
* ``convert_pruned``: prescriptions skip private states already ruled out by
  the actions observed after earlier prescriptions.
* ``convert_folded``: team-private chance outcomes are not branched; an exact
  belief over them is carried instead, and a chance node draws the played
  action from the belief mass behind each prescribed action.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .game import (CHANCE, PUB, TERMINAL, GameBuilder, GameError,
                   visibility_for_set)

COORDINATOR = 0
OPPONENT = 1
TPI_PLAYERS = ("coordinator", "opponent")


class PreconditionFailed(GameError):
    pass


class FoldNotApplicable(GameError):
    pass


class ZeroProbabilityEvidence(GameError):
    pass


@dataclass(frozen=True)
class Prescription:
    """One action per scoped infoset, in canonical scope order."""

    scope: tuple
    actions: tuple

    def __getitem__(self, infoset):
        return self.actions[self.scope.index(infoset)]

    @property
    def label(self):
        return prescription_label(self.actions)

    def is_uniform(self):
        return len(set(self.actions)) == 1


def prescription_label(actions):
    return "/".join(actions)


def signal_label(member, action):
    return f"@{member}:{action}"


def check_convertible(game):
    if game.opponent is not None and game.opponent in game.team:
        raise PreconditionFailed("opponent belongs to the team")
    if not game.team:
        raise PreconditionFailed("game has no team")
    rep = game.validate()
    if not rep.ok:
        bad = [d.code for d in rep.diagnostics if d.severity == "error"]
        raise PreconditionFailed(f"game does not validate: {bad}")
    if not rep.completely_inflated:
        raise PreconditionFailed("game is not completely inflated (run inflate_team)")
    if not rep.public_turn_taking:
        raise PreconditionFailed("game is not public-turn-taking (run make_public_turn_taking)")


def enumerate_prescriptions(game, node, excluded=frozenset()):
    """Prescriptions available at team node ``node`` given excluded infosets."""
    scope = _scope(game, node, excluded, _ancestor_infosets(game))
    return [Prescription(scope, acts)
            for acts in itertools.product(*(game.infosets[i].actions for i in scope))]


def _ancestor_infosets(game):
    """Team infosets met on the path to every team node (excluding its own)."""
    cache = game.__dict__.get("_team_ancestors")
    if cache is not None:
        return cache
    team = set(game.team)
    anc = {}
    io = game.infoset_of
    stack = [(0, frozenset())]
    while stack:
        h, seen = stack.pop()
        p = game.player[h]
        if p == TERMINAL:
            continue
        if p in team:
            anc[h] = seen
            seen = seen | {io[h]}
        for c in game.children(h):
            stack.append((c, seen))
    game.__dict__["_team_ancestors"] = anc
    return anc


def _scope(game, h, excluded, anc):
    pub_ids, _ = game.public_state_ids(game.team)
    full = game.team_scopes[pub_ids[h]]
    if not excluded:
        return full
    infos = game.infosets
    return tuple(i for i in full
                 if any(anc[g].isdisjoint(excluded) for g in infos[i].nodes))


class _Target:
    """Shared TPI builder state."""

    def __init__(self, src):
        self.src = src
        self.b = GameBuilder(TPI_PLAYERS, (COORDINATOR,), OPPONENT)
        self.prov = [0]
        self._declared = set()

    def declare_action(self, actor, label):
        key = (actor, label)
        if key in self._declared:
            return
        self._declared.add(key)
        src = self.src
        if actor == CHANCE:
            obs = set()
            if visibility_for_set(src, src.team, CHANCE, label) == PUB:
                obs.add(COORDINATOR)
            if src.opponent is not None and src.observes(src.opponent, CHANCE, label):
                obs.add(OPPONENT)
            self.b.declare(CHANCE, label, obs)
        elif actor == OPPONENT:
            obs = {COORDINATOR} if visibility_for_set(
                src, src.team, src.opponent, label) == PUB else set()
            self.b.declare(OPPONENT, label, obs)
        else:
            self.b.declare(COORDINATOR, label, set())

    def declare_signal(self, member, action):
        sig = signal_label(member, action)
        key = (CHANCE, sig)
        if key not in self._declared:
            self._declared.add(key)
            obs = {COORDINATOR}
            src = self.src
            if src.opponent is not None and src.observes(src.opponent, member, action):
                obs.add(OPPONENT)
            self.b.declare(CHANCE, sig, obs)
        return sig

    def expand(self, node, player, labels, provs, probs=None, signals=None):
        kids = self.b.expand(node, player, labels, probs, signals)
        self.prov.extend(provs)
        return kids

    def terminal(self, node, u_team):
        self.b.payoffs[node] = (u_team, -u_team)

    def finish(self, representation):
        b = self.b
        b.provenance = self.prov
        g = b.build(representation=representation, name=self.src.name,
                    meta={"source": self.src.name})
        g.source = self.src
        return g


def team_payoff(src, h):
    u = src.payoffs[h]
    return sum(u[p] for p in src.team)


class _Converter:
    """Depth-first construction shared by the three flavours.

    Every pending node carries ``support``, the source nodes it stands for
    (one node unless folding) with their private-state labels and chance
    weights, and ``info``, every source node consistent with what the
    coordinator has observed so far. Scopes of the pruned and folded flavours
    are the team infosets met in ``info``; ``exclusion`` switches to the
    per-path excluded-set test instead.
    """

    def __init__(self, src, mode, collapse_forced=True, scope_rule="belief"):
        check_convertible(src)
        if scope_rule not in ("belief", "exclusion"):
            raise ValueError(f"unknown scope rule {scope_rule!r}")
        self.src = src
        self.mode = mode
        self.fold = mode == "folded"
        self.collapse_forced = collapse_forced
        self.scope_rule = scope_rule if mode != "basic" else None
        self.track = mode != "basic"
        self.t = _Target(src)
        self.anc = _ancestor_infosets(src) if scope_rule == "exclusion" else None
        self.pub_ids = src.public_state_ids(src.team)[0]
        self._seen = {}
        self._fold = {}
        self._interned = {}

    def sees(self, actor, label):
        """Whether the coordinator observes a source action of ``actor``."""
        key = (actor, label)
        r = self._seen.get(key)
        if r is None:
            src = self.src
            if actor in src.team:
                r = True
            else:
                r = visibility_for_set(src, src.team, actor, label) == PUB
            self._seen[key] = r
        return r

    def foldable(self, h):
        r = self._fold.get(h)
        if r is None:
            src = self.src
            flags = {_foldable(src, lab) for lab in src.actions(h)}
            if len(flags) != 1:
                raise FoldNotApplicable(f"chance node {h} mixes private and shared outcomes")
            r = self._fold[h] = flags.pop()
        return r

    def intern(self, x):
        return self._interned.setdefault(x, x)

    def _children_with(self, nodes, label):
        src = self.src
        out = []
        for h, w in nodes:
            s = src.first_child[h]
            for k in range(src.n_children[h]):
                if src.label[s + k] == label:
                    pr = src.probs[h][k] if src.player[h] == CHANCE else 1
                    if pr:
                        out.append((s + k, w * pr))
        return tuple(out)

    def _all_children(self, nodes):
        src = self.src
        out = []
        for h, w in nodes:
            s = src.first_child[h]
            chance = src.player[h] == CHANCE
            for k in range(src.n_children[h]):
                pr = src.probs[h][k] if chance else 1
                if pr:
                    out.append((s + k, w * pr))
        return tuple(out)

    def _unfold(self, support, info):
        src = self.src
        player = src.player
        while player[support[0][0]] == CHANCE and self.foldable(support[0][0]):
            nxt = []
            for h, st, w in support:
                if player[h] != CHANCE or not self.foldable(h):
                    raise FoldNotApplicable("support mixes folded and kept nodes")
                s0 = src.first_child[h]
                for k, pr in enumerate(src.probs[h]):
                    if pr:
                        nxt.append((s0 + k, st + (src.label[s0 + k],), w * pr))
            support = tuple(nxt)
            if info is not None:
                for h, _ in info:
                    if player[h] != CHANCE or not self.foldable(h):
                        raise FoldNotApplicable("coordinator state mixes folded and kept nodes")
                info = self._all_children(info)
        return support, info

    def _scope(self, h0, info, X):
        src = self.src
        full = src.team_scopes[self.pub_ids[h0]]
        if self.scope_rule == "belief":
            io = src.infoset_of
            present = {io[h] for h, _ in info}
            return tuple(i for i in full if i in present)
        if self.scope_rule == "exclusion":
            return _scope(src, h0, X, self.anc)
        return full

    def run(self):
        src, t = self.src, self.t
        one = Fraction(1)
        player = src.player
        first = src.first_child
        io = src.infoset_of
        infos = src.infosets
        opp = src.opponent
        team = set(src.team)
        track = self.track
        stack = [(((0, (), one),), ((0, one),) if track else None, frozenset(), 0)]
        while stack:
            support, info, X, hp = stack.pop()
            if self.fold:
                support, info = self._unfold(support, info)
            h0 = support[0][0]
            p = player[h0]
            for h, _, _ in support:
                if player[h] != p:
                    raise FoldNotApplicable("support mixes node kinds")
            t.prov[hp] = h0
            if p == TERMINAL:
                total = sum(w for _, _, w in support)
                u = sum(w * team_payoff(src, h) for h, _, w in support) / total
                t.terminal(hp, u)
            elif p == CHANCE or p == opp:
                actor = CHANCE if p == CHANCE else OPPONENT
                order = []
                mass = {}
                for h, st, w in support:
                    s0 = first[h]
                    for k in range(src.n_children[h]):
                        pr = src.probs[h][k] if p == CHANCE else one
                        if pr:
                            lab = src.label[s0 + k]
                            if lab not in mass:
                                order.append(lab)
                                mass[lab] = 0
                            mass[lab] += w * pr
                if p == opp:
                    acts = src.actions(h0)
                    for h, _, _ in support:
                        if src.actions(h) != acts:
                            raise FoldNotApplicable("opponent nodes in one folded state differ")
                for lab in order:
                    t.declare_action(actor, lab)
                probs = None
                if p == CHANCE:
                    total = sum(mass.values())
                    probs = [mass[lab] / total for lab in order]
                kids = t.expand(hp, actor, order, [h0] * len(order), probs)
                hidden_info = None
                for lab, ch in zip(order, kids):
                    nxt = []
                    for h, st, w in support:
                        s0 = first[h]
                        for k in range(src.n_children[h]):
                            if src.label[s0 + k] == lab:
                                pr = src.probs[h][k] if p == CHANCE else one
                                if pr:
                                    nxt.append((s0 + k, st, w * pr))
                    if not track:
                        inf = None
                    elif self.sees(p, lab):
                        inf = self._children_with(info, lab)
                    else:
                        if hidden_info is None:
                            hidden_info = self._all_children(info)
                        inf = hidden_info
                    stack.append((tuple(nxt), inf, X, ch))
            elif p in team:
                self._team_node(support, info, X, hp, h0, p, io, infos, stack)
            else:
                raise PreconditionFailed(f"node {h0} has unsupported player {p}")
        return t.finish(self.mode)

    def _team_node(self, support, info, X, hp, h0, member, io, infos, stack):
        src, t = self.src, self.t
        first = src.first_child
        scope = self.intern(self._scope(h0, info, X))
        pos = {i: k for k, i in enumerate(scope)}
        for h, _, _ in support:
            if src.player[h] != member:
                raise FoldNotApplicable("folded team node mixes team members")
            if io[h] not in pos:
                raise PreconditionFailed(f"node {h} outside its prescription scope")
        combos = list(itertools.product(*(infos[i].actions for i in scope)))
        labels = [prescription_label(c) for c in combos]
        for lab in labels:
            t.declare_action(COORDINATOR, lab)
        t.b.scope[hp] = scope
        if self.track:
            total = sum(w for _, w in info)
            t.b.belief[hp] = self.intern(tuple(sorted((h, w / total) for h, w in info)))
            islot = [pos.get(io[h]) for h, _ in info]
        slot = [pos[io[h]] for h, _, _ in support]
        acts0 = src.actions(h0)
        collapse = not self.fold or self.collapse_forced
        total_s = sum(w for _, _, w in support)
        if not self.fold:
            a_of = [c[slot[0]] for c in combos]
            sigs = [t.declare_signal(member, a) for a in a_of]
            kids = t.expand(hp, COORDINATOR, labels,
                            [first[h0] + acts0.index(a) for a in a_of], signals=sigs)
        else:
            kids = t.expand(hp, COORDINATOR, labels, [h0] * len(labels))
        for combo, ch in zip(combos, kids):
            mass = {}
            for (h, st, w), k in zip(support, slot):
                a = combo[k]
                mass[a] = mass.get(a, 0) + w
            order = sorted(mass, key=acts0.index)
            if collapse and len(order) == 1:
                if self.fold:
                    t.b.signal[ch] = t.declare_signal(member, order[0])
                targets = [(ch, order[0])]
            else:
                sigs = [t.declare_signal(member, a) for a in order]
                sub = t.expand(ch, CHANCE, sigs,
                               [first[h0] + acts0.index(a) for a in order],
                               [mass[a] / total_s for a in order])
                targets = list(zip(sub, order))
            for node, a in targets:
                X2 = X
                if self.scope_rule == "exclusion":
                    X2 = X | {scope[k] for k, x in enumerate(combo) if x != a}
                nxt = []
                for (h, st, w), k in zip(support, slot):
                    if combo[k] == a:
                        nxt.append((first[h] + src.actions(h).index(a), st, w))
                inf = None
                if self.track:
                    inf = []
                    for (h, w), k in zip(info, islot):
                        if k is not None and combo[k] == a:
                            inf.append((first[h] + src.actions(h).index(a), w))
                    inf = tuple(inf)
                stack.append((tuple(nxt), inf, X2, node))


def convert_basic(src):
    """Materialize the basic team-public-information game of ``src``."""
    return _Converter(src, "basic").run()


def convert_pruned(src, scope_rule="belief"):
    """Basic conversion restricted to private states the coordinator cannot rule out."""
    return _Converter(src, "pruned", scope_rule=scope_rule).run()


# -- folded ----------------------------------------------------------------

@dataclass(frozen=True)
class Belief:
    """Exact distribution over joint team private states.

    ``support`` is a tuple of ``(state, probability)`` pairs; a state is the
    tuple of folded chance labels that produced it.
    """

    support: tuple

    def __post_init__(self):
        if sum(p for _, p in self.support) != 1:
            raise ValueError("belief does not sum to one")
        if any(p <= 0 for _, p in self.support):
            raise ValueError("belief has non-positive entries")

    @classmethod
    def from_weights(cls, weights):
        total = sum(weights.values())
        if total == 0:
            raise ZeroProbabilityEvidence("evidence has zero probability")
        return cls(tuple((s, Fraction(w) / total) for s, w in weights.items() if w))

    def prob(self, state):
        for s, p in self.support:
            if s == state:
                return p
        return Fraction(0)

    def states(self):
        return [s for s, _ in self.support]


def belief_update(belief, likelihood):
    """Bayes rule with exact rationals.

    ``likelihood`` maps a state to the probability of the observed evidence
    in that state (a callable or a dict; missing states have likelihood 0).
    """
    like = likelihood if callable(likelihood) else (lambda s: likelihood.get(s, 0))
    weights = {}
    for s, p in belief.support:
        w = p * Fraction(like(s))
        if w:
            weights[s] = w
    return Belief.from_weights(weights)


def prescription_likelihood(prescribed, observed):
    """0/1 likelihood of an observed action under a state -> action map."""
    return lambda s: 1 if prescribed(s) == observed else 0


def _foldable(src, label):
    if visibility_for_set(src, src.team, CHANCE, label) == PUB:
        return False
    return src.opponent is None or not src.observes(src.opponent, CHANCE, label)


def convert_folded(src, collapse_forced=True, scope_rule="belief"):
    """Folded conversion: team-private chance is tracked by an exact belief.

    A chance node draws the played action from the belief mass behind each
    prescribed action; with ``collapse_forced`` a draw with a single outcome
    is merged into the prescription edge.
    """
    return _Converter(src, "folded", collapse_forced, scope_rule).run()


CONVERTERS = {
    "basic": convert_basic,
    "pruned": convert_pruned,
    "folded": convert_folded,
}
