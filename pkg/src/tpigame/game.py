"""Extensive-form games with visibility.

A :class:`Game` is an immutable arena of nodes. Children of a node occupy a
contiguous id block, so traversals never need per-node child lists. Every edge
carries an action label and, optionally, a *signal*: the label of a forced
chance action collapsed into the edge (used by converted games, where a
prescription edge also reveals the action actually played).

Visibility is declared per action key ``(actor, label)`` as the set of players
that observe it. A player always observes its own actions. Information sets
are induced by the observed-action subsequences.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations

CHANCE = -1
TERMINAL = -2
DUMMY = "~"  # reserved label of single-action padding nodes

OBS = "obs"
UNOBS = "unobs"
PUB = "pub"
PRIV = "priv"
HIDDEN = "hidden"


class GameError(Exception):
    pass


class VisibilityIncomplete(GameError):
    pass


class InvalidGame(GameError):
    pass


@dataclass(frozen=True)
class Infoset:
    id: int
    owner: int
    key: tuple
    actions: tuple
    nodes: tuple

    @property
    def key_str(self):
        return key_to_str(self.key)


@dataclass(frozen=True)
class PublicState:
    observers: frozenset
    key: tuple
    nodes: tuple


def key_to_str(key):
    return " ".join(":".join(str(x) for x in tok) for tok in key)


class GameBuilder:
    """Incremental constructor. Children of a node are allocated together."""

    def __init__(self, players, team=(), opponent=None):
        self.players = tuple(players)
        self.team = tuple(team)
        self.opponent = opponent
        self.parent = array("l", [-1])
        self.player = array("b", [TERMINAL])
        self.first_child = array("l", [0])
        self.n_children = array("l", [0])
        self.label = [None]
        self.signal = [None]
        self.probs = {}
        self.payoffs = {}
        self.visibility = {}
        self.provenance = None
        self.scope = {}
        self.belief = {}
        self.infoset_labels = {}

    def __len__(self):
        return len(self.player)

    def expand(self, node, player, labels, probs=None, signals=None):
        """Turn ``node`` into a decision/chance node; returns its child ids."""
        if self.n_children[node]:
            raise InvalidGame(f"node {node} already expanded")
        k = len(labels)
        if k == 0:
            raise InvalidGame(f"node {node} has no actions")
        start = len(self.player)
        self.player[node] = player
        self.first_child[node] = start
        self.n_children[node] = k
        self.parent.extend([node] * k)
        self.player.extend([TERMINAL] * k)
        self.first_child.extend([0] * k)
        self.n_children.extend([0] * k)
        self.label.extend(labels)
        self.signal.extend(signals if signals is not None else [None] * k)
        if player == CHANCE:
            if probs is None:
                raise InvalidGame(f"chance node {node} without distribution")
            self.probs[node] = tuple(Fraction(p) for p in probs)
        return range(start, start + k)

    def set_payoff(self, node, payoff):
        self.payoffs[node] = tuple(Fraction(u) for u in payoff)

    def declare(self, actor, label, observers):
        key = (actor, label)
        obs = frozenset(observers)
        old = self.visibility.get(key)
        if old is not None and old != obs:
            raise InvalidGame(f"conflicting visibility for {key}")
        self.visibility[key] = obs

    def build(self, **kw):
        return Game(
            players=self.players,
            team=self.team,
            opponent=self.opponent,
            parent=self.parent,
            player=self.player,
            first_child=self.first_child,
            n_children=self.n_children,
            label=self.label,
            signal=self.signal,
            probs=self.probs,
            payoffs=self.payoffs,
            visibility=self.visibility,
            provenance=self.provenance,
            scope=self.scope,
            belief=self.belief,
            infoset_labels=self.infoset_labels,
            **kw,
        )


class Game:
    """Immutable game tree with per-action visibility.

    ``representation`` tags converted games (``efg`` for source games).
    ``provenance`` maps nodes of a converted game to source nodes, ``scope``
    holds the prescription scope (source infoset ids) of coordinator nodes,
    ``belief`` the exact belief of folded nodes and ``infoset_labels`` explicit
    infoset keys overriding the observation-induced ones.
    """

    def __init__(self, players, team, opponent, parent, player, first_child,
                 n_children, label, signal, probs, payoffs, visibility,
                 representation="efg", provenance=None, scope=None, belief=None,
                 infoset_labels=None, name=None, meta=None):
        self.players = tuple(players)
        self.team = tuple(team)
        self.opponent = opponent
        self.parent = parent
        self.player = player
        self.first_child = first_child
        self.n_children = n_children
        self.label = label
        self.signal = signal
        self.probs = probs
        self.payoffs = payoffs
        self.visibility = visibility
        self.representation = representation
        self.provenance = provenance
        self.scope = scope or {}
        self.belief = belief or {}
        self.infoset_labels = infoset_labels or {}
        self.name = name
        self.meta = dict(meta or {})

    # -- structure -------------------------------------------------------

    def __len__(self):
        return len(self.player)

    @property
    def num_players(self):
        return len(self.players)

    def children(self, h):
        s = self.first_child[h]
        return range(s, s + self.n_children[h])

    def actions(self, h):
        s = self.first_child[h]
        return tuple(self.label[s:s + self.n_children[h]])

    def is_terminal(self, h):
        return self.player[h] == TERMINAL

    def history(self, h):
        path = []
        while h > 0:
            path.append(h)
            h = self.parent[h]
        path.reverse()
        return path

    @cached_property
    def depth(self):
        d = array("l", [0]) * len(self)
        for h in range(1, len(self)):
            d[h] = d[self.parent[h]] + 1
        return d

    def action_keys(self):
        keys = set()
        for h in range(1, len(self)):
            keys.add((self.player[self.parent[h]], self.label[h]))
            if self.signal[h] is not None:
                keys.add((CHANCE, self.signal[h]))
        return keys

    def replace(self, **kw):
        fields = dict(
            players=self.players, team=self.team, opponent=self.opponent,
            parent=self.parent, player=self.player,
            first_child=self.first_child, n_children=self.n_children,
            label=self.label, signal=self.signal, probs=self.probs,
            payoffs=self.payoffs, visibility=self.visibility,
            representation=self.representation, provenance=self.provenance,
            scope=self.scope, belief=self.belief,
            infoset_labels=self.infoset_labels, name=self.name, meta=self.meta)
        fields.update(kw)
        return Game(**fields)

    # -- visibility ------------------------------------------------------

    def observes(self, p, actor, label):
        if actor == p:
            return True
        try:
            return p in self.visibility[(actor, label)]
        except KeyError:
            raise VisibilityIncomplete(f"no visibility declared for {(actor, label)}") from None

    def visibility_for_set(self, players, actor, label):
        return visibility_for_set(self, players, actor, label)

    def _tokens(self, h, observer_set):
        """Tokens observed by every player of ``observer_set`` on the edge into ``h``.

        A signal riding on an edge reads exactly like a chance action with the
        same label, so collapsing a forced chance node never changes what
        anybody observes.
        """
        actor = self.player[self.parent[h]]
        lab = self.label[h]
        toks = ()
        if all(self.observes(p, actor, lab) for p in observer_set):
            toks = ((actor, lab),)
        sig = self.signal[h]
        if sig is not None and all(self.observes(p, CHANCE, sig) for p in observer_set):
            toks = toks + ((CHANCE, sig),)
        return toks

    def observation_ids(self, observer_set):
        """Interned observation-sequence ids per node plus the trie to decode them."""
        observer_set = tuple(observer_set)
        n = len(self)
        ids = array("l", [0]) * n
        trie = {}
        back = [None]
        for h in range(1, n):
            kid = ids[self.parent[h]]
            for tok in self._tokens(h, observer_set):
                k = (kid, tok)
                nxt = trie.get(k)
                if nxt is None:
                    nxt = len(back)
                    trie[k] = nxt
                    back.append(k)
                kid = nxt
            ids[h] = kid
        return ids, back

    @staticmethod
    def decode_key(back, kid):
        toks = []
        while kid:
            kid, tok = back[kid]
            toks.append(tok)
        toks.reverse()
        return tuple(toks)

    # -- information sets ------------------------------------------------

    @cached_property
    def _infoset_data(self):
        n = len(self)
        infoset_of = array("l", [-1]) * n
        groups = {}
        order = []
        obs = {}
        for p in range(self.num_players):
            obs[p] = None
        for h in range(n):
            p = self.player[h]
            if p < 0:
                continue
            if h in self.infoset_labels:
                gk = (p, "L", self.infoset_labels[h])
            else:
                if obs[p] is None:
                    obs[p] = self.observation_ids((p,))
                kid = obs[p][0][h]
                dummy = self.n_children[h] == 1 and self.label[self.first_child[h]] == DUMMY
                gk = (p, "O", kid, dummy)
            g = groups.get(gk)
            if g is None:
                g = groups[gk] = []
                order.append(gk)
            g.append(h)
        infosets = []
        for i, gk in enumerate(order):
            members = groups[gk]
            p = gk[0]
            acts = self.actions(members[0])
            for h in members:
                infoset_of[h] = i
                if self.actions(h) != acts:
                    raise InvalidGame(
                        f"nodes {members[0]} and {h} share an infoset of player {p} "
                        f"but have actions {acts} vs {self.actions(h)}")
            if gk[1] == "L":
                key = (("L", gk[2]),)
            else:
                key = self.decode_key(obs[p][1], gk[2])
                if gk[3]:
                    key = key + (("~", DUMMY),)
            infosets.append(Infoset(i, p, key, acts, tuple(members)))
        return infosets, infoset_of

    @property
    def infosets(self):
        return self._infoset_data[0]

    @property
    def infoset_of(self):
        return self._infoset_data[1]

    def infosets_of(self, p):
        return [I for I in self.infosets if I.owner == p]

    def derive_infosets(self):
        return self.infosets

    # -- public states ---------------------------------------------------

    def public_state_ids(self, players):
        players = tuple(sorted(players))
        cache = self.__dict__.setdefault("_pub_cache", {})
        if players not in cache:
            cache[players] = self.observation_ids(players)
        return cache[players]

    def compute_public_states(self, players):
        ids, back = self.public_state_ids(players)
        groups = {}
        for h in range(len(self)):
            groups.setdefault(ids[h], []).append(h)
        return [PublicState(frozenset(players), self.decode_key(back, k), tuple(v))
                for k, v in groups.items()]

    @cached_property
    def team_scopes(self):
        """For each team-public state id: the sorted team infosets it contains."""
        ids, back = self.public_state_ids(self.team)
        team = set(self.team)
        per = {}
        for I in self.infosets:
            if I.owner in team:
                per.setdefault(ids[I.nodes[0]], set()).add(I.id)
        infos = self.infosets
        return {k: tuple(sorted(v, key=lambda i: (infos[i].owner, repr(infos[i].key))))
                for k, v in per.items()}

    # -- checks ----------------------------------------------------------

    def check_public_turn_taking(self):
        """Return ``(True, None)`` or ``(False, infoset)`` for the first violation."""
        seq = array("l", [0]) * len(self)
        trie = {}
        for h in range(1, len(self)):
            k = (seq[self.parent[h]], self.player[self.parent[h]])
            sid = trie.get(k)
            if sid is None:
                sid = trie[k] = len(trie) + 1
            seq[h] = sid
        for I in self.infosets:
            s0 = seq[I.nodes[0]]
            if any(seq[h] != s0 for h in I.nodes):
                return False, I
        return True, None

    def is_completely_inflated(self):
        team = set(self.team)
        for actor, lab in self.action_keys():
            if actor in team and visibility_for_set(self, self.team, actor, lab) != PUB:
                return False
        return True

    def has_common_external_information(self):
        team = set(self.team)
        for actor, lab in self.action_keys():
            if actor in team:
                continue
            if visibility_for_set(self, self.team, actor, lab) == PRIV:
                return False
        return True

    def check_visibility(self):
        missing = sorted((k for k in self.action_keys() if k not in self.visibility),
                         key=repr)
        if missing:
            raise VisibilityIncomplete(f"no visibility declared for {missing[:5]}")

    def validate(self):
        return validate(self)

    def __repr__(self):
        return (f"Game(name={self.name!r}, repr={self.representation}, "
                f"nodes={len(self)}, players={self.players})")


def visibility_for_set(game, players, actor, label):
    """Three-valued visibility of an action for a set of players."""
    players = tuple(players)
    if not players:
        raise ValueError("empty player set")
    seen = [game.observes(p, actor, label) for p in players]
    if all(seen):
        return PUB
    if not any(seen):
        return HIDDEN
    return PRIV


# -- validation ------------------------------------------------------------

@dataclass
class Diagnostic:
    code: str
    message: str
    severity: str = "error"
    node: int | None = None


@dataclass
class Report:
    diagnostics: list = field(default_factory=list)
    public_turn_taking: bool = False
    completely_inflated: bool = False
    common_external_information: bool = False

    @property
    def ok(self):
        return not any(d.severity == "error" for d in self.diagnostics)

    def codes(self):
        return {d.code for d in self.diagnostics}

    def add(self, code, message, severity="error", node=None):
        self.diagnostics.append(Diagnostic(code, message, severity, node))

    def lines(self):
        out = [f"{d.severity}: {d.code}: {d.message}" for d in self.diagnostics]
        out.append(f"public_turn_taking: {self.public_turn_taking}")
        out.append(f"completely_inflated: {self.completely_inflated}")
        out.append(f"common_external_information: {self.common_external_information}")
        out.append("status: " + ("ok" if self.ok else "invalid"))
        return out


def validate(game):
    rep = Report()
    n = len(game)
    try:
        game.check_visibility()
    except VisibilityIncomplete as e:
        rep.add("visibility_incomplete", str(e))
        return rep
    for h in range(n):
        p = game.player[h]
        if p == TERMINAL:
            if h not in game.payoffs:
                rep.add("missing_payoff", f"terminal {h} has no payoff", node=h)
            elif len(game.payoffs[h]) != game.num_players:
                rep.add("payoff_arity", f"terminal {h} payoff arity", node=h)
            elif game.opponent is not None:
                s = sum(game.payoffs[h][q] for q in game.team) + game.payoffs[h][game.opponent]
                if s != 0:
                    rep.add("zero_sum", f"terminal {h}: team + opponent payoffs sum to {s}", node=h)
        elif p == CHANCE:
            pr = game.probs.get(h)
            if pr is None or len(pr) != game.n_children[h]:
                rep.add("chance_arity", f"chance node {h} distribution mismatch", node=h)
            elif sum(pr) != 1 or any(x < 0 for x in pr):
                rep.add("chance_normalization", f"chance node {h} sums to {sum(pr)}", node=h)
        elif p >= game.num_players:
            rep.add("bad_player", f"node {h} has player {p}", node=h)
    try:
        game.infosets
    except InvalidGame as e:
        rep.add("infoset_actions", str(e))
        return rep
    ptt, bad = game.check_public_turn_taking()
    rep.public_turn_taking = ptt
    rep.completely_inflated = game.is_completely_inflated() if game.team else True
    rep.common_external_information = (
        game.has_common_external_information() if game.team else True)
    if len(game.team) >= 2:
        _team_recall_diagnostics(game, rep, bad)
    return rep


def _team_recall_diagnostics(game, rep, bad_infoset):
    team = game.team
    for actor, lab in sorted(game.action_keys(), key=repr):
        if actor in team:
            hidden_from = [q for q in team if q != actor and not game.observes(q, actor, lab)]
            if hidden_from:
                rep.add("hidden_teammate_action",
                        f"action {lab!r} of player {actor} is hidden from team member(s) "
                        f"{hidden_from}", "warning")
                break
    if bad_infoset is not None:
        rep.add("non_visible_structure",
                f"infoset {bad_infoset.id} of player {bad_infoset.owner} mixes histories "
                "with different player sequences", "warning", bad_infoset.nodes[0])
    for actor, lab in sorted(game.action_keys(), key=repr):
        if actor in team:
            continue
        if visibility_for_set(game, team, actor, lab) == PRIV:
            rep.add("private_signal",
                    f"action {lab!r} of {'chance' if actor == CHANCE else actor} is "
                    "observed by part of the team only", "warning")
            break


def all_subsets(items, max_size=None):
    items = list(items)
    top = len(items) if max_size is None else max_size
    for k in range(1, top + 1):
        yield from combinations(items, k)
