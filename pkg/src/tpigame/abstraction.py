"""Imperfect-recall abstractions of folded team-public-information games.

``abstract_imperfect_recall`` forgets the prescription history: coordinator
nodes are grouped by the public actions seen so far and the exact belief of
the coordinator over the hidden state. ``abstract_lossy`` additionally drops
every prescription that recommends one action to all private states.
"""

from __future__ import annotations

from array import array

from .conversion import COORDINATOR
from .game import CHANCE, TERMINAL, GameBuilder, GameError, InvalidGame


class EmptyActionSet(GameError):
    pass


def _require_folded(game):
    if game.representation not in ("folded", "folded-lossy-filtered"):
        raise GameError(f"expected a folded game, got {game.representation!r}")


def public_sequences(game):
    """Id of the coordinator's observation sequence without its prescriptions."""
    n = len(game)
    pub = array("l", [0]) * n
    trie = {}
    for h in range(1, n):
        par = game.parent[h]
        pid = pub[par]
        for tok in game._tokens(h, (COORDINATOR,)):
            if tok[0] != COORDINATOR:
                pid = trie.setdefault((pid, tok), len(trie) + 1)
        pub[h] = pid
    return pub


def ir_keys(game):
    """Imperfect-recall key of every coordinator node.

    The key pairs the public sequence with the coordinator's exact belief,
    a sorted tuple of (source node, probability) over every source history
    consistent with its observations. Nodes of one perfect-recall infoset
    always share the key.
    """
    pub = public_sequences(game)
    return {h: (pub[h], b) for h, b in game.belief.items()
            if game.player[h] == COORDINATOR}


def abstract_imperfect_recall(game):
    """Re-key coordinator infosets by (public actions, belief)."""
    _require_folded(game)
    keys = ir_keys(game)
    intern = {}
    labels = {}
    for h, k in keys.items():
        labels[h] = intern.setdefault(k, f"ir{len(intern)}")
    out = game.replace(infoset_labels=labels,
                       representation=game.representation + "-ir"
                       if game.representation == "folded" else "folded-lossy")
    out.source = getattr(game, "source", None)
    out.base = game
    out.origin = None
    out.meta["ir_keys"] = {v: k for k, v in intern.items()}
    # merged nodes must share their prescription lists; raises otherwise
    out.infosets
    return out


def filter_children(game, keep, representation):
    """Copy ``game`` keeping, at each node, only the child indices in ``keep(h)``."""
    b = GameBuilder(game.players, game.team, game.opponent)
    b.visibility = dict(game.visibility)
    prov = [game.provenance[0] if game.provenance else 0]
    origin = [0]
    stack = [(0, 0)]
    while stack:
        h, hn = stack.pop()
        p = game.player[h]
        if p == TERMINAL:
            b.payoffs[hn] = game.payoffs[h]
            continue
        ks = keep(h)
        if not ks:
            raise EmptyActionSet(f"node {h} has no remaining actions")
        s = game.first_child[h]
        labels = [game.label[s + k] for k in ks]
        sigs = [game.signal[s + k] for k in ks]
        probs = [game.probs[h][k] for k in ks] if p == CHANCE else None
        kids = b.expand(hn, p, labels, probs, sigs)
        origin.extend(s + k for k in ks)
        if game.provenance is not None:
            prov.extend(game.provenance[s + k] for k in ks)
        if h in game.scope:
            b.scope[hn] = game.scope[h]
        if h in game.belief:
            b.belief[hn] = game.belief[h]
        for k, c in zip(ks, kids):
            stack.append((s + k, c))
    b.provenance = prov if game.provenance is not None else None
    g = b.build(representation=representation, name=game.name, meta=dict(game.meta))
    g.source = getattr(game, "source", None)
    g.origin = origin
    return g


def is_uniform_prescription(label):
    return len(set(label.split("/"))) == 1


def abstract_lossy(game, keep_single_scope=True):
    """Drop uniform prescriptions, then apply the imperfect-recall re-keying.

    Coordinator nodes whose scope is a single private state keep all their
    prescriptions (each of them is trivially uniform there).
    """
    _require_folded(game)

    def keep(h):
        k = game.n_children[h]
        if game.player[h] != COORDINATOR:
            return range(k)
        if keep_single_scope and len(game.scope[h]) == 1:
            return range(k)
        s = game.first_child[h]
        return [i for i in range(k) if not is_uniform_prescription(game.label[s + i])]

    filtered = filter_children(game, keep, "folded-lossy-filtered")
    out = abstract_imperfect_recall(filtered)
    # exploitability is measured against the unfiltered folded game
    out.base = game
    out.origin = filtered.origin
    return out


def check_merge_consistency(game):
    """Every abstracted infoset holds nodes with identical prescription lists."""
    try:
        game.infosets
    except InvalidGame as e:
        raise InvalidGame(f"abstraction merged incompatible nodes: {e}") from None
    return True
