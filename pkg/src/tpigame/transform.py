"""Structural pre-transformations applied before conversion."""

from __future__ import annotations

from collections import deque

from .game import CHANCE, DUMMY, TERMINAL, GameBuilder, GameError


class NotTimeable(GameError):
    pass


def schedule(game):
    """Round-robin player order: team members, opponent, chance (those that act)."""
    acting = {game.player[h] for h in range(len(game)) if game.player[h] != TERMINAL}
    order = [p for p in game.team if p in acting]
    if game.opponent is not None and game.opponent in acting:
        order.append(game.opponent)
    order += [p for p in range(game.num_players)
              if p in acting and p not in order]
    if CHANCE in acting:
        order.append(CHANCE)
    return order


def _levels(game, order):
    """Level of every non-terminal node; nodes of one infoset share a level.

    Vertices are infosets (chance nodes stand alone); a level is the first
    slot of the vertex's player not earlier than one past every parent.
    A cycle among vertices means no exact timing exists.
    """
    k = len(order)
    slot = {p: i for i, p in enumerate(order)}
    io = game.infoset_of
    n = len(game)

    def vertex(h):
        return ("I", io[h]) if game.player[h] >= 0 else ("C", h)

    preds = {}
    succs = {}
    for h in range(n):
        if game.player[h] == TERMINAL:
            continue
        v = vertex(h)
        preds.setdefault(v, set())
        succs.setdefault(v, set())
        if h:
            u = vertex(game.parent[h])
            preds[v].add(u)
            succs[u].add(v)
    indeg = {v: len(ps) for v, ps in preds.items()}
    queue = deque(v for v, d in indeg.items() if d == 0)
    owner = {}
    for h in range(n):
        if game.player[h] != TERMINAL:
            owner[vertex(h)] = game.player[h]
    level = {}
    seen = 0
    while queue:
        v = queue.popleft()
        seen += 1
        lo = max((level[u] + 1 for u in preds[v]), default=0)
        s = slot[owner[v]]
        level[v] = lo + (s - lo) % k
        for w in succs[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                queue.append(w)
    if seen != len(indeg):
        raise NotTimeable("information sets force a cyclic timing")
    return {h: level[vertex(h)] for h in range(n) if game.player[h] != TERMINAL}


def make_public_turn_taking(game, allow_refinement=False):
    """Pad the tree so each level belongs to one scheduled player.

    Every node moves to the level computed by :func:`_levels`; skipped levels
    are filled with single-action dummy nodes that nobody but their actor
    observes. ``out.origin`` maps each output node to its source node (-1 for
    dummies).

    A dummy tells its actor where it sits relative to the actions it observed.
    When a source infoset mixes histories in which an observed action falls
    before versus after one of the actor's idle slots, the padded game would
    split that infoset and the player would gain strategies. Such inputs raise
    :class:`NotTimeable` unless ``allow_refinement`` is set.
    """
    order = schedule(game)
    lev = _levels(game, order)
    k = len(order)
    b = GameBuilder(game.players, game.team, game.opponent)
    b.visibility = dict(game.visibility)
    origin = [0]
    dummies = set()
    stack = [(0, 0, 0)]  # (source node, output node, output level)
    while stack:
        h, hn, at = stack.pop()
        p = game.player[h]
        if p == TERMINAL:
            b.payoffs[hn] = game.payoffs[h]
            origin[hn] = h
            continue
        while at < lev[h]:
            q = order[at % k]
            dummies.add(q)
            origin[hn] = -1
            (hn,) = b.expand(hn, q, [DUMMY], [1] if q == CHANCE else None)
            origin.append(-1)
            at += 1
        origin[hn] = h
        kids = b.expand(hn, p, list(game.actions(h)),
                        game.probs[h] if p == CHANCE else None,
                        [game.signal[c] for c in game.children(h)])
        origin.extend([-1] * len(kids))
        for c, cn in zip(game.children(h), kids):
            stack.append((c, cn, at + 1))
    for q in dummies:
        b.declare(q, DUMMY, ())
    out = b.build(representation=game.representation, name=game.name, meta=dict(game.meta))
    out.origin = origin
    if not allow_refinement:
        _check_no_split(game, out)
    return out


def _check_no_split(game, out):
    seen = {}
    for h in range(len(out)):
        h0 = out.origin[h]
        if h0 < 0 or game.player[h0] < 0:
            continue
        i = game.infoset_of[h0]
        j = out.infoset_of[h]
        if seen.setdefault(i, j) != j:
            I = game.infosets[i]
            raise NotTimeable(
                f"padding would split infoset {I.key_str!r} of player {I.owner}: "
                "its histories place observed actions in different timing slots")


def inflate_team(game):
    """Let every team member observe every teammate's actions."""
    team = set(game.team)
    vis = dict(game.visibility)
    for (actor, lab), obs in game.visibility.items():
        if actor in team:
            vis[(actor, lab)] = obs | team
    return game.replace(visibility=vis)


def check_common_external_information(game):
    """True iff no opponent or chance action is seen by only part of the team."""
    return game.has_common_external_information()
