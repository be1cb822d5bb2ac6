"""Evaluation: utilities, best responses, exploitability, strategy maps,
the brute-force correlated team oracle and tree statistics.

A *profile* maps infoset ids to probability vectors aligned with the
infoset's actions. A *plan* maps infoset ids to one action label.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .conversion import COORDINATOR, prescription_label
from .game import CHANCE, DUMMY, TERMINAL, GameError
from .solver import CompiledGame


class MissingInfosetPolicy(GameError):
    pass


class ImperfectRecallResponder(GameError):
    pass


class ProvenanceMissing(GameError):
    pass


class BudgetExceeded(GameError):
    pass


ABSTRACT = ("folded-ir", "folded-lossy")


# -- profiles ----------------------------------------------------------------

def uniform_profile(game):
    return {I.id: [Fraction(1, len(I.actions))] * len(I.actions) for I in game.infosets}


def plan_profile(game, *plans):
    """Pure profile from plans; infosets missing from every plan stay absent."""
    out = {}
    infos = game.infosets
    for plan in plans:
        for i, a in plan.items():
            acts = infos[i].actions
            out[i] = [Fraction(int(x == a)) for x in acts]
    return out


def profile_to_vector(cg, profile):
    sigma = cg.uniform_strategy()
    for j, i in enumerate(cg.infoset_ids.tolist()):
        if i in profile:
            s = cg.infoset_offset[j]
            sigma[s:s + cg.infoset_nact[j]] = [float(x) for x in profile[i]]
    return sigma


def vector_to_profile(cg, sigma):
    out = {}
    for j, i in enumerate(cg.infoset_ids.tolist()):
        s = cg.infoset_offset[j]
        out[i] = sigma[s:s + cg.infoset_nact[j]].tolist()
    return out


def expected_utility(game, profile):
    """Exact expected payoff of every player (Fractions if the profile is exact)."""
    io = game.infoset_of
    total = [0] * game.num_players
    stack = [(0, Fraction(1))]
    while stack:
        h, r = stack.pop()
        p = game.player[h]
        if p == TERMINAL:
            for q, u in enumerate(game.payoffs[h]):
                total[q] += r * u
            continue
        if p == CHANCE:
            dist = game.probs[h]
        else:
            dist = profile.get(io[h])
            if dist is None:
                raise MissingInfosetPolicy(f"no policy for infoset {io[h]} of player {p}")
        for c, x in zip(game.children(h), dist):
            if x:
                stack.append((c, r * x))
    return tuple(total)


# -- recall ----------------------------------------------------------------------

def has_perfect_recall(game, p):
    """Whether all nodes of each infoset of ``p`` share p's own action sequence."""
    seq = [0] * len(game)
    trie = {}
    io = game.infoset_of
    for h in range(1, len(game)):
        par = game.parent[h]
        if game.player[par] == p:
            k = (seq[par], io[par], h - game.first_child[par])
            seq[h] = trie.setdefault(k, len(trie) + 1)
        else:
            seq[h] = seq[par]
    for I in game.infosets_of(p):
        if len({seq[h] for h in I.nodes}) > 1:
            return False
    return True


# -- best responses ----------------------------------------------------------

def best_response(game, profile, responder):
    """(responder value, pure plan) against the fixed other side of a 2p0s game."""
    if not has_perfect_recall(game, responder):
        raise ImperfectRecallResponder(
            f"player {responder} forgets in {game.representation}; lift to the folded game")
    cg = CompiledGame(game)
    sigma = profile_to_vector(cg, profile)
    v, choice = cg.best_response(sigma, responder)
    plan = {}
    for j in np.nonzero(cg.infoset_owner == responder)[0].tolist():
        i = int(cg.infoset_ids[j])
        plan[i] = game.infosets[i].actions[int(choice[j] - cg.infoset_offset[j])]
    return (v if responder == 0 else -v), plan


def _base_map(game, cg, cgb):
    """Dense base adversary infoset -> dense abstract infoset (or -1)."""
    base = game.base
    origin = getattr(game, "origin", None)
    inv = None if origin is None else {o: k for k, o in enumerate(origin)}
    io = game.infoset_of
    dense = {int(i): j for j, i in enumerate(cg.infoset_ids.tolist())}
    out = np.full(cgb.n_infosets, -1, dtype=np.int64)
    for j, i in enumerate(cgb.infoset_ids.tolist()):
        I = base.infosets[i]
        if I.owner == COORDINATOR:
            continue
        for h in I.nodes:
            k = h if inv is None else inv.get(h)
            if k is not None:
                out[j] = dense[io[k]]
                break
    return out


def exploitability_fn(game, cg=None):
    """Callable sigma -> exploitability for solver vectors compiled from ``game``.

    For abstracted games the adversary responds in the abstract tree and the
    coordinator responds in the folded perfect-recall game, to the adversary
    strategy carried over infoset by infoset.
    """
    cg = cg or CompiledGame(game)
    if game.representation not in ABSTRACT:
        return cg.exploitability
    cgb = CompiledGame(game.base)
    amap = _base_map(game, cg, cgb)
    src_seq, dst_seq = [], []
    for j in np.nonzero(amap >= 0)[0].tolist():
        k = amap[j]
        n = cgb.infoset_nact[j]
        if n != cg.infoset_nact[k]:
            raise GameError("adversary infoset differs between abstraction and base")
        dst_seq.extend(range(cgb.infoset_offset[j], cgb.infoset_offset[j] + n))
        src_seq.extend(range(cg.infoset_offset[k], cg.infoset_offset[k] + n))
    src_seq = np.array(src_seq, dtype=np.int64)
    dst_seq = np.array(dst_seq, dtype=np.int64)

    def gap(sigma):
        br_o = cg.best_response_value(sigma, 1)
        sb = cgb.uniform_strategy()
        sb[dst_seq] = sigma[src_seq]
        br_t = cgb.best_response_value(sb, 0)
        return br_t - br_o

    return gap


def exploitability(game, profile):
    """Sum of both best-response gains against ``profile`` (0 iff equilibrium)."""
    cg = CompiledGame(game)
    sigma = profile_to_vector(cg, profile)
    if game.representation not in ABSTRACT:
        for p in (0, 1):
            if not has_perfect_recall(game, p):
                raise ImperfectRecallResponder(f"player {p} forgets; lift first")
    return exploitability_fn(game, cg)(sigma)


# -- strategy maps -----------------------------------------------------------

def _require_provenance(tpi):
    if tpi.provenance is None or tpi.representation not in ("basic", "pruned"):
        raise ProvenanceMissing(
            f"{tpi.representation} game carries no usable provenance for plan maps")


def map_rho(plan_T, src, tpi):
    """Coordinator plan issuing, everywhere it is reached, the team plan's actions."""
    _require_provenance(tpi)
    infos = src.infosets
    io = tpi.infoset_of
    plan_t = {}
    stack = [0]
    while stack:
        h = stack.pop()
        p = tpi.player[h]
        if p == TERMINAL:
            continue
        if p == COORDINATOR:
            scope = tpi.scope[h]
            lab = prescription_label(tuple(plan_T.get(i, infos[i].actions[0]) for i in scope))
            old = plan_t.setdefault(io[h], lab)
            if old != lab:
                raise GameError(f"coordinator infoset {io[h]} reached with two prescriptions")
            s = tpi.first_child[h]
            stack.append(s + tpi.actions(h).index(lab))
        else:
            stack.extend(tpi.children(h))
    return plan_t


def map_sigma(plan_t, tpi, src):
    """Joint team plan reading each team action off the reached prescriptions."""
    _require_provenance(tpi)
    io = tpi.infoset_of
    plan_T = {}
    stack = [0]
    while stack:
        h = stack.pop()
        p = tpi.player[h]
        if p == TERMINAL:
            continue
        if p == COORDINATOR:
            lab = plan_t[io[h]]
            for i, a in zip(tpi.scope[h], lab.split("/")):
                if plan_T.setdefault(i, a) != a:
                    raise GameError(f"team infoset {i} prescribed two actions")
            stack.append(tpi.first_child[h] + tpi.actions(h).index(lab))
        else:
            stack.extend(tpi.children(h))
    return plan_T


def _mixed(fn, dist, *args):
    out = {}
    for plan, pr in dist:
        key = tuple(sorted(fn(dict(plan), *args).items()))
        out[key] = out.get(key, 0) + pr
    return out


def map_rho_mixed(dist, src, tpi):
    """Sum mapped masses; ``dist`` is an iterable of (plan, probability)."""
    return _mixed(map_rho, dist, src, tpi)


def map_sigma_mixed(dist, tpi, src):
    return _mixed(map_sigma, dist, tpi, src)


def opponent_plan_to_tpi(plan_o, src, tpi):
    """Carry a source opponent plan to the converted game through provenance."""
    _require_provenance(tpi)
    sio = src.infoset_of
    out = {}
    for I in tpi.infosets_of(tpi.opponent):
        out[I.id] = plan_o.get(sio[tpi.provenance[I.nodes[0]]])
    return {k: v for k, v in out.items() if v is not None}


# -- reduced plans and the oracle --------------------------------------------

def reduced_plans(game, players, budget=None):
    """Reduced pure plans of the player set ``players`` (joint for a team).

    Infosets made unreachable by the plan's own earlier choices are left out.
    """
    players = set(players)
    io = game.infoset_of
    out = []

    def rec(stack, plan):
        stack = list(stack)
        while stack:
            h = stack.pop()
            p = game.player[h]
            if p == TERMINAL:
                continue
            if p in players:
                i = io[h]
                s = game.first_child[h]
                if i in plan:
                    stack.append(s + game.actions(h).index(plan[i]))
                    continue
                for k, a in enumerate(game.actions(h)):
                    rec(stack + [s + k], {**plan, i: a})
                return
            stack.extend(game.children(h))
        out.append(plan)
        if budget is not None and len(out) > budget:
            raise BudgetExceeded(f"more than {budget} reduced plans")

    rec([0], {})
    return out


def _leaf_indicator(game, leaves, plans, players):
    io = game.infoset_of
    col = {z: k for k, z in enumerate(leaves)}
    m = np.zeros((len(plans), len(leaves)))
    for r, plan in enumerate(plans):
        stack = [0]
        while stack:
            h = stack.pop()
            p = game.player[h]
            if p == TERMINAL:
                m[r, col[h]] = 1.0
            elif p in players:
                stack.append(game.first_child[h] + game.actions(h).index(plan[io[h]]))
            else:
                stack.extend(game.children(h))
    return m


def _chance_reach(game):
    reach = {}
    stack = [(0, Fraction(1))]
    while stack:
        h, r = stack.pop()
        p = game.player[h]
        if p == TERMINAL:
            reach[h] = r
        elif p == CHANCE:
            for c, x in zip(game.children(h), game.probs[h]):
                stack.append((c, r * x))
        else:
            stack.extend((c, r) for c in game.children(h))
    return reach


def team_payoff_matrix(game, budget=1000):
    """(team plans, opponent plans, matrix of expected team payoffs)."""
    team = set(game.team)
    tplans = reduced_plans(game, team, budget)
    oplans = reduced_plans(game, {game.opponent}, budget) if game.opponent is not None else [{}]
    reach = _chance_reach(game)
    leaves = sorted(reach)
    cu = np.array([float(reach[z] * sum(game.payoffs[z][q] for q in game.team))
                   for z in leaves])
    T = _leaf_indicator(game, leaves, tplans, team)
    O = _leaf_indicator(game, leaves, oplans, {game.opponent})
    return tplans, oplans, (T * cu) @ O.T


def solve_matrix(M, tol=1e-6, max_iter=200000):
    """Row player's max-min value of ``M`` by alternating regret matching plus.

    Returns (value, row strategy, column strategy, gap). The value is the
    midpoint of the certified bounds.
    """
    n, m = M.shape
    rx, ry = np.zeros(n), np.zeros(m)
    ax, ay = np.zeros(n), np.zeros(m)
    x, y = np.full(n, 1 / n), np.full(m, 1 / m)
    lo, hi, gap = -np.inf, np.inf, np.inf
    for t in range(1, max_iter + 1):
        u = M @ y
        rx = np.maximum(rx + u - x @ u, 0)
        x = rx / rx.sum() if rx.sum() > 0 else np.full(n, 1 / n)
        ax += t * x
        v = x @ M
        ry = np.maximum(ry - v + v @ y, 0)
        y = ry / ry.sum() if ry.sum() > 0 else np.full(m, 1 / m)
        ay += t * y
        if t % 10 == 0 or t == 1:
            xa, ya = ax / ax.sum(), ay / ay.sum()
            lo, hi = float((xa @ M).min()), float((M @ ya).max())
            gap = hi - lo
            if gap <= tol:
                break
    xa, ya = ax / ax.sum(), ay / ay.sum()
    return (lo + hi) / 2, xa, ya, gap


def tmecor_bruteforce(src, budget=1000, tol=1e-6):
    """Team max-min value over correlated joint plans, by brute force.

    Returns (value, [(plan, probability), ...]) with zero-mass plans dropped.
    """
    tplans, oplans, M = team_payoff_matrix(src, budget)
    if len(tplans) * len(oplans) > budget * budget:
        raise BudgetExceeded("payoff matrix too large")
    value, x, _, _ = solve_matrix(M, tol)
    dist = [(p, float(w)) for p, w in zip(tplans, x) if w > 0]
    return value, dist


# -- statistics ------------------------------------------------------------------

@dataclass
class TreeStats:
    nodes: int
    team_infosets: int
    adversary_infosets: int
    team_actions: int
    adversary_actions: int
    terminals: int

    @property
    def team_sequences(self):
        return self.team_actions + 1

    @property
    def adversary_sequences(self):
        return self.adversary_actions + 1

    def as_dict(self):
        d = asdict(self)
        d["team_sequences"] = self.team_sequences
        d["adversary_sequences"] = self.adversary_sequences
        return d


def _is_dummy(game, h):
    return game.n_children[h] == 1 and game.label[game.first_child[h]] == DUMMY


def tree_stats(game, count_dummies=False):
    """Sizes as tallied in the benchmark tables.

    Actions are summed over infosets. Padding nodes from the turn-taking
    transform are left out of every tally unless ``count_dummies``.
    """
    team = set(game.team)
    nodes = len(game)
    if not count_dummies:
        nodes -= sum(1 for h in range(len(game)) if game.player[h] >= 0 and _is_dummy(game, h))
    ti = ai = ta = aa = 0
    for I in game.infosets:
        if _is_dummy(game, I.nodes[0]):
            continue
        if I.owner in team:
            ti += 1
            ta += len(I.actions)
        elif I.owner == game.opponent:
            ai += 1
            aa += len(I.actions)
    terms = sum(1 for h in range(len(game)) if game.player[h] == TERMINAL)
    return TreeStats(nodes, ti, ai, ta, aa, terms)
