"""CFR+ and outcome-sampling MCCFR for two-player zero-sum trees.

Trees are compiled once into breadth-first numpy arrays; one CFR+ iteration
is a handful of level-wise vectorized passes. Utilities are from the point of
view of player 0 (the coordinator in converted games); player 1 receives the
negation.
"""

from __future__ import annotations

import bisect
import itertools
import logging
import random
import time
from dataclasses import dataclass, field

import numpy as np

from .game import CHANCE, TERMINAL, GameError

log = logging.getLogger(__name__)


class NotTwoPlayerZeroSum(GameError):
    pass


class CompiledGame:
    """Breadth-first array view of a two-player zero-sum game.

    ``order[i]`` is the original id of compiled node ``i``. Children of a node
    are contiguous and, within a level, grouped in parent order.
    """

    def __init__(self, game, infoset_of=None):
        if game.num_players != 2:
            raise NotTwoPlayerZeroSum(f"{game.num_players} players")
        for z, u in game.payoffs.items():
            if u[0] + u[1] != 0:
                raise NotTwoPlayerZeroSum(f"terminal {z} is not zero-sum")
        self.game = game
        io = game.infoset_of if infoset_of is None else infoset_of
        n = len(game)
        order = np.empty(n, dtype=np.int64)
        order[0] = 0
        head, tail = 0, 1
        first = game.first_child
        nch = game.n_children
        while head < tail:
            h = int(order[head])
            k = nch[h]
            if k:
                s = first[h]
                order[tail:tail + k] = np.arange(s, s + k)
                tail += k
            head += 1
        self.order = order
        new_id = np.empty(n, dtype=np.int64)
        new_id[order] = np.arange(n)
        self.new_id = new_id

        player = np.frombuffer(game.player, dtype=np.int8).astype(np.int64)[order]
        parent_old = np.frombuffer(game.parent, dtype=np.int64 if game.parent.itemsize == 8
                                   else np.int32).astype(np.int64)[order]
        parent = np.full(n, -1, dtype=np.int64)
        parent[1:] = new_id[parent_old[1:]]
        depth = np.zeros(n, dtype=np.int64)
        for i in range(1, n):
            depth[i] = depth[parent[i]] + 1
        self.player = player
        self.parent = parent
        self.depth = depth
        self.n = n
        counts = np.bincount(depth)
        self.level_start = np.concatenate([[0], np.cumsum(counts)])
        self.n_levels = len(counts)

        # infosets: remap to dense per-compiled ids
        self.n_children = np.frombuffer(nch, dtype=np.int64 if nch.itemsize == 8
                                        else np.int32).astype(np.int64)[order]
        dec = np.nonzero(player >= 0)[0]
        old_inf = np.array([io[int(order[i])] for i in dec], dtype=np.int64)
        uniq, dense = np.unique(old_inf, return_inverse=True)
        node_infoset = np.full(n, -1, dtype=np.int64)
        node_infoset[dec] = dense
        self.node_infoset = node_infoset
        self.infoset_ids = uniq
        n_inf = len(uniq)
        inf_owner = np.zeros(n_inf, dtype=np.int64)
        inf_nact = np.zeros(n_inf, dtype=np.int64)
        inf_owner[dense] = player[dec]
        inf_nact[dense] = self.n_children[dec]
        # nodes sharing an infoset must agree on the action count
        if np.any(self.n_children[dec] != inf_nact[dense]):
            raise GameError("infoset with inconsistent action counts")
        self.infoset_owner = inf_owner
        self.infoset_nact = inf_nact
        self.infoset_offset = np.concatenate([[0], np.cumsum(inf_nact)])[:-1]
        self.n_seq = int(inf_nact.sum())
        self.seq_infoset = np.repeat(np.arange(n_inf), inf_nact)
        self.n_infosets = n_inf

        # edges (indexed by child)
        edge_seq = np.full(n, -1, dtype=np.int64)
        edge_prob = np.ones(n)
        child_rank = np.zeros(n, dtype=np.int64)
        first_new = np.zeros(n, dtype=np.int64)
        for i in range(n):
            k = self.n_children[i]
            if k:
                first_new[i] = new_id[first[int(order[i])]]
        self.first_child = first_new
        nonroot = np.arange(1, n)
        child_rank[nonroot] = nonroot - first_new[parent[nonroot]]
        par_player = player[parent[nonroot]]
        dec_edge = nonroot[par_player >= 0]
        edge_seq[dec_edge] = (self.infoset_offset[node_infoset[parent[dec_edge]]]
                              + child_rank[dec_edge])
        for i in np.nonzero(player == CHANCE)[0]:
            h = int(order[i])
            s = first_new[i]
            edge_prob[s:s + self.n_children[i]] = [float(p) for p in game.probs[h]]
        self.edge_seq = edge_seq
        self.edge_prob = edge_prob
        self.child_rank = child_rank
        util = np.zeros(n)
        term = np.nonzero(player == TERMINAL)[0]
        util[term] = [float(game.payoffs[int(order[i])][0]) for i in term]
        self.util = util
        self.is_terminal = player == TERMINAL

        # per level: children of level d live at level d+1; reduceat groups
        self._levels = []
        for d in range(self.n_levels):
            lo, hi = self.level_start[d], self.level_start[d + 1]
            nt = np.nonzero(self.n_children[lo:hi] > 0)[0] + lo
            if d + 1 < self.n_levels:
                clo = self.level_start[d + 1]
                starts = first_new[nt] - clo
            else:
                starts = np.zeros(0, dtype=np.int64)
            self._levels.append((lo, hi, nt, starts))
        self.aligned = self._check_alignment()

    def _check_alignment(self):
        dec = self.player >= 0
        inf = self.node_infoset[dec]
        dep = self.depth[dec]
        lo = np.full(self.n_infosets, 1 << 40)
        hi = np.full(self.n_infosets, -1)
        np.minimum.at(lo, inf, dep)
        np.maximum.at(hi, inf, dep)
        return bool(np.all(lo == hi))

    def uniform_strategy(self):
        return 1.0 / self.infoset_nact[self.seq_infoset]

    # -- passes ----------------------------------------------------------

    def edge_weights(self, sigma, p=None):
        """Multiplier per edge: chance prob, sigma at decision nodes.

        With ``p`` given, edges of player ``p`` get weight 1 (reach of the others).
        """
        w = self.edge_prob.copy()
        m = self.edge_seq >= 0
        s = sigma[self.edge_seq[m]]
        if p is not None:
            own = self.player[self.parent[m.nonzero()[0]]] == p
            s = np.where(own, 1.0, s)
        w[m] = s
        return w

    def reach(self, w):
        r = np.empty(self.n)
        r[0] = 1.0
        par = self.parent
        for d in range(1, self.n_levels):
            lo, hi = self.level_start[d], self.level_start[d + 1]
            r[lo:hi] = r[par[lo:hi]] * w[lo:hi]
        return r

    def values(self, w):
        """Expected player-0 utility of every node under edge weights ``w``."""
        v = self.util.copy()
        for d in range(self.n_levels - 2, -1, -1):
            lo, hi, nt, starts = self._levels[d]
            if len(nt) == 0:
                continue
            clo, chi = self.level_start[d + 1], self.level_start[d + 2]
            v[nt] = np.add.reduceat(w[clo:chi] * v[clo:chi], starts)
        return v

    def expected_value(self, sigma):
        return float(self.values(self.edge_weights(sigma))[0])

    def best_response_value(self, sigma, p):
        """Value for player 0 when player ``p`` best-responds to ``sigma``."""
        return self.best_response(sigma, p)[0]

    def best_response(self, sigma, p):
        """(player-0 value, chosen sequence per infoset of ``p``).

        ``p`` must have perfect recall in the compiled infoset partition.
        Ties go to the lowest action index. Unreached infosets get action 0.
        """
        if self.aligned:
            return self._br_levels(sigma, p)
        return self._br_generic(sigma, p)

    def _br_levels(self, sigma, p):
        w = self.edge_weights(sigma)
        wo = self.edge_weights(sigma, p)
        r = self.reach(wo)
        v = self.util.copy()
        sign = 1.0 if p == 0 else -1.0
        edge_seq = self.edge_seq
        choice = np.full(self.n_infosets, -1, dtype=np.int64)
        for d in range(self.n_levels - 2, -1, -1):
            lo, hi, nt, starts = self._levels[d]
            if len(nt) == 0:
                continue
            clo, chi = self.level_start[d + 1], self.level_start[d + 2]
            child_v = v[clo:chi]
            pl = self.player[nt]
            mine = pl == p
            if mine.any():
                # per infoset, the action maximizing the summed counterfactual value
                kids = np.arange(clo, chi)
                kpar = self.parent[kids]
                kmine = self.player[kpar] == p
                ks = edge_seq[kids[kmine]]
                score = np.bincount(ks, weights=sign * r[kpar[kmine]] * child_v[kmine],
                                    minlength=self.n_seq)
                infs = np.unique(self.seq_infoset[ks])
                best = self._argmax_per_infoset(score, infs)
                choice[infs] = best
                wl = w[clo:chi].copy()
                sel = np.zeros(self.n_seq)
                sel[best] = 1.0
                wl[kmine] = sel[ks]
            else:
                wl = w[clo:chi]
            v[nt] = np.add.reduceat(wl * child_v, starts)
        return float(v[0]), self._fill_choice(choice, p)

    def _fill_choice(self, choice, p):
        left = (choice < 0) & (self.infoset_owner == p)
        choice[left] = self.infoset_offset[left]
        return choice

    def _br_generic(self, sigma, p):
        # Infosets are decided deepest-first by their shallowest node; with
        # perfect recall every infoset below a node of I is decided earlier.
        w = self.edge_weights(sigma).tolist()
        r = self.reach(self.edge_weights(sigma, p))
        sign = 1.0 if p == 0 else -1.0
        player = self.player.tolist()
        fc = self.first_child.tolist()
        nch = self.n_children.tolist()
        inf = self.node_infoset.tolist()
        off = self.infoset_offset
        v = self.util.tolist()
        done = self.is_terminal.tolist()
        choice = np.full(self.n_infosets, -1, dtype=np.int64)
        pick = [0] * self.n_infosets

        def val(root):
            stack = [root]
            while stack:
                h = stack[-1]
                if done[h]:
                    stack.pop()
                    continue
                s = fc[h]
                kids = [s + pick[inf[h]]] if player[h] == p else range(s, s + nch[h])
                pending = [c for c in kids if not done[c]]
                if pending:
                    stack.extend(pending)
                    continue
                stack.pop()
                if player[h] == p:
                    v[h] = v[kids[0]]
                else:
                    v[h] = sum(w[c] * v[c] for c in kids)
                done[h] = True
            return v[root]

        nodes = np.nonzero(self.player == p)[0]
        mind = np.full(self.n_infosets, 1 << 40)
        np.minimum.at(mind, self.node_infoset[nodes], self.depth[nodes])
        members = {}
        for h in nodes.tolist():
            members.setdefault(inf[h], []).append(h)
        for i in sorted(members, key=lambda i: -mind[i]):
            k = int(self.infoset_nact[i])
            score = [0.0] * k
            for h in members[i]:
                rh = sign * r[h]
                s = fc[h]
                for a in range(k):
                    score[a] += rh * val(s + a)
            a = int(np.argmax(score))
            pick[i] = a
            choice[i] = off[i] + a
        return float(val(0)), self._fill_choice(choice, p)

    def _argmax_per_infoset(self, score, infosets):
        best = np.empty(len(infosets), dtype=np.int64)
        off = self.infoset_offset
        na = self.infoset_nact
        for j, i in enumerate(infosets):
            s = off[i]
            best[j] = s + int(np.argmax(score[s:s + na[i]]))
        return best

    def exploitability(self, sigma):
        """Sum of both players' best-response gains against ``sigma``."""
        br0 = self.best_response_value(sigma, 0)
        br1 = self.best_response_value(sigma, 1)
        return br0 - br1

    def normalize(self, x):
        tot = np.bincount(self.seq_infoset, weights=x, minlength=self.n_infosets)
        t = tot[self.seq_infoset]
        uni = self.uniform_strategy()
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(t > 0, x / np.where(t > 0, t, 1), uni)


@dataclass
class CurvePoint:
    iteration: int
    wall_seconds: float
    exploitability: float
    value: float


@dataclass
class SolveResult:
    average: np.ndarray
    value: float
    exploitability: float
    iterations: int
    curve: list = field(default_factory=list)
    compiled: CompiledGame = None

    def strategy_table(self):
        return average_strategy(self.compiled, self.average)


class CFRPlus:
    """CFR+ with alternating updates, regret clipping and linear averaging."""

    def __init__(self, game, infoset_of=None, compiled=None, exploit=None):
        self.cg = compiled or CompiledGame(game, infoset_of)
        cg = self.cg
        self.exploit = exploit or cg.exploitability
        self.regret = np.zeros(cg.n_seq)
        self.avg = np.zeros(cg.n_seq)
        self.sigma = cg.uniform_strategy()
        self.t = 0
        dec_edges = np.nonzero(cg.edge_seq >= 0)[0]
        self._dec_edges = dec_edges
        self._dec_par = cg.parent[dec_edges]
        self._dec_seq = cg.edge_seq[dec_edges]
        self._dec_owner = cg.player[self._dec_par]
        self._nodes_of = {p: np.nonzero(cg.player == p)[0] for p in (0, 1)}
        self._mine = {p: cg.infoset_owner[cg.seq_infoset] == p for p in (0, 1)}

    def _update(self, p):
        cg = self.cg
        w = cg.edge_weights(self.sigma)
        v = cg.values(w)
        r_other = cg.reach(cg.edge_weights(self.sigma, p))
        sign = 1.0 if p == 0 else -1.0
        m = self._dec_owner == p
        e = self._dec_edges[m]
        par = self._dec_par[m]
        inst = np.bincount(self._dec_seq[m], weights=sign * r_other[par] * (v[e] - v[par]),
                           minlength=cg.n_seq)
        mine = self._mine[p]
        nodes = self._nodes_of[p]
        own_reach = np.bincount(cg.node_infoset[nodes], weights=self._own_reach(p, w)[nodes],
                                minlength=cg.n_infosets)
        self.avg[mine] += self.t * own_reach[cg.seq_infoset[mine]] * self.sigma[mine]
        self.regret[mine] = np.maximum(self.regret[mine] + inst[mine], 0.0)
        self.sigma = np.where(mine, cg.normalize(self.regret), self.sigma)

    def _own_reach(self, p, w):
        cg = self.cg
        wo = np.ones(cg.n)
        m = cg.edge_seq >= 0
        idx = np.nonzero(m)[0]
        own = cg.player[cg.parent[idx]] == p
        wo[idx[own]] = w[idx[own]]
        return cg.reach(wo)

    def iterate(self, n=1):
        for _ in range(n):
            self.t += 1
            self._update(0)
            self._update(1)

    def average(self):
        cg = self.cg
        return cg.normalize(self.avg)

    def solve(self, iterations, target=None, log_every=None, timer=time.perf_counter,
              eval_points=None):
        start = timer()
        curve = []
        points = set(eval_points or [])
        for i in range(1, iterations + 1):
            self.iterate()
            last = i == iterations
            if (log_every and i % log_every == 0) or i in points or last or (
                    target is not None and i % 50 == 0):
                avg = self.average()
                ex = self.exploit(avg)
                val = self.cg.expected_value(avg)
                curve.append(CurvePoint(i, timer() - start, ex, val))
                log.info("cfr+ iter=%d expl=%.3g value=%.6f", i, ex, val)
                if target is not None and ex <= target:
                    break
        avg = self.average()
        pt = curve[-1]
        return SolveResult(avg, pt.value, pt.exploitability, self.t, curve, self.cg)


def _default_exploit(game, cg):
    from .evaluation import exploitability_fn
    return exploitability_fn(game, cg)


def solve_cfr_plus(game, iterations=1000, target=None, infoset_of=None, log_every=None,
                   compiled=None, eval_points=None):
    cg = compiled or CompiledGame(game, infoset_of)
    solver = CFRPlus(game, compiled=cg, exploit=_default_exploit(game, cg))
    return solver.solve(iterations, target, log_every, eval_points=eval_points)


class OutcomeSamplingMCCFR:
    """Outcome-sampling MCCFR with epsilon-on-policy exploration.

    Each iteration samples one trajectory per updating player; regrets use
    regret matching and the average strategy is accumulated stochastically
    with importance weights. A trajectory touches only a few small infosets,
    so the walk runs on plain lists; ``random.Random(seed)`` drives sampling.
    """

    def __init__(self, game, epsilon=0.6, seed=0, infoset_of=None, compiled=None,
                 exploit=None):
        self.cg = compiled or CompiledGame(game, infoset_of)
        cg = self.cg
        self.exploit = exploit or cg.exploitability
        self.eps = epsilon
        self.rng = random.Random(seed)
        self._regret = [0.0] * cg.n_seq
        self._avg = [0.0] * cg.n_seq
        self.t = 0
        self._fc = cg.first_child.tolist()
        self._player = cg.player.tolist()
        self._inf = cg.node_infoset.tolist()
        self._off = cg.infoset_offset.tolist()
        self._nact = cg.infoset_nact.tolist()
        self._term = cg.is_terminal.tolist()
        self._util = cg.util.tolist()
        self._cum = {}
        for i in np.nonzero(cg.player == CHANCE)[0].tolist():
            s = self._fc[i]
            self._cum[i] = list(itertools.accumulate(cg.edge_prob[s:s + cg.n_children[i]]))

    @property
    def regret(self):
        return np.array(self._regret)

    def _episode(self, p):
        fc, player, inf, off, nact = self._fc, self._player, self._inf, self._off, self._nact
        term = self._term
        R, A = self._regret, self._avg
        rnd = self.rng.random
        eps = self.eps
        h = 0
        path = []
        pi_other = 1.0  # reach of the non-updating player under its policy
        q = 1.0         # sampling probability of the players' choices
        q_own = 1.0     # sampling probability of the updating player's choices
        while not term[h]:
            pl = player[h]
            if pl == CHANCE:
                cum = self._cum[h]
                a = min(bisect.bisect_right(cum, rnd() * cum[-1]), len(cum) - 1)
                h = fc[h] + a
                continue
            i = inf[h]
            s = off[i]
            k = nact[i]
            pos = [x if x > 0.0 else 0.0 for x in R[s:s + k]]
            tot = sum(pos)
            sig = [x / tot for x in pos] if tot > 0.0 else [1.0 / k] * k
            if pl == p:
                samp = [eps / k + (1.0 - eps) * x for x in sig]
            else:
                samp = sig
                w = 1.0 / q_own
                for j in range(k):
                    A[s + j] += sig[j] * w
            x = rnd()
            a = k - 1
            acc = 0.0
            for j in range(k):
                acc += samp[j]
                if x < acc:
                    a = j
                    break
            path.append((pl == p, s, k, sig, a, pi_other))
            if pl == p:
                q_own *= samp[a]
            else:
                pi_other *= sig[a]
            q *= samp[a]
            h = fc[h] + a
        u = self._util[h] * (1.0 if p == 0 else -1.0)
        tail = 1.0  # target-policy reach from the child of the current node to the leaf
        for mine, s, k, sig, a, po in reversed(path):
            if mine:
                w = u * po / q * tail
                for j in range(k):
                    R[s + j] -= w * sig[a]
                R[s + a] += w
            tail *= sig[a]

    def iterate(self, n=1):
        for _ in range(n):
            self.t += 1
            self._episode(0)
            self._episode(1)

    def average(self):
        return self.cg.normalize(np.array(self._avg))

    def solve(self, iterations, log_every=None, timer=time.perf_counter):
        start = timer()
        curve = []
        step = log_every or max(1, iterations // 20)
        for i in range(1, iterations + 1):
            self.iterate()
            if i % step == 0 or i == iterations:
                avg = self.average()
                ex = self.exploit(avg)
                val = self.cg.expected_value(avg)
                curve.append(CurvePoint(i, timer() - start, ex, val))
                log.info("os-mccfr iter=%d expl=%.3g value=%.6f", i, ex, val)
        pt = curve[-1]
        return SolveResult(self.average(), pt.value, pt.exploitability, self.t, curve, self.cg)


def solve_os_mccfr(game, iterations=100000, epsilon=0.6, seed=0, infoset_of=None,
                   log_every=None, compiled=None):
    cg = compiled or CompiledGame(game, infoset_of)
    solver = OutcomeSamplingMCCFR(game, epsilon, seed, compiled=cg,
                                  exploit=_default_exploit(game, cg))
    return solver.solve(iterations, log_every)


def average_strategy(cg, avg):
    """Map original infoset id -> {action label: probability}."""
    game = cg.game
    out = {}
    for j, i in enumerate(cg.infoset_ids):
        I = game.infosets[int(i)] if cg.game.infosets and int(i) < len(game.infosets) else None
        s = cg.infoset_offset[j]
        k = cg.infoset_nact[j]
        labels = I.actions if I is not None else tuple(range(k))
        out[int(i)] = {lab: float(p) for lab, p in zip(labels, avg[s:s + k])}
    return out
