"""Game files, convergence curves and strategy files.

Game documents are line-oriented text::

    tpigame 1
    name "21K3"
    representation "efg"
    players "team0" "team1" "adversary"
    team 0 1
    opponent 2
    nodes 160
    n 0 - - c 1/3 1/3 1/3
    n 1 0 "0:J" - c 1/2 1/2
    ...
    n 7 3 "c" - t -1/1 -1/1 2/1
    vis c "0:J" 0
    end

A node line is ``n id parent label signal kind ...`` with kind ``c`` (chance,
followed by the child probabilities), ``p`` (player, followed by its index) or
``t`` (terminal, followed by payoffs). Labels are JSON strings, ``-`` means
none. Rationals are always written ``num/den``. Optional tables follow the
visibility lines: ``prov``, ``scope``, ``belief`` and ``iset``. Abstracted
games embed the folded game they were cut from between ``base`` and
``endbase``.
"""

from __future__ import annotations

import csv
import json
import re
from array import array
from fractions import Fraction

from .game import CHANCE, TERMINAL, Game, GameError

FORMAT_VERSION = 1
_TOKEN = re.compile(r'"(?:[^"\\]|\\.)*"|\S+')


class ParseError(GameError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f"line {line}" + (f", column {column}" if column is not None else "")
        super().__init__(f"{where}: {message}" if line is not None else message)


class VersionMismatch(ParseError):
    pass


def _q(x):
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def _s(x):
    return "-" if x is None else json.dumps(x, ensure_ascii=False)


def _actor(p):
    return "c" if p == CHANCE else str(p)


# -- writing -----------------------------------------------------------------

def serialize_game(game):
    """Canonical text form; equal games give equal text."""
    return "\n".join(_lines(game)) + "\n"


def _lines(game):
    out = [f"tpigame {FORMAT_VERSION}",
           f"name {_s(game.name)}",
           f"representation {_s(game.representation)}",
           "players " + " ".join(_s(p) for p in game.players),
           "team " + " ".join(str(t) for t in game.team),
           f"opponent {'-' if game.opponent is None else game.opponent}",
           f"nodes {len(game)}"]
    for h in range(len(game)):
        par = game.parent[h]
        head = f"n {h} {par if h else '-'} {_s(game.label[h])} {_s(game.signal[h])}"
        p = game.player[h]
        if p == TERMINAL:
            out.append(f"{head} t " + " ".join(_q(u) for u in game.payoffs[h]))
        elif p == CHANCE:
            out.append(f"{head} c " + " ".join(_q(x) for x in game.probs[h]))
        else:
            out.append(f"{head} p {p}")
    for (actor, lab) in sorted(game.visibility, key=lambda k: (k[0], k[1])):
        obs = sorted(game.visibility[(actor, lab)])
        out.append(f"vis {_actor(actor)} {_s(lab)}" + "".join(f" {o}" for o in obs))
    if game.provenance is not None:
        out.append("prov " + " ".join(str(x) for x in game.provenance))
    for h in sorted(game.scope):
        out.append(f"scope {h} " + " ".join(str(i) for i in game.scope[h]))
    for h in sorted(game.belief):
        out.append(f"belief {h} " + " ".join(f"{s}:{_q(p)}" for s, p in game.belief[h]))
    for h in sorted(game.infoset_labels):
        out.append(f"iset {h} {_s(game.infoset_labels[h])}")
    base = getattr(game, "base", None)
    if base is not None and game.representation == "folded-lossy":
        out.append("base")
        out.extend(_lines(base))
        if game.origin is not None:
            out.append("origin " + " ".join(str(x) for x in game.origin))
        out.append("endbase")
    out.append("end")
    return out


def write_game(game, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(serialize_game(game))


# -- reading -----------------------------------------------------------------

class _Reader:
    def __init__(self, text):
        self.lines = text.splitlines()
        self.i = 0

    def next(self):
        while self.i < len(self.lines):
            raw = self.lines[self.i]
            self.i += 1
            if raw.strip() and not raw.lstrip().startswith("#"):
                return [(m.group(), m.start() + 1) for m in _TOKEN.finditer(raw)]
        raise ParseError("unexpected end of document", self.i)

    def err(self, msg, col=None):
        return ParseError(msg, self.i, col)


def _str(r, tok):
    text, col = tok
    if text == "-":
        return None
    if not text.startswith('"'):
        raise r.err(f"expected a quoted string, got {text!r}", col)
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        raise r.err("bad string literal", col) from None


def _int(r, tok):
    text, col = tok
    try:
        return int(text)
    except ValueError:
        raise r.err(f"expected an integer, got {text!r}", col) from None


def _rat(r, tok):
    text, col = tok
    m = re.fullmatch(r"(-?\d+)/(\d+)", text)
    if not m or int(m[2]) == 0:
        raise r.err(f"expected num/den, got {text!r}", col)
    return Fraction(int(m[1]), int(m[2]))


def _expect(r, toks, word):
    if not toks or toks[0][0] != word:
        got = toks[0][0] if toks else "<empty>"
        raise r.err(f"expected {word!r}, got {got!r}", toks[0][1] if toks else None)
    return toks[1:]


def parse_game(data):
    """Inverse of :func:`serialize_game`; raises ParseError with line/column."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    r = _Reader(data)
    g = _parse(r)
    toks = r.next()
    _expect(r, toks, "end")
    return g


def _parse(r):
    toks = r.next()
    rest = _expect(r, toks, "tpigame")
    if len(rest) != 1:
        raise r.err("missing format version")
    if _int(r, rest[0]) != FORMAT_VERSION:
        raise VersionMismatch(f"format {rest[0][0]} is not {FORMAT_VERSION}", r.i, rest[0][1])
    name = _str(r, _expect(r, r.next(), "name")[0])
    rep = _str(r, _expect(r, r.next(), "representation")[0])
    players = tuple(_str(r, t) for t in _expect(r, r.next(), "players"))
    team = tuple(_int(r, t) for t in _expect(r, r.next(), "team"))
    opp_tok = _expect(r, r.next(), "opponent")[0]
    opponent = None if opp_tok[0] == "-" else _int(r, opp_tok)
    n = _int(r, _expect(r, r.next(), "nodes")[0])
    parent = array("l", [-1]) * n
    player = array("b", [TERMINAL]) * n
    label = [None] * n
    signal = [None] * n
    probs, payoffs = {}, {}
    for h in range(n):
        toks = _expect(r, r.next(), "n")
        if len(toks) < 5:
            raise r.err("short node line")
        if _int(r, toks[0]) != h:
            raise r.err(f"node ids must be sequential, expected {h}", toks[0][1])
        if h:
            parent[h] = _int(r, toks[1])
            if not 0 <= parent[h] < h:
                raise r.err("parent must precede child", toks[1][1])
        label[h] = _str(r, toks[2])
        signal[h] = _str(r, toks[3])
        kind, col = toks[4]
        args = toks[5:]
        if kind == "t":
            payoffs[h] = tuple(_rat(r, t) for t in args)
            if len(payoffs[h]) != len(players):
                raise r.err("payoff arity differs from the player count", col)
        elif kind == "c":
            player[h] = CHANCE
            probs[h] = tuple(_rat(r, t) for t in args)
            if sum(probs[h]) != 1 or any(p < 0 for p in probs[h]):
                raise r.err(f"chance probabilities sum to {sum(probs[h])}", col)
        elif kind == "p":
            player[h] = _int(r, args[0]) if args else -3
            if not 0 <= player[h] < len(players):
                raise r.err("bad player index", col)
        else:
            raise r.err(f"unknown node kind {kind!r}", col)
    first = array("l", [0]) * n
    nch = array("l", [0]) * n
    for h in range(1, n):
        p = parent[h]
        if nch[p] == 0:
            first[p] = h
        elif first[p] + nch[p] != h:
            raise ParseError(f"children of node {p} are not contiguous", None)
        nch[p] += 1
    for h in range(n):
        if player[h] != TERMINAL and nch[h] == 0:
            raise ParseError(f"node {h} is a decision node without children")
        if player[h] == TERMINAL and nch[h]:
            raise ParseError(f"terminal {h} has children")
        if player[h] == CHANCE and len(probs[h]) != nch[h]:
            raise ParseError(f"chance node {h} lists {len(probs[h])} probabilities "
                             f"for {nch[h]} children")
    vis = {}
    prov = None
    scope, belief, isets = {}, {}, {}
    base = origin = None
    while True:
        save = r.i
        toks = r.next()
        word = toks[0][0]
        if word == "vis":
            a = toks[1][0]
            actor = CHANCE if a == "c" else _int(r, toks[1])
            vis[(actor, _str(r, toks[2]))] = frozenset(_int(r, t) for t in toks[3:])
        elif word == "prov":
            prov = [_int(r, t) for t in toks[1:]]
        elif word == "scope":
            scope[_int(r, toks[1])] = tuple(_int(r, t) for t in toks[2:])
        elif word == "belief":
            items = []
            for text, col in toks[2:]:
                s, _, p = text.partition(":")
                items.append((_int(r, (s, col)), _rat(r, (p, col))))
            belief[_int(r, toks[1])] = tuple(items)
        elif word == "iset":
            isets[_int(r, toks[1])] = _str(r, toks[2])
        elif word == "base":
            base = _parse(r)
            _expect(r, r.next(), "end")
            toks = r.next()
            if toks[0][0] == "origin":
                origin = [_int(r, t) for t in toks[1:]]
                toks = r.next()
            _expect(r, toks, "endbase")
        else:
            r.i = save
            break
    g = Game(players, team, opponent, parent, player, first, nch, label, signal,
             probs, payoffs, vis, representation=rep, provenance=prov, scope=scope,
             belief=belief, infoset_labels=isets, name=name)
    if rep == "folded-ir":
        g.base = g.replace(infoset_labels={}, representation="folded")
        g.origin = None
    elif base is not None:
        g.base = base
        g.origin = origin
    return g


def read_game(path):
    with open(path, encoding="utf-8") as f:
        return parse_game(f.read())


# -- curves and strategies ---------------------------------------------------

CURVE_COLUMNS = ("iteration", "wall_seconds", "exploitability")


def emit_curve(curve, path_or_file):
    """Write (iteration, wall_seconds, exploitability) rows; the log must be non-empty."""
    if not curve:
        raise ValueError("empty convergence log")
    own = isinstance(path_or_file, str)
    f = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(f)
        w.writerow(CURVE_COLUMNS)
        for pt in curve:
            w.writerow([pt.iteration, f"{pt.wall_seconds:.6f}", repr(float(pt.exploitability))])
    finally:
        if own:
            f.close()


def read_curve(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    return [(int(r["iteration"]), float(r["wall_seconds"]), float(r["exploitability"]))
            for r in rows]


def infoset_key(game, I):
    return f"{I.owner}|{I.key_str}"


def strategy_to_json(game, profile):
    """{infoset key: probability vector} with keys readable across runs."""
    infos = game.infosets
    return json.dumps({infoset_key(game, infos[i]): [float(x) for x in v]
                       for i, v in sorted(profile.items())}, indent=1, sort_keys=True)


def strategy_from_json(game, text):
    data = json.loads(text)
    by_key = {infoset_key(game, I): I for I in game.infosets}
    out = {}
    for k, v in data.items():
        I = by_key.get(k)
        if I is None:
            raise ParseError(f"strategy names unknown infoset {k!r}")
        if len(v) != len(I.actions):
            raise ParseError(f"infoset {k!r} expects {len(I.actions)} probabilities")
        out[I.id] = [float(x) for x in v]
    return out
