"""Command-line entry point: ``tpigame <command> ...``.

Exit codes: 0 on success, 1 when a game or document fails validation,
2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import io as gio
from .abstraction import abstract_imperfect_recall, abstract_lossy
from .conversion import convert_basic, convert_folded, convert_pruned
from .evaluation import (exploitability, expected_utility, tmecor_bruteforce,
                         tree_stats, vector_to_profile)
from .game import GameError
from .generators import (INSTANCE_GRAMMAR, InvalidParams, builtin_examples, generate,
                         gen_random_vefg)
from .solver import solve_cfr_plus, solve_os_mccfr
from .transform import inflate_team, make_public_turn_taking

log = logging.getLogger("tpigame")

REPRS = ("basic", "pruned", "folded", "folded-ir", "folded-lossy")


def _read(path):
    if path == "-":
        return gio.parse_game(sys.stdin.read())
    return gio.read_game(path)


def _write(game, path):
    text = gio.serialize_game(game)
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)


def cmd_generate(a):
    name = a.instance
    if name.startswith("random:"):
        g = gen_random_vefg(int(name.split(":", 1)[1]), budget=a.node_budget or 40)
    elif name.startswith("builtin:"):
        ex = builtin_examples()
        key = name.split(":", 1)[1]
        if key not in ex:
            raise InvalidParams(f"unknown builtin {key!r}; have {sorted(ex)}")
        g = ex[key]
    else:
        g = generate(name, adversary_seat=a.adversary_seat)
    _write(g, a.output)


def convert(game, rep):
    if rep == "basic":
        return convert_basic(game)
    if rep == "pruned":
        return convert_pruned(game)
    f = convert_folded(game)
    if rep == "folded":
        return f
    if rep == "folded-ir":
        return abstract_imperfect_recall(f)
    return abstract_lossy(f)


def cmd_convert(a):
    g = _read(a.input)
    if a.prepare:
        g = inflate_team(make_public_turn_taking(g))
    out = convert(g, a.repr)
    if a.node_budget and len(out) > a.node_budget:
        raise GameError(f"converted game has {len(out)} nodes, above the budget")
    _write(out, a.output)


def cmd_stats(a):
    g = _read(a.input)
    st = tree_stats(g, count_dummies=a.count_dummies).as_dict()
    if a.format == "json":
        print(json.dumps(st, sort_keys=True))
    elif a.format == "csv":
        print(",".join(st))
        print(",".join(str(v) for v in st.values()))
    else:
        w = max(len(k) for k in st)
        for k, v in st.items():
            print(f"{k:<{w}}  {v}")


def cmd_solve(a):
    g = _read(a.input)
    if a.algo == "cfr+":
        res = solve_cfr_plus(g, a.iters, target=a.tolerance, log_every=a.eval_every)
    else:
        res = solve_os_mccfr(g, a.iters, epsilon=a.epsilon, seed=a.seed,
                             log_every=a.eval_every)
    print(f"value {res.value:.6f}")
    print(f"exploitability {res.exploitability:.3e}")
    print(f"iterations {res.iterations}")
    if a.curve:
        gio.emit_curve(res.curve, a.curve)
    if a.figure:
        from .plotting import plot_curves
        plot_curves({a.algo: res.curve}, a.figure, title=g.name)
    if a.strategy_out:
        prof = vector_to_profile(res.compiled, res.average)
        with open(a.strategy_out, "w") as f:
            f.write(gio.strategy_to_json(g, prof))


def cmd_eval(a):
    g = _read(a.input)
    with open(a.strategy) as f:
        prof = gio.strategy_from_json(g, f.read())
    print(f"value {float(expected_utility(g, prof)[0]):.6f}")
    print(f"exploitability {exploitability(g, prof):.3e}")


def cmd_oracle(a):
    g = _read(a.input)
    value, dist = tmecor_bruteforce(g, budget=a.node_budget or 1000, tol=a.tolerance or 1e-6)
    print(f"value {value:.6f}")
    print(f"support {len(dist)}")


def cmd_validate(a):
    g = _read(a.input)
    rep = g.validate()
    for line in rep.lines():
        print(line)
    return 0 if rep.ok else 1


def build_parser():
    p = argparse.ArgumentParser(prog="tpigame", description=__doc__.splitlines()[0])
    p.add_argument("--adversary-seat", type=int, default=None,
                   help="seat of the adversary in generated poker (default: last)")
    p.add_argument("--node-budget", type=int, default=None,
                   help="size cap: random generation, conversion output, oracle plans")
    p.add_argument("--tolerance", type=float, default=None,
                   help="stop solving below this exploitability; oracle gap")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("generate", help=f"instance name ({INSTANCE_GRAMMAR}), "
                       "random:SEED or builtin:NAME")
    s.add_argument("instance")
    s.add_argument("-o", "--output", default="-")
    s.set_defaults(fn=cmd_generate)

    s = sub.add_parser("convert")
    s.add_argument("input", nargs="?", default="-")
    s.add_argument("--repr", choices=REPRS, default="basic")
    s.add_argument("--prepare", action="store_true",
                   help="apply turn-taking padding and team inflation first")
    s.add_argument("-o", "--output", default="-")
    s.set_defaults(fn=cmd_convert)

    s = sub.add_parser("stats")
    s.add_argument("input", nargs="?", default="-")
    s.add_argument("--format", choices=("table", "json", "csv"), default="table")
    s.add_argument("--count-dummies", action="store_true")
    s.set_defaults(fn=cmd_stats)

    s = sub.add_parser("solve")
    s.add_argument("input", nargs="?", default="-")
    s.add_argument("--algo", choices=("cfr+", "osmccfr"), default="cfr+")
    s.add_argument("--iters", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--epsilon", type=float, default=0.6)
    s.add_argument("--eval-every", type=int, default=None)
    s.add_argument("--curve", help="CSV of iteration, wall_seconds, exploitability")
    s.add_argument("--figure", help="PNG with the convergence curves")
    s.add_argument("--strategy-out", help="JSON average strategy")
    s.set_defaults(fn=cmd_solve)

    s = sub.add_parser("eval")
    s.add_argument("input", nargs="?", default="-")
    s.add_argument("--strategy", required=True)
    s.set_defaults(fn=cmd_eval)

    s = sub.add_parser("oracle")
    s.add_argument("input", nargs="?", default="-")
    s.set_defaults(fn=cmd_oracle)

    s = sub.add_parser("validate")
    s.add_argument("input", nargs="?", default="-")
    s.set_defaults(fn=cmd_validate)
    return p


def main(argv=None):
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return a.fn(a) or 0
    except (GameError, InvalidParams, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
