"""Adversarial team games converted to two-player team-public-information games."""

from .abstraction import abstract_imperfect_recall, abstract_lossy
from .conversion import convert_basic, convert_folded, convert_pruned
from .evaluation import (best_response, expected_utility, exploitability, map_rho,
                         map_sigma, tmecor_bruteforce, tree_stats)
from .game import Game, GameBuilder
from .generators import builtin_examples, gen_random_vefg, generate
from .io import parse_game, serialize_game
from .solver import solve_cfr_plus, solve_os_mccfr
from .transform import check_common_external_information, inflate_team, make_public_turn_taking

__version__ = "0.1.0"
