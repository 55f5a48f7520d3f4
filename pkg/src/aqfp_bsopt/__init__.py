"""Buffer and splitter minimization for AQFP netlists under phase skipping."""

from .config import PhaseConfig
from .corpus import BENCHMARKS, load
from .flow import Solution, compute_slacks, optimize, strip_splitter_trees
from .initial import assign_initial_levels, min_tree_path_sum
from .levels import assign_levels, materialize_buffers, total_cost
from .netlist import Kind, Netlist, parse_bench, serialize
from .splitter import CostTuple, FanoutLeaf, Mode, build_tree, build_tree_dp
from .verify import (buffer_chain_reduce, check_equivalence, check_phase_legality, check_structure,
                     verify_solution)

__all__ = [
    "BENCHMARKS", "CostTuple", "FanoutLeaf", "Kind", "Mode", "Netlist", "PhaseConfig", "Solution",
    "assign_initial_levels", "assign_levels", "buffer_chain_reduce", "build_tree", "build_tree_dp",
    "check_equivalence", "check_phase_legality", "check_structure", "compute_slacks", "load",
    "materialize_buffers", "min_tree_path_sum", "optimize", "parse_bench", "serialize",
    "strip_splitter_trees", "total_cost", "verify_solution",
]
