"""Simulator, schedule compiler and property checker for HTLC multi-party swaps."""

from .engine import Trace, hash_secret, run
from .outcomes import Outcome, classify, dominates
from .schedule import Schedule, build_schedule, compile_bdp, compile_naive, compile_rdp
from .swapgraph import (
    ReuniclusDecomposition,
    SwapDigraph,
    compute_distances,
    is_reuniclus,
    parse_digraph,
    reuniclus_decompose,
)

__all__ = [
    "ReuniclusDecomposition",
    "Outcome",
    "Schedule",
    "SwapDigraph",
    "Trace",
    "build_schedule",
    "classify",
    "compile_bdp",
    "compile_naive",
    "compile_rdp",
    "compute_distances",
    "dominates",
    "hash_secret",
    "is_reuniclus",
    "parse_digraph",
    "reuniclus_decompose",
    "run",
]
