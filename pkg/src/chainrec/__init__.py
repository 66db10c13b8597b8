"""Finite box-grid approximations of chain recurrence for maps of compact spaces."""
from .chain_graph import ChainDecomposition, ChainGraph, ChainGraphParams, build_chain_graph, scc_decompose
from .errors import AnalysisError, ChainrecError, ValidationError
from .phase_space import Domain, Grid, subdivide
from .systems import SystemDef, builtin, parse_system, piecewise

__version__ = "0.1.0"

__all__ = [
    "AnalysisError", "ChainDecomposition", "ChainGraph", "ChainGraphParams", "ChainrecError",
    "Domain", "Grid", "SystemDef", "ValidationError", "build_chain_graph", "builtin",
    "parse_system", "piecewise", "scc_decompose", "subdivide",
]
