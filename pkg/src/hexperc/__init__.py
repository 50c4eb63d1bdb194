"""Multi-fluid site percolation laboratory on hexagonal-cell patches."""

__version__ = "0.1.0"

from .lattice import HexCoord, Lattice, CellGraph, build_lattice, as_cell_graph, hex_distance
from .sampling import Coloring, RngStream, sample_coloring, enumerate_colorings
from .percolation import PercolationOutcome, plane_percolates, outcome

__all__ = [
    "__version__",
    "HexCoord",
    "Lattice",
    "CellGraph",
    "build_lattice",
    "as_cell_graph",
    "hex_distance",
    "Coloring",
    "RngStream",
    "sample_coloring",
    "enumerate_colorings",
    "PercolationOutcome",
    "plane_percolates",
    "outcome",
]
