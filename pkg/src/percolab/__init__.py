"""Bond percolation on high-dimensional transitive graphs: simulation and exact checks."""

__version__ = "0.1.0"

from .graphs import GraphSpec, build

__all__ = ["GraphSpec", "build", "__version__"]
