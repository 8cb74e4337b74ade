"""Solver and verification toolkit for positive least-energy states of
coupled cubic Schrodinger systems with decaying potentials: constant
coefficient ground states, the energy landscape over a concentration region,
the penalized semiclassical problem, and the post-hoc decay battery.
"""

from ._kernels import backend

__version__ = "0.1.0"

__all__ = ["backend", "__version__"]
