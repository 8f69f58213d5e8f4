"""Numerical laboratory for Dirac operators with electrostatic and
Lorentz-scalar interface interactions: coupling rescaling calculus, fiber
operator discretization, resolvent-difference convergence measurements, and
the supercritical zero-mode counterexample machinery."""

from .coupling import Coupling, classify, inverse_design, rescale_magnetic, \
    rescale_squeezed
from .errors import ShellwaveError

__all__ = ["Coupling", "classify", "inverse_design", "rescale_magnetic",
           "rescale_squeezed", "ShellwaveError"]

__version__ = "0.1.0"
