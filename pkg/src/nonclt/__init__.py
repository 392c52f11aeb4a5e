"""A stationary reversible Markov chain with fast absolute-regularity mixing
whose partial sums fail the central limit theorem.

Modules
-------
mixing      dependence coefficients of finite joint laws
block       the three-state building-block chain
limitlaw    the laws ``g[a, p]`` and the compound Poisson-Laplace limit
excursion   excursion sums and the block coupling
envelope    convex minorant of log-rates and tangent selection
recursion   per-level parameters and their validation
superposed  the truncated superposed chain and its probes
coding      injective perturbation coding of a finite base chain
cli         command-line front end
"""

from .block import BlockParams
from .errors import NoncltError
from .mixing import DiscretePMF, FiniteJoint

__version__ = "0.1.0"

__all__ = ["BlockParams", "DiscretePMF", "FiniteJoint", "NoncltError", "__version__"]
