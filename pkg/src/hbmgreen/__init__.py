"""Green functions of hyperbolic Brownian motion on a horocyclic half-space.

Modules
-------
specfun      modified Bessel functions, the S_nu bracket, incomplete gamma
laplace      Laplace transforms forward and inverse
functionals  exponential functionals of Brownian motion with drift
besselproc   Bessel process kernels, free and killed at a level
hypgreen     potential kernel and Green function of HBM, with their comparators
mcsim        Monte Carlo oracles
cli          command-line driver
"""
from . import besselproc, functionals, hypgreen, laplace, mcsim, specfun
from ._accel import backend_name
from .errors import DomainError, HbmError, NumericalError
from .types import (BesselIndex, DriftParams, EvalResult, FunctionalState, HyperbolicPoint,
                    KernelQuery, KernelValue, MCEstimate, ModelParams, SimConfig)

__version__ = "0.1.0"

__all__ = [
    "specfun", "laplace", "functionals", "besselproc", "hypgreen", "mcsim",
    "backend_name", "HbmError", "DomainError", "NumericalError",
    "BesselIndex", "DriftParams", "EvalResult", "FunctionalState", "HyperbolicPoint",
    "KernelQuery", "KernelValue", "MCEstimate", "ModelParams", "SimConfig",
]
